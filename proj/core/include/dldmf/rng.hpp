#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dldmf {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// All randomness flows from one root seed, split per consumer by tag so
// adding a consumer never perturbs the streams of the others.
inline std::uint64_t split_seed(std::uint64_t root, std::string_view tag) {
  std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return splitmix64(root ^ splitmix64(h));
}

inline std::uint64_t split_seed(std::uint64_t root, std::string_view tag, std::uint64_t index) {
  return splitmix64(split_seed(root, tag) ^ splitmix64(index + 0x9E3779B97F4A7C15ull));
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace dldmf

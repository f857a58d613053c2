#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dldmf {

// Checkpoint wire format: magic "DLDMF\x01", then per tensor:
//   u32 LE name length, UTF-8 name, u32 rank, u32 dims..., f64 LE data.
struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<double> data;

  std::size_t element_count() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
};

void write_tensors(const std::filesystem::path& path, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> read_tensors(const std::filesystem::path& path);

}  // namespace dldmf

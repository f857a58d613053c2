#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "dldmf/model.hpp"

namespace dldmf::test {

// Standard gradient-check closeness: |a - b| <= atol + rtol * max(|a|, |b|).
inline bool close(double a, double b, double rtol, double atol = 1e-7) {
  return std::abs(a - b) <= atol + rtol * std::max(std::abs(a), std::abs(b));
}

inline double rel_err(double a, double b) {
  const double denom = std::max(std::abs(a), std::abs(b));
  return denom == 0.0 ? 0.0 : std::abs(a - b) / denom;
}

// Small model that keeps finite-difference probes fast.
inline ModelConfig tiny_config(std::uint64_t seed = 7) {
  ModelConfig cfg;
  cfg.spatial_dim = 8;
  cfg.param_dim = 8;
  cfg.latent_dim = 4;
  cfg.spatial_hidden = {16, 16};
  cfg.param_hidden = {16};
  cfg.latent_init_hidden = {16};
  cfg.dynamics_hidden = {16, 16};
  cfg.time_encoder_hidden = {16, 16};
  cfg.decoder_depth = 4;
  cfg.decoder_width = 16;
  cfg.seed = seed;
  return cfg;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("dldmf_test_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace dldmf::test

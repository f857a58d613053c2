#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dldmf {

// Flat storage for every learnable scalar of a model. Networks hold offsets
// into it; the optimizer walks it as one array. `trainable` is the freeze
// mask used by fine-tuning.
struct ParamStore {
  std::vector<double> values;
  std::vector<std::uint8_t> trainable;

  std::uint32_t allocate(std::size_t n, bool learnable = true) {
    const auto off = static_cast<std::uint32_t>(values.size());
    values.resize(values.size() + n, 0.0);
    trainable.resize(trainable.size() + n, learnable ? 1 : 0);
    return off;
  }

  std::size_t size() const { return values.size(); }

  const double* data(std::uint32_t off) const { return values.data() + off; }
  double* data(std::uint32_t off) { return values.data() + off; }

  std::span<const double> view(std::uint32_t off, std::size_t n) const {
    return {values.data() + off, n};
  }
  std::span<double> view(std::uint32_t off, std::size_t n) {
    return {values.data() + off, n};
  }

  void set_trainable(std::uint32_t off, std::size_t n, bool learnable) {
    for (std::size_t i = 0; i < n; ++i) trainable[off + i] = learnable ? 1 : 0;
  }
  void freeze_all() {
    for (auto& t : trainable) t = 0;
  }
};

}  // namespace dldmf

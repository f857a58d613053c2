#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace dldmf {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Entries with mask 0 are skipped entirely, so
// frozen parameters stay bit-identical.
struct Adam {
  AdamConfig cfg;
  std::vector<double> m, v;
  long t = 0;

  explicit Adam(AdamConfig c = {}) : cfg(c) {}

  void reset(std::size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
    t = 0;
  }

  void step(std::span<double> params, std::span<const double> grad,
            std::span<const std::uint8_t> mask) {
    ++t;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!mask[i]) continue;
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
};

}  // namespace dldmf

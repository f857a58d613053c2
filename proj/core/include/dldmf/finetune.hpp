#pragma once

#include "dldmf/model.hpp"
#include "dldmf/trainer.hpp"

namespace dldmf {

struct FinetuneConfig {
  PdeParams query;
  int steps = 2000;
  double lr = 1e-3;
  // "It is an option" to also train the first and last decoder layers;
  // frozen by default.
  bool train_first_last = false;
  double w1 = 1.0, w2 = 1.0, w3 = 1.0;
  int n_f = 128, n_u = 64, n_b = 32;
  std::uint64_t seed = 0;
};

// Rewrites the hidden decoder layers l = 2..D_g-1 as psi diag(alpha) phi^T
// with frozen orthonormal factors; only the alpha vectors stay learnable.
// The forward pass is unchanged up to the SVD reconstruction error.
void factor_decoder(Model& model);

// Number of learnable scalars after factoring: sum of min(out, in) over the
// modulated layers.
std::size_t modulated_parameter_count(const Model& model);

// Adam over the alpha vectors only (plus optionally the first/last decoder
// layers), minimizing the physics losses restricted to cfg.query. Every
// frozen parameter is bit-identical before and after.
std::vector<TrainLogRecord> finetune(Model& model, const FinetuneConfig& cfg,
                                     const DomainSpec& domain);

}  // namespace dldmf

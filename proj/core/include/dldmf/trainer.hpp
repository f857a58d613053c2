#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "dldmf/adam.hpp"
#include "dldmf/model.hpp"
#include "dldmf/physics.hpp"

namespace dldmf {

// Training mu set: a Cartesian grid over the active coefficients; inactive
// coefficients are pinned to 0.
struct MuSetSpec {
  std::array<double, 3> lo{1.0, 0.0, 0.0};
  std::array<double, 3> hi{5.0, 0.0, 0.0};
  std::array<int, 3> points{5, 1, 1};
  std::array<bool, 3> active{true, false, false};
};

std::vector<PdeParams> make_mu_set(const MuSetSpec& spec);

struct TrainConfig {
  double w1 = 1.0, w2 = 1.0, w3 = 1.0;  // L_u, L_f, L_b weights
  AdamConfig adam;
  int steps = 20000;
  int mu_batch = 8;
  int n_f = 128, n_u = 64, n_b = 32;  // collocation counts per instance
  std::uint64_t seed = 0;
  int checkpoint_every = 2000;  // 0 disables periodic checkpoints
  int probe_every = 1000;       // cadence of the should_stop hook (0 disables)
  MuSetSpec mu_set;
  // When set, the same batch is resampled every step from this fixed seed
  // instead of a fresh one (used by descent-on-fixed-objective tests).
  bool freeze_sampling = false;
};

struct TrainLogRecord {
  int step = 0;
  double l_u = 0, l_f = 0, l_b = 0, total = 0;
  double seconds = 0;
};

struct LossParts {
  double l_u = 0, l_f = 0, l_b = 0;
  double total(double w1, double w2, double w3) const {
    return w1 * l_u + w2 * l_f + w3 * l_b;
  }
};

// Loss terms of one collocation batch against an arbitrary point evaluator.
// The evaluator is queried per instance in batch order; the double mean
// (per instance, then across instances) matches the training objective.
LossParts compute_losses(const std::function<const PointEvaluator&(std::size_t)>& evaluator_for,
                         const CollocationBatch& batch, const DomainSpec& domain);
LossParts compute_losses(const PointEvaluator& evaluator, const CollocationBatch& batch,
                         const DomainSpec& domain);
LossParts compute_losses(const Model& model, const CollocationBatch& batch,
                         const DomainSpec& domain);

struct TrainHooks {
  // Called at the checkpoint cadence and after the final step.
  std::function<void(int step, const Model&)> on_checkpoint;
  // Called at the probe cadence; returning true stops training early.
  std::function<bool(int step, Model&)> should_stop;
};

// Adam pre-training of the physics losses over mini-batches of parameter
// instances. Deterministic given cfg.seed. Throws TrainDivergedError on a
// non-finite loss.
std::vector<TrainLogRecord> train(Model& model, const TrainConfig& cfg, const DomainSpec& domain,
                                  const TrainHooks& hooks = {});

// One traced loss + gradient evaluation over a fixed batch (the machinery
// behind train(), exposed for gradient checks). Gradient is accumulated into
// grad (size = model.params.size()).
LossParts loss_and_gradient(const Model& model, const CollocationBatch& batch,
                            const DomainSpec& domain, double w1, double w2, double w3,
                            std::span<double> grad);

void write_train_log(const std::filesystem::path& path, std::span<const TrainLogRecord> log);

}  // namespace dldmf

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dldmf/metrics.hpp"
#include "dldmf/reference_solver.hpp"

namespace dldmf {

// What to evaluate and how to tag it.
struct EvalPlan {
  double t_train = 1.0;
  std::array<double, 3> train_lo{1.0, 0.0, 0.0};  // hull of the training mu ranges
  std::array<double, 3> train_hi{5.0, 0.0, 0.0};
  std::vector<PdeParams> train_mus;  // exact grid, for the train tag
  // Iterative window protocol for models without native beyond-horizon
  // output (the autodecode ablation re-decodes each window's start).
  bool rollout = false;
  int autodecode_steps = 100;
  double autodecode_rate = 1e-2;
};

MuRegime classify_mu(const EvalPlan& plan, const PdeParams& mu);

// Anything that can fill a reference-shaped grid with predictions.
class GridPredictor {
 public:
  virtual ~GridPredictor() = default;
  virtual std::vector<double> predict(const SolutionGrid& ref) const = 0;
  virtual std::string name() const = 0;
};

class ModelGridPredictor final : public GridPredictor {
 public:
  ModelGridPredictor(const Model& m, const EvalPlan& plan) : model_(&m), plan_(&plan) {}
  std::vector<double> predict(const SolutionGrid& ref) const override;
  std::string name() const override { return to_string(model_->kind); }

 private:
  const Model* model_;
  const EvalPlan* plan_;
};

// Per (mu, time regime) records; the Out-t record is omitted when the split
// leaves it empty. Latency covers one full parameter query (encode through
// grid decode).
std::vector<MetricsRecord> evaluate_model(const GridPredictor& pred, const EvalPlan& plan,
                                          std::span<const SolutionGrid> references);

struct RegimeSummary {
  TimeRegime time_regime;
  MuRegime mu_regime;
  int count = 0;
  double mean_l2_rel = 0.0;
  double std_l2_rel = 0.0;
  double mean_max_err = 0.0;
  double mean_exp_var = 0.0;
};

std::vector<RegimeSummary> summarize(std::span<const MetricsRecord> records);

// Latency statistics of the inference paths.
struct TimingStats {
  std::vector<double> feedforward_ms;  // encode mu -> z_0 (0 gradient steps)
  std::vector<double> full_query_ms;   // encode -> z_0 -> integrate -> decode grid
  std::vector<double> autodecode_ms;   // K-step auto-decoding inference
  int feedforward_grad_steps = 0;
  int autodecode_grad_steps = 0;

  double median_feedforward_ms() const;
  double median_full_query_ms() const;
  double median_autodecode_ms() const;
};

TimingStats timing_probe(const Model& model, const DomainSpec& domain, int n_queries,
                         int autodecode_steps = 100, double autodecode_rate = 1e-2,
                         std::uint64_t seed = 0);

void write_results_csv(const std::filesystem::path& path, const std::string& model_name,
                       ModelKind kind, std::span<const MetricsRecord> records);

// Two-column x / u_hat tables per snapshot time for external plotting.
void write_plot_data(const std::filesystem::path& dir, const std::string& model_name,
                     const SolutionGrid& ref, std::span<const double> pred,
                     std::span<const double> snapshot_times);

}  // namespace dldmf

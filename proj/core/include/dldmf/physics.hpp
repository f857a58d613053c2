#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dldmf/model.hpp"

namespace dldmf {

enum class IcKind : std::uint8_t { Gaussian = 0, OnePlusSin = 1 };

const char* to_string(IcKind k);
IcKind ic_from_string(std::string_view s);

// Spatial domain [0, 2pi] with periodic boundary u(0,t) = u(2pi,t); training
// horizon [0, t_train], evaluation horizon [0, t_test].
struct DomainSpec {
  double x_min = 0.0;
  double x_max = 6.283185307179586476925286766559;
  double t_train = 1.0;
  double t_test = 10.0;
  IcKind ic = IcKind::Gaussian;
};

// gaussian: exp(-(x-pi)^2 / (2 (pi/2)^2)); one_plus_sin: 1 + sin x.
double initial_condition(double x, IcKind kind);

// Sampled points for one optimization step, grouped per parameter instance.
struct CollocationBatch {
  struct XT {
    double x, t;
  };
  std::vector<PdeParams> mus;
  std::vector<std::vector<XT>> residual_pts;    // C_f
  std::vector<std::vector<double>> initial_xs;  // C_u (t = 0)
  std::vector<std::vector<double>> boundary_ts; // C_b (pairs x = 0 / x = 2pi)
};

CollocationBatch sample_collocation(const DomainSpec& domain, std::span<const PdeParams> mus,
                                    int n_f, int n_u, int n_b, std::uint64_t seed);

// Anything that can report u and its derivatives at a fused query.
class PointEvaluator {
 public:
  virtual ~PointEvaluator() = default;
  virtual PointDerivatives point_eval(const FusedQuery& q) const = 0;
};

class ModelPointEvaluator final : public PointEvaluator {
 public:
  ModelPointEvaluator(const Model& m, const LatentTrajectory* cache = nullptr)
      : model_(&m), cache_(cache) {}
  PointDerivatives point_eval(const FusedQuery& q) const override {
    return model_->point_eval(q, cache_);
  }

 private:
  const Model* model_;
  const LatentTrajectory* cache_;
};

// CDR residual r = dt u + beta u_x - nu u_xx - rho u (1 - u).
double residual(const FusedQuery& q, const PointEvaluator& m);

inline double residual_from(const PointDerivatives& d, const PdeParams& mu) {
  return d.u_t + mu.beta * d.u_x - mu.nu * d.u_xx - mu.rho * d.u * (1.0 - d.u);
}

}  // namespace dldmf

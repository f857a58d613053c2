#include "dldmf/physics.hpp"

#include <cmath>

#include "dldmf/errors.hpp"
#include "dldmf/rng.hpp"

namespace dldmf {

namespace {
constexpr double kPi = 3.141592653589793238462643383280;
}

const char* to_string(IcKind k) {
  return k == IcKind::Gaussian ? "gaussian" : "one_plus_sin";
}

IcKind ic_from_string(std::string_view s) {
  if (s == "gaussian") return IcKind::Gaussian;
  if (s == "one_plus_sin") return IcKind::OnePlusSin;
  throw ConfigError("unknown initial condition '" + std::string(s) + "'");
}

double initial_condition(double x, IcKind kind) {
  if (kind == IcKind::Gaussian) {
    const double s = kPi / 2.0;
    const double d = x - kPi;
    return std::exp(-d * d / (2.0 * s * s));
  }
  return 1.0 + std::sin(x);
}

CollocationBatch sample_collocation(const DomainSpec& domain, std::span<const PdeParams> mus,
                                    int n_f, int n_u, int n_b, std::uint64_t seed) {
  if (mus.empty()) throw ConfigError("sample_collocation: empty parameter batch");
  if (n_f <= 0 || n_u <= 0 || n_b <= 0)
    throw ConfigError("sample_collocation: counts must be positive");
  if (!(domain.t_train > 0.0) || !(domain.t_test > domain.t_train))
    throw ConfigError("sample_collocation: need 0 < t_train < t_test");

  CollocationBatch batch;
  batch.mus.assign(mus.begin(), mus.end());
  batch.residual_pts.resize(mus.size());
  batch.initial_xs.resize(mus.size());
  batch.boundary_ts.resize(mus.size());

  Rng rng(split_seed(seed, "collocation"));
  for (std::size_t i = 0; i < mus.size(); ++i) {
    auto& res = batch.residual_pts[i];
    res.reserve(n_f);
    for (int j = 0; j < n_f; ++j) {
      const double x = uniform(rng, domain.x_min, domain.x_max);
      const double t = uniform(rng, 0.0, domain.t_train);
      res.push_back({x, t});
    }
    auto& init = batch.initial_xs[i];
    init.reserve(n_u);
    for (int j = 0; j < n_u; ++j) init.push_back(uniform(rng, domain.x_min, domain.x_max));
    auto& bnd = batch.boundary_ts[i];
    bnd.reserve(n_b);
    for (int j = 0; j < n_b; ++j) bnd.push_back(uniform(rng, 0.0, domain.t_train));
  }
  return batch;
}

double residual(const FusedQuery& q, const PointEvaluator& m) {
  return residual_from(m.point_eval(q), q.mu);
}

}  // namespace dldmf

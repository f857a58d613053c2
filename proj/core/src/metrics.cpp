#include "dldmf/metrics.hpp"

#include <cmath>

#include "dldmf/errors.hpp"

namespace dldmf {

const char* to_string(TimeRegime r) { return r == TimeRegime::InT ? "in_t" : "out_t"; }

const char* to_string(MuRegime r) {
  switch (r) {
    case MuRegime::Train: return "train";
    case MuRegime::InMu: return "in_mu";
    case MuRegime::OutMu: return "out_mu";
  }
  return "?";
}

Metrics metrics(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw DimensionError("metrics: prediction and truth grids must match and be non-empty");
  const double n = static_cast<double>(pred.size());

  double sq_err = 0.0, sq_truth = 0.0, max_err = 0.0;
  double sum_d = 0.0, sum_u = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    sq_err += d * d;
    sq_truth += truth[i] * truth[i];
    max_err = std::max(max_err, std::abs(d));
    sum_d += d;
    sum_u += truth[i];
  }

  Metrics m;
  m.l2_abs = std::sqrt(sq_err);
  m.max_err = max_err;
  const double truth_norm = std::sqrt(sq_truth);
  if (truth_norm > 0.0) {
    m.l2_rel = m.l2_abs / truth_norm;
    m.rel_defined = true;
  } else {
    m.l2_rel = 0.0;
    m.rel_defined = m.l2_abs == 0.0;
  }

  // Two-pass population variances, so a constant offset has residual
  // variance exactly zero.
  const double mean_d = sum_d / n;
  const double mean_u = sum_u / n;
  double var_d = 0.0, var_u = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double dd = (pred[i] - truth[i]) - mean_d;
    var_d += dd * dd;
    const double du = truth[i] - mean_u;
    var_u += du * du;
  }
  var_d /= n;
  var_u /= n;
  if (var_u > 0.0) {
    m.explained_variance = 1.0 - var_d / var_u;
  } else {
    m.explained_variance = var_d <= 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
  }
  return m;
}

}  // namespace dldmf

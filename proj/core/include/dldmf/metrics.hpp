#pragma once

#include <span>
#include <string>

#include "dldmf/model.hpp"

namespace dldmf {

enum class TimeRegime : std::uint8_t { InT, OutT };
enum class MuRegime : std::uint8_t { Train, InMu, OutMu };

const char* to_string(TimeRegime r);
const char* to_string(MuRegime r);

// l2_rel = l2_abs / ||u||2 when ||u||2 > 0, else undefined (rel_defined
// false). explained_variance = 1 - Var(u - u_hat) / Var(u) with pooled
// population variance; it is exactly 1 for constant-offset predictions.
struct Metrics {
  double l2_abs = 0.0;
  double l2_rel = 0.0;
  double max_err = 0.0;
  double explained_variance = 1.0;
  bool rel_defined = true;
};

Metrics metrics(std::span<const double> pred, std::span<const double> truth);

struct MetricsRecord {
  Metrics m;
  TimeRegime time_regime = TimeRegime::InT;
  MuRegime mu_regime = MuRegime::Train;
  PdeParams mu;
  double latency_ms = 0.0;
};

}  // namespace dldmf

#pragma once

#include <stdexcept>
#include <string>

namespace dldmf {

// Fatal configuration problems: bad widths, empty batches, invalid keys.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape disagreement between data and a consumer.
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite state during latent integration; carries the failure time.
struct IntegrationDivergedError : std::runtime_error {
  double t;
  explicit IntegrationDivergedError(double time)
      : std::runtime_error("latent integration diverged at t = " + std::to_string(time)),
        t(time) {}
};

// Query beyond step * max_steps.
struct IntegrationHorizonError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverDivergedError : std::runtime_error {
  double t;
  explicit SolverDivergedError(double time)
      : std::runtime_error("reference solve diverged at t = " + std::to_string(time)),
        t(time) {}
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainDivergedError : std::runtime_error {
  int step;
  TrainDivergedError(int at_step, const std::string& detail)
      : std::runtime_error("training diverged at step " + std::to_string(at_step) + ": " + detail),
        step(at_step) {}
};

}  // namespace dldmf

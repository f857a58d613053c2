#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dldmf/network.hpp"
#include "dldmf/tape.hpp"

namespace dldmf {

// Time-evolving latent state z_t.
struct LatentState {
  std::vector<double> z;
  double t = 0.0;
};

// Fixed-step classical RK4; queries off the step grid are reached by a
// shortened substep and integration continues from them. The step grid is
// anchored at multiples of `step` from t = 0.
struct IntegratorConfig {
  double step = 1e-2;
  long max_steps = 10'000'000;
};

using VelocityFn = std::function<void(std::span<const double>, std::span<double>)>;

// The step boundaries the fixed-step walker visits from t_from to cover every
// query: full steps to grid points plus shortened substeps landing exactly on
// queries. times[0] == t_from; query_pos[i] indexes the state at t_query[i].
struct StepSchedule {
  std::vector<double> times;
  std::vector<std::size_t> query_pos;
};

StepSchedule step_schedule(double t_from, std::span<const double> t_query,
                           const IntegratorConfig& cfg);

// z at each queried time (ascending, all >= z0.t). Throws
// IntegrationHorizonError when the horizon exceeds step * max_steps and
// IntegrationDivergedError on non-finite state.
std::vector<LatentState> integrate_field(const VelocityFn& f, const LatentState& z0,
                                         std::span<const double> t_query,
                                         const IntegratorConfig& cfg);

// One classical RK4 step in place; the k-combination grouping is fixed and
// shared with the traced variant.
void rk4_step_inplace(const VelocityFn& f, std::vector<double>& z, double dt,
                      std::vector<double>& k1, std::vector<double>& k2, std::vector<double>& k3,
                      std::vector<double>& k4, std::vector<double>& tmp);

// Feed-forward latent initialization z_0 = g_theta0(h_param) at t = 0.
LatentState init_latent(std::span<const double> h_param, const Network& latent_init_net,
                        const ParamStore& ps);

// dz/dt = f_thetaf([z; h_param]).
void latent_velocity(std::span<const double> z, std::span<const double> h_param,
                     const Network& dynamics, const ParamStore& ps, std::span<double> out);

std::vector<LatentState> integrate(const LatentState& z0, std::span<const double> h_param,
                                   const Network& dynamics, const ParamStore& ps,
                                   std::span<const double> t_query, const IntegratorConfig& cfg);

// Records one RK4 step onto a tape. z nodes must be contiguous; h_param nodes
// need not be (they are copied per stage). Returns the first node of the new
// contiguous z range.
std::uint32_t trace_rk4_step(Tape<double>& tp, const Network& dynamics, std::uint32_t z_begin,
                             int dz, std::uint32_t h_begin, int dh, double dt);

// Records a velocity evaluation; returns the first of dz contiguous nodes.
std::uint32_t trace_velocity(Tape<double>& tp, const Network& dynamics, std::uint32_t z_begin,
                             int dz, std::uint32_t h_begin, int dh);

}  // namespace dldmf

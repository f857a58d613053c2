#include "dldmf/integrate.hpp"

#include <cmath>

#include "dldmf/errors.hpp"

namespace dldmf {

namespace {

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

// z' = z + (dt/6) * ((k1 + k4) + 2*(k2 + k3)); the traced step uses the same
// grouping so recomputed values match.
void rk4_step_inplace(const VelocityFn& f, std::vector<double>& z, double dt,
                      std::vector<double>& k1, std::vector<double>& k2, std::vector<double>& k3,
                      std::vector<double>& k4, std::vector<double>& tmp) {
  const std::size_t n = z.size();
  f(z, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = z[i] + (dt / 2.0) * k1[i];
  f(tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = z[i] + (dt / 2.0) * k2[i];
  f(tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = z[i] + dt * k3[i];
  f(tmp, k4);
  for (std::size_t i = 0; i < n; ++i)
    z[i] += (dt / 6.0) * ((k1[i] + k4[i]) + 2.0 * (k2[i] + k3[i]));
}

StepSchedule step_schedule(double t_from, std::span<const double> t_query,
                           const IntegratorConfig& cfg) {
  if (cfg.step <= 0.0) throw ConfigError("integrator: step must be positive");
  const double tol = cfg.step * 1e-9;
  for (std::size_t i = 0; i + 1 < t_query.size(); ++i)
    if (t_query[i + 1] < t_query[i])
      throw ConfigError("integrator: query times must be ascending");
  if (!t_query.empty() && t_query.front() < t_from - tol)
    throw ConfigError("integrator: query precedes the start time");
  if (!t_query.empty() &&
      t_query.back() - t_from > cfg.step * static_cast<double>(cfg.max_steps) + tol)
    throw IntegrationHorizonError("integrator: query horizon " +
                                  std::to_string(t_query.back()) +
                                  " exceeds step * max_steps");

  StepSchedule s;
  s.times.push_back(t_from);
  double t = t_from;
  for (double q : t_query) {
    while (q > t + tol) {
      const long k = static_cast<long>(std::floor(t / cfg.step + 1e-9));
      double next = cfg.step * static_cast<double>(k + 1);
      if (next > q - tol) next = q;
      s.times.push_back(next);
      t = next;
      if (static_cast<long>(s.times.size()) - 1 > cfg.max_steps)
        throw IntegrationHorizonError("integrator: exceeded max_steps");
    }
    s.query_pos.push_back(s.times.size() - 1);
  }
  return s;
}

std::vector<LatentState> integrate_field(const VelocityFn& f, const LatentState& z0,
                                         std::span<const double> t_query,
                                         const IntegratorConfig& cfg) {
  std::vector<LatentState> out;
  out.reserve(t_query.size());
  if (t_query.empty()) return out;

  const StepSchedule sched = step_schedule(z0.t, t_query, cfg);
  std::vector<double> z(z0.z.begin(), z0.z.end());
  const std::size_t n = z.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);

  std::size_t qi = 0;
  for (std::size_t s = 0; s < sched.times.size(); ++s) {
    if (s > 0) {
      rk4_step_inplace(f, z, sched.times[s] - sched.times[s - 1], k1, k2, k3, k4, tmp);
      if (!all_finite(z)) throw IntegrationDivergedError(sched.times[s]);
    }
    while (qi < sched.query_pos.size() && sched.query_pos[qi] == s) {
      out.push_back(LatentState{z, t_query[qi]});
      ++qi;
    }
  }
  return out;
}

LatentState init_latent(std::span<const double> h_param, const Network& latent_init_net,
                        const ParamStore& ps) {
  LatentState s;
  s.z = eval_net<double>(latent_init_net, ps, h_param);
  s.t = 0.0;
  return s;
}

void latent_velocity(std::span<const double> z, std::span<const double> h_param,
                     const Network& dynamics, const ParamStore& ps, std::span<double> out) {
  std::vector<double> in(z.size() + h_param.size());
  std::copy(z.begin(), z.end(), in.begin());
  std::copy(h_param.begin(), h_param.end(), in.begin() + z.size());
  std::vector<double> y, scratch;
  eval_net<double>(dynamics, ps, in, y, scratch);
  if (y.size() != out.size()) throw DimensionError("latent_velocity: output width mismatch");
  std::copy(y.begin(), y.end(), out.begin());
}

std::vector<LatentState> integrate(const LatentState& z0, std::span<const double> h_param,
                                   const Network& dynamics, const ParamStore& ps,
                                   std::span<const double> t_query, const IntegratorConfig& cfg) {
  if (static_cast<int>(z0.z.size() + h_param.size()) != dynamics.input_width())
    throw DimensionError("integrate: [z; h_param] width does not match the dynamics net");
  std::vector<double> in(z0.z.size() + h_param.size());
  std::copy(h_param.begin(), h_param.end(), in.begin() + z0.z.size());
  std::vector<double> y, scratch;
  VelocityFn f = [&](std::span<const double> z, std::span<double> dz) {
    std::copy(z.begin(), z.end(), in.begin());
    eval_net<double>(dynamics, ps, in, y, scratch);
    std::copy(y.begin(), y.end(), dz.begin());
  };
  return integrate_field(f, z0, t_query, cfg);
}

namespace {

// Builds a contiguous [z; h] input range out of copies.
std::uint32_t copy_concat(Tape<double>& tp, std::uint32_t z_begin, int dz, std::uint32_t h_begin,
                          int dh) {
  std::uint32_t first = 0;
  for (int i = 0; i < dz; ++i) {
    std::uint32_t node = tp.copy(z_begin + static_cast<std::uint32_t>(i));
    if (i == 0) first = node;
  }
  for (int i = 0; i < dh; ++i) tp.copy(h_begin + static_cast<std::uint32_t>(i));
  return first;
}

}  // namespace

std::uint32_t trace_velocity(Tape<double>& tp, const Network& dynamics, std::uint32_t z_begin,
                             int dz, std::uint32_t h_begin, int dh) {
  std::uint32_t in = copy_concat(tp, z_begin, dz, h_begin, dh);
  return trace_net(tp, dynamics, in, dz + dh);
}

std::uint32_t trace_rk4_step(Tape<double>& tp, const Network& dynamics, std::uint32_t z_begin,
                             int dz, std::uint32_t h_begin, int dh, double dt) {
  const std::uint32_t half = tp.leaf(dt / 2.0);
  const std::uint32_t full = tp.leaf(dt);
  const std::uint32_t sixth = tp.leaf(dt / 6.0);
  const std::uint32_t two = tp.leaf(2.0);

  auto stage_input = [&](std::uint32_t k_begin, std::uint32_t scale) {
    std::vector<std::uint32_t> scaled(dz);
    for (int i = 0; i < dz; ++i)
      scaled[i] = tp.mul(scale, k_begin + static_cast<std::uint32_t>(i));
    std::uint32_t first = 0;
    for (int i = 0; i < dz; ++i) {
      std::uint32_t node = tp.add(z_begin + static_cast<std::uint32_t>(i), scaled[i]);
      if (i == 0) first = node;
    }
    for (int i = 0; i < dh; ++i) tp.copy(h_begin + static_cast<std::uint32_t>(i));
    return first;
  };

  std::uint32_t in1 = copy_concat(tp, z_begin, dz, h_begin, dh);
  std::uint32_t k1 = trace_net(tp, dynamics, in1, dz + dh);
  std::uint32_t k2 = trace_net(tp, dynamics, stage_input(k1, half), dz + dh);
  std::uint32_t k3 = trace_net(tp, dynamics, stage_input(k2, half), dz + dh);
  std::uint32_t k4 = trace_net(tp, dynamics, stage_input(k3, full), dz + dh);

  std::vector<std::uint32_t> outer(dz), inner(dz), comb(dz), scaled(dz);
  for (int i = 0; i < dz; ++i)
    outer[i] = tp.add(k1 + static_cast<std::uint32_t>(i), k4 + static_cast<std::uint32_t>(i));
  for (int i = 0; i < dz; ++i)
    inner[i] = tp.add(k2 + static_cast<std::uint32_t>(i), k3 + static_cast<std::uint32_t>(i));
  for (int i = 0; i < dz; ++i) comb[i] = tp.add(outer[i], tp.mul(two, inner[i]));
  for (int i = 0; i < dz; ++i) scaled[i] = tp.mul(sixth, comb[i]);
  std::uint32_t first = 0;
  for (int i = 0; i < dz; ++i) {
    std::uint32_t node = tp.add(z_begin + static_cast<std::uint32_t>(i), scaled[i]);
    if (i == 0) first = node;
  }
  return first;
}

}  // namespace dldmf

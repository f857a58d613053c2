#include <doctest.h>

#include <cmath>

#include "dldmf/errors.hpp"
#include "dldmf/integrate.hpp"
#include "dldmf/rng.hpp"
#include "helpers.hpp"

using namespace dldmf;
using test::close;

namespace {

// f(z) = z as a single hand-set identity layer.
Network linear_dynamics(ParamStore& ps) {
  Rng rng(1);
  Network net = build_dense(ps, "dynamics", {1, 1}, rng);
  const auto& l = std::get<DenseLayer>(net.layers[0]);
  ps.values[l.w] = 1.0;
  ps.values[l.b] = 0.0;
  return net;
}

}  // namespace

TEST_CASE("integrate: frozen zero field keeps the state constant") {
  ParamStore ps;
  Rng rng(2);
  Network net = build_dense(ps, "dynamics", {3, 8, 3}, rng);
  for (auto& v : ps.values) v = 0.0;
  LatentState z0{{0.3, -0.7, 1.1}, 0.0};
  const std::vector<double> tq{0.25, 0.5, 1.0};
  const auto out = integrate(z0, {}, net, ps, tq, {});
  for (const auto& s : out)
    for (int i = 0; i < 3; ++i) CHECK(s.z[i] == z0.z[i]);
}

TEST_CASE("integrate: exponential growth matches the closed form") {
  ParamStore ps;
  const Network net = linear_dynamics(ps);
  LatentState z0{{1.0}, 0.0};
  IntegratorConfig cfg;
  cfg.step = 1e-3;
  const std::vector<double> tq{1.0};
  const auto out = integrate(z0, {}, net, ps, tq, cfg);
  CHECK(std::abs(out[0].z[0] - 2.718282) < 1e-5);
}

TEST_CASE("integrate_field: logistic flow matches the closed form") {
  VelocityFn f = [](std::span<const double> z, std::span<double> dz) {
    dz[0] = z[0] * (1.0 - z[0]);
  };
  LatentState z0{{0.5}, 0.0};
  IntegratorConfig cfg;
  cfg.step = 1e-3;
  const std::vector<double> tq{1.0};
  const auto out = integrate_field(f, z0, tq, cfg);
  const double expect = std::exp(1.0) / (1.0 + std::exp(1.0));  // 0.731059
  CHECK(std::abs(out[0].z[0] - expect) < 1e-5);
  CHECK(std::abs(out[0].z[0] - 0.731059) < 1e-5);
}

TEST_CASE("integrate: rk4 gains ~16x accuracy per halved step") {
  ParamStore ps;
  const Network net = linear_dynamics(ps);
  LatentState z0{{1.0}, 0.0};
  const std::vector<double> tq{1.0};
  auto err_at = [&](double step) {
    IntegratorConfig cfg;
    cfg.step = step;
    const auto out = integrate(z0, {}, net, ps, tq, cfg);
    return std::abs(out[0].z[0] - std::exp(1.0));
  };
  const double ratio = err_at(0.05) / err_at(0.025);
  CHECK(ratio > 12.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("integrate: semigroup property on grid-aligned restarts") {
  ParamStore ps;
  Rng rng(3);
  const Network net = build_dense(ps, "dynamics", {4, 16, 4}, rng);
  LatentState z0{{0.2, -0.1, 0.4, 0.05}, 0.0};
  IntegratorConfig cfg;

  const std::vector<double> both{0.2, 0.37};
  const auto direct = integrate(z0, {}, net, ps, both, cfg);

  LatentState mid{direct[0].z, 0.2};
  const std::vector<double> rest{0.37};
  const auto chained = integrate(mid, {}, net, ps, rest, cfg);
  for (int i = 0; i < 4; ++i)
    CHECK(std::abs(chained[0].z[i] - direct[1].z[i]) < 1e-9);
}

TEST_CASE("latent_velocity: matches central differences of the trajectory") {
  ParamStore ps;
  Rng rng(4);
  const Network net = build_dense(ps, "dynamics", {6, 16, 4}, rng);
  std::vector<double> h_param{0.3, -0.2};
  LatentState z0{{0.1, 0.2, -0.3, 0.4}, 0.0};
  IntegratorConfig cfg;

  const double t = 0.4137;
  const double h = 1e-4;
  const std::vector<double> tq{t - h, t, t + h};
  const auto out = integrate(z0, h_param, net, ps, tq, cfg);

  std::vector<double> v(4);
  latent_velocity(out[1].z, h_param, net, ps, v);
  for (int i = 0; i < 4; ++i) {
    const double fd = (out[2].z[i] - out[0].z[i]) / (2.0 * h);
    CHECK(test::rel_err(v[i], fd) < 1e-6);
  }
}

TEST_CASE("latent_velocity: zero net gives the zero vector") {
  ParamStore ps;
  Rng rng(5);
  const Network net = build_dense(ps, "dynamics", {4, 8, 2}, rng);
  for (auto& v : ps.values) v = 0.0;
  std::vector<double> out(2, 7.0);
  latent_velocity(std::vector<double>{1.0, 2.0}, std::vector<double>{3.0, 4.0}, net, ps, out);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 0.0);
}

TEST_CASE("init_latent: zero weights return the bias vector; deterministic") {
  ParamStore ps;
  Rng rng(6);
  const Network net = build_dense(ps, "latent_init", {3, 8, 2}, rng);
  for (auto& v : ps.values) v = 0.0;
  const auto& last = std::get<DenseLayer>(net.layers.back());
  ps.values[last.b] = 0.5;
  ps.values[last.b + 1] = -0.25;
  const std::vector<double> h{0.1, 0.2, 0.3};
  const auto a = init_latent(h, net, ps);
  const auto b = init_latent(h, net, ps);
  CHECK(a.z[0] == 0.5);
  CHECK(a.z[1] == -0.25);
  CHECK(a.t == 0.0);
  CHECK(a.z == b.z);
}

TEST_CASE("integrate: horizon beyond step * max_steps is rejected") {
  ParamStore ps;
  const Network net = linear_dynamics(ps);
  LatentState z0{{1.0}, 0.0};
  IntegratorConfig cfg;
  cfg.step = 0.01;
  cfg.max_steps = 10;
  const std::vector<double> tq{1.0};
  CHECK_THROWS_AS(integrate(z0, {}, net, ps, tq, cfg), IntegrationHorizonError);
}

TEST_CASE("integrate_field: divergence carries the failure time") {
  VelocityFn f = [](std::span<const double> z, std::span<double> dz) {
    dz[0] = z[0] * z[0];  // finite-time blow-up of z' = z^2
  };
  LatentState z0{{20.0}, 0.0};
  IntegratorConfig cfg;
  cfg.step = 0.05;
  const std::vector<double> tq{5.0};
  try {
    integrate_field(f, z0, tq, cfg);
    FAIL("expected divergence");
  } catch (const IntegrationDivergedError& e) {
    CHECK(e.t > 0.0);
    CHECK(e.t <= 5.0);
  }
}

TEST_CASE("integrate: query times must ascend") {
  ParamStore ps;
  const Network net = linear_dynamics(ps);
  LatentState z0{{1.0}, 0.0};
  const std::vector<double> tq{0.5, 0.25};
  CHECK_THROWS_AS(integrate(z0, {}, net, ps, tq, {}), ConfigError);
}

TEST_CASE("trace_rk4_step: gradients through all stages match finite differences") {
  ParamStore ps;
  Rng rng(7);
  const Network net = build_dense(ps, "dynamics", {5, 12, 3}, rng);
  const std::vector<double> h_param{0.4, -0.6};
  const std::vector<double> z0{0.3, -0.2, 0.5};
  const double total_t = 0.2;
  const int nsteps = 4;

  auto endpoint_loss = [&]() {
    LatentState s{z0, 0.0};
    IntegratorConfig cfg;
    cfg.step = total_t / nsteps;
    const std::vector<double> tq{total_t};
    const auto out = integrate(s, h_param, net, ps, tq, cfg);
    double l = 0.0;
    for (double zi : out[0].z) l += zi * zi;
    return l;
  };

  // traced loss + gradient
  Tape<double> tp(&ps);
  std::uint32_t h0 = 0;
  for (std::size_t i = 0; i < h_param.size(); ++i) {
    const auto node = tp.leaf(h_param[i]);
    if (i == 0) h0 = node;
  }
  std::uint32_t zi = 0;
  for (std::size_t i = 0; i < z0.size(); ++i) {
    const auto node = tp.leaf(z0[i]);
    if (i == 0) zi = node;
  }
  for (int s = 0; s < nsteps; ++s)
    zi = trace_rk4_step(tp, net, zi, 3, h0, 2, total_t / nsteps);
  std::uint32_t sq0 = 0;
  for (int i = 0; i < 3; ++i) {
    const auto node = tp.square_(zi + static_cast<std::uint32_t>(i));
    if (i == 0) sq0 = node;
  }
  const auto loss = tp.sum_range(sq0, 3);
  std::vector<double> grad(ps.size(), 0.0);
  tp.gradients(loss, grad);
  CHECK(std::abs(tp.value(loss) - endpoint_loss()) < 1e-12);

  Rng pick(8);
  for (int probe = 0; probe < 5; ++probe) {
    const std::size_t k = pick() % ps.size();
    const double h = 1e-6;
    const double keep = ps.values[k];
    ps.values[k] = keep + h;
    const double up = endpoint_loss();
    ps.values[k] = keep - h;
    const double dn = endpoint_loss();
    ps.values[k] = keep;
    CHECK(close(grad[k], (up - dn) / (2.0 * h), 1e-4));
  }
}

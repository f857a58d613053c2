#include <doctest.h>

#include <cmath>

#include "dldmf/errors.hpp"
#include "dldmf/model.hpp"
#include "dldmf/physics.hpp"
#include "dldmf/rng.hpp"
#include "helpers.hpp"

using namespace dldmf;
using test::close;

namespace {

void zero_net(Model& m, const Network& net) {
  for (const auto& l : net.layers) {
    const auto& d = std::get<DenseLayer>(l);
    for (int i = 0; i < d.in * d.out; ++i) m.params.values[d.w + i] = 0.0;
    for (int i = 0; i < d.out; ++i) m.params.values[d.b + i] = 0.0;
  }
}

}  // namespace

TEST_CASE("forward: zero decoder returns its final bias for every query") {
  Model m = Model::init(test::tiny_config(31));
  zero_net(m, m.decoder);
  const auto& last = std::get<DenseLayer>(m.decoder.layers.back());
  m.params.values[last.b] = 0.75;
  Rng rng(32);
  for (int i = 0; i < 10; ++i) {
    const FusedQuery q{uniform(rng, 0, 6.28), uniform(rng, 0, 1), {uniform(rng, 1, 5), 0, 0}};
    CHECK(m.forward(q) == 0.75);
  }
}

TEST_CASE("forward: deterministic for equal queries") {
  const Model m = Model::init(test::tiny_config(33));
  const FusedQuery q{2.1, 0.6, {3.0, 0.0, 0.0}};
  CHECK(m.forward(q) == m.forward(q));
}

TEST_CASE("forward: cache and fresh integration agree at cached times") {
  const Model m = Model::init(test::tiny_config(34));
  const PdeParams mu{2.0, 0.0, 0.0};
  const std::vector<double> times{0.0, 0.25, 0.5, 1.0};
  const auto traj = m.make_trajectory(mu, times);
  for (double t : times) {
    const FusedQuery q{1.0, t, mu};
    CHECK(m.forward(q, &traj) == doctest::Approx(m.forward(q)).epsilon(1e-12));
  }
}

TEST_CASE("time_derivative: zero dynamics means no drift") {
  Model m = Model::init(test::tiny_config(35));
  zero_net(m, m.dynamics);
  const FusedQuery q{1.5, 0.7, {2.5, 0.0, 0.0}};
  CHECK(m.time_derivative(q) == 0.0);
}

TEST_CASE("time_derivative: matches finite differences of forward in t") {
  Rng seeds(36);
  for (int probe = 0; probe < 10; ++probe) {
    const Model m = Model::init(test::tiny_config(seeds()));
    Rng rng(seeds());
    const FusedQuery q{uniform(rng, 0, 6.28), uniform(rng, 0.05, 0.9),
                       {uniform(rng, 1, 5), 0, 0}};
    const double h = 1e-4;
    FusedQuery qa = q, qb = q;
    qa.t -= h;
    qb.t += h;
    const double fd = (m.forward(qb) - m.forward(qa)) / (2.0 * h);
    CHECK(close(m.time_derivative(q), fd, 1e-5));
  }
}

TEST_CASE("time_derivative: decoder that ignores its z block reports zero") {
  Model m = Model::init(test::tiny_config(37));
  auto& first = std::get<DenseLayer>(m.decoder.layers.front());
  // zero the z columns of the first decoder layer
  const int dx = m.cfg.spatial_dim;
  const int dz = m.cfg.latent_dim;
  for (int r = 0; r < first.out; ++r)
    for (int c = dx; c < dx + dz; ++c)
      m.params.values[first.w + static_cast<std::uint32_t>(r) * first.in + c] = 0.0;
  const FusedQuery q{1.5, 0.7, {2.5, 0.0, 0.0}};
  CHECK(m.time_derivative(q) == 0.0);
}

TEST_CASE("time_derivative: rejected for the static kind") {
  const Model m = Model::init(test::tiny_config(38), ModelKind::StaticFusion);
  CHECK_THROWS_AS(m.time_derivative({1.0, 0.5, {2, 0, 0}}), ConfigError);
}

TEST_CASE("spatial_derivatives: match finite differences in x") {
  Rng seeds(39);
  for (int probe = 0; probe < 10; ++probe) {
    const Model m = Model::init(test::tiny_config(seeds()));
    Rng rng(seeds());
    const FusedQuery q{uniform(rng, 0.5, 5.5), uniform(rng, 0, 0.9), {uniform(rng, 1, 5), 0, 0}};
    const auto [ux, uxx] = m.spatial_derivatives(q);
    const double h = 1e-4;
    FusedQuery qa = q, qb = q;
    qa.x -= h;
    qb.x += h;
    const double fa = m.forward(qa), f0 = m.forward(q), fb = m.forward(qb);
    CHECK(close(ux, (fb - fa) / (2.0 * h), 1e-5));
    CHECK(close(uxx, (fb - 2.0 * f0 + fa) / (h * h), 1e-4, 1e-5));
  }
}

TEST_CASE("spatial_derivatives: decoder that ignores its x block reports (0, 0)") {
  Model m = Model::init(test::tiny_config(40));
  auto& first = std::get<DenseLayer>(m.decoder.layers.front());
  for (int r = 0; r < first.out; ++r)
    for (int c = 0; c < m.cfg.spatial_dim; ++c)
      m.params.values[first.w + static_cast<std::uint32_t>(r) * first.in + c] = 0.0;
  const auto [ux, uxx] = m.spatial_derivatives({1.5, 0.3, {2.0, 0, 0}});
  CHECK(ux == 0.0);
  CHECK(uxx == 0.0);
}

TEST_CASE("spatial_derivatives: periodic features make x = 0 and x = 2pi agree") {
  const Model m = Model::init(test::tiny_config(41));
  const PdeParams mu{2.0, 0, 0};
  const auto a = m.spatial_derivatives({0.0, 0.4, mu});
  const auto b = m.spatial_derivatives({2.0 * 3.141592653589793238462643383280, 0.4, mu});
  CHECK(std::abs(a.first - b.first) < 1e-12);
  CHECK(std::abs(a.second - b.second) < 1e-12);
}

TEST_CASE("point_eval: consistent with the individual derivative paths") {
  const Model m = Model::init(test::tiny_config(42));
  const FusedQuery q{1.1, 0.37, {2.2, 0, 0}};
  const auto pd = m.point_eval(q);
  CHECK(pd.u == m.forward(q));
  CHECK(pd.u_t == doctest::Approx(m.time_derivative(q)).epsilon(1e-12));
  const auto [ux, uxx] = m.spatial_derivatives(q);
  CHECK(pd.u_x == ux);
  CHECK(pd.u_xx == uxx);
}

TEST_CASE("point_eval: static fusion derivatives match finite differences") {
  const Model m = Model::init(test::tiny_config(43), ModelKind::StaticFusion);
  Rng rng(44);
  for (int probe = 0; probe < 5; ++probe) {
    const FusedQuery q{uniform(rng, 0.5, 5.5), uniform(rng, 0.05, 0.9),
                       {uniform(rng, 1, 5), 0, 0}};
    const auto pd = m.point_eval(q);
    const double h = 1e-4;
    FusedQuery ta = q, tb = q, xa = q, xb = q;
    ta.t -= h;
    tb.t += h;
    xa.x -= h;
    xb.x += h;
    CHECK(close(pd.u_t, (m.forward(tb) - m.forward(ta)) / (2.0 * h), 1e-5));
    CHECK(close(pd.u_x, (m.forward(xb) - m.forward(xa)) / (2.0 * h), 1e-5));
    CHECK(close(pd.u_xx, (m.forward(xb) - 2.0 * m.forward(q) + m.forward(xa)) / (h * h), 1e-4,
                1e-5));
  }
}

TEST_CASE("forward: u at t = 0 depends on mu only through the parameter embedding") {
  const Model m = Model::init(test::tiny_config(45));
  const PdeParams mu1{2.0, 0, 0};
  const PdeParams mu2{4.0, 0, 0};
  const double x = 1.7;

  const auto h1 = m.encode_param(mu1);
  const auto h2 = m.encode_param(mu2);
  const auto hx = m.encode_spatial(x);

  // both paths flow through (h_param, z0(h_param)) and nothing else
  CHECK(m.forward({x, 0.0, mu1}) == m.decode(hx, m.initial_latent(h1).z, h1));
  CHECK(m.forward({x, 0.0, mu2}) == m.decode(hx, m.initial_latent(h2).z, h2));
  CHECK(m.forward({x, 0.0, mu1}) != m.forward({x, 0.0, mu2}));
  // swapping in mu2's embedding reproduces mu2's output exactly
  CHECK(m.decode(hx, m.initial_latent(h2).z, h2) == m.forward({x, 0.0, mu2}));
}

TEST_CASE("forward: horizon error beyond the integrator budget") {
  Model m = Model::init(test::tiny_config(46));
  m.integrator.step = 0.01;
  m.integrator.max_steps = 50;
  CHECK_THROWS_AS(m.forward({1.0, 10.0, {2, 0, 0}}), IntegrationHorizonError);
}

TEST_CASE("autodecode_init: zero steps returns the zero initial guess") {
  const Model m = Model::init(test::tiny_config(47));
  std::vector<double> xs{0.5, 1.5, 2.5};
  std::vector<double> target{0.1, 0.9, 0.4};
  const auto res = autodecode_init(target, xs, m, {2, 0, 0}, 0, 1e-2);
  CHECK(res.steps == 0);
  for (double zi : res.z.z) CHECK(zi == 0.0);
  REQUIRE(res.loss_curve.size() == 1);
}

TEST_CASE("autodecode_init: descends on a self-consistent target") {
  const Model m = Model::init(test::tiny_config(48));
  const PdeParams mu{3.0, 0, 0};
  const auto h_p = m.encode_param(mu);
  Rng rng(49);
  std::vector<double> zstar(m.cfg.latent_dim);
  for (auto& z : zstar) z = uniform(rng, -0.5, 0.5);

  const int nx = 32;
  std::vector<double> xs(nx), target(nx);
  for (int i = 0; i < nx; ++i) {
    xs[i] = 6.283185307179586 * i / nx;
    target[i] = m.decode(m.encode_spatial(xs[i]), zstar, h_p);
  }
  const auto res = autodecode_init(target, xs, m, mu, 200, 1e-2);
  CHECK(res.loss_curve.back() < res.loss_curve.front());
  CHECK(res.steps == 200);
  CHECK(res.seconds > 0.0);
}

TEST_CASE("autodecode kind: queries require a trajectory cache") {
  Model m = Model::init(test::tiny_config(50));
  m.kind = ModelKind::AutodecodeInit;
  CHECK_THROWS_AS(m.forward({1.0, 0.5, {2, 0, 0}}), ConfigError);
}

TEST_CASE("autodecode kind: cache built from an auto-decoded state answers queries") {
  Model m = Model::init(test::tiny_config(51));
  m.kind = ModelKind::AutodecodeInit;
  const PdeParams mu{2.0, 0, 0};
  const int nx = 16;
  std::vector<double> xs(nx), target(nx);
  for (int i = 0; i < nx; ++i) {
    xs[i] = 6.283185307179586 * i / nx;
    target[i] = initial_condition(xs[i], IcKind::Gaussian);
  }
  const auto ad = autodecode_init(target, xs, m, mu, 10, 1e-2);
  const std::vector<double> times{0.0, 0.5};
  const auto traj = m.make_trajectory_from(mu, ad.z, times);
  CHECK(std::isfinite(m.forward({1.0, 0.5, mu}, &traj)));
}

#include <doctest.h>

#include <cmath>

#include "dldmf/errors.hpp"
#include "dldmf/physics.hpp"
#include "dldmf/rng.hpp"
#include "helpers.hpp"

using namespace dldmf;

namespace {
constexpr double kPi = 3.141592653589793238462643383280;

struct ConstantField final : PointEvaluator {
  double value;
  explicit ConstantField(double v) : value(v) {}
  PointDerivatives point_eval(const FusedQuery&) const override {
    return {value, 0.0, 0.0, 0.0};
  }
};

// u(x,t) = exp(-nu t) sin(x - beta t), an exact CDR solution for rho = 0.
struct TravelingWave final : PointEvaluator {
  PointDerivatives point_eval(const FusedQuery& q) const override {
    const double decay = std::exp(-q.mu.nu * q.t);
    const double phase = q.x - q.mu.beta * q.t;
    PointDerivatives d;
    d.u = decay * std::sin(phase);
    d.u_t = decay * (-q.mu.nu * std::sin(phase) - q.mu.beta * std::cos(phase));
    d.u_x = decay * std::cos(phase);
    d.u_xx = -decay * std::sin(phase);
    return d;
  }
};

}  // namespace

TEST_CASE("initial_condition: gaussian peak and waist values") {
  CHECK(initial_condition(kPi, IcKind::Gaussian) == 1.0);
  const double ehalf = std::exp(-0.5);
  CHECK(std::abs(initial_condition(kPi + kPi / 2, IcKind::Gaussian) - ehalf) < 1e-12);
  CHECK(std::abs(initial_condition(kPi - kPi / 2, IcKind::Gaussian) - ehalf) < 1e-12);
  CHECK(std::abs(initial_condition(kPi + kPi / 2, IcKind::Gaussian) - 0.606531) < 1e-6);
}

TEST_CASE("initial_condition: one_plus_sin maximum") {
  CHECK(initial_condition(kPi / 2, IcKind::OnePlusSin) == 2.0);
}

TEST_CASE("initial_condition: periodic seam values") {
  // one_plus_sin is 2pi-periodic to machine precision; the gaussian seam
  // mismatch vanishes by symmetry about pi.
  const double two_pi = 2.0 * kPi;
  CHECK(std::abs(initial_condition(0.0, IcKind::OnePlusSin) -
                 initial_condition(two_pi, IcKind::OnePlusSin)) < 1e-15);
  CHECK(std::abs(initial_condition(0.0, IcKind::Gaussian) -
                 initial_condition(two_pi, IcKind::Gaussian)) < 1e-15);
}

TEST_CASE("residual: the zero field is a root for any mu") {
  const ConstantField zero(0.0);
  Rng rng(61);
  for (int i = 0; i < 20; ++i) {
    const FusedQuery q{uniform(rng, 0, 6.28), uniform(rng, 0, 1),
                       {uniform(rng, -5, 5), uniform(rng, 0, 5), uniform(rng, -5, 5)}};
    CHECK(residual(q, zero) == 0.0);
  }
}

TEST_CASE("residual: the unit field is the Fisher fixed point") {
  const ConstantField one(1.0);
  Rng rng(62);
  for (int i = 0; i < 20; ++i) {
    const FusedQuery q{uniform(rng, 0, 6.28), uniform(rng, 0, 1),
                       {uniform(rng, -5, 5), uniform(rng, 0, 5), uniform(rng, -5, 5)}};
    CHECK(residual(q, one) == 0.0);
  }
}

TEST_CASE("residual: analytic convection-diffusion wave vanishes for rho = 0") {
  const TravelingWave wave;
  Rng rng(63);
  for (int pair = 0; pair < 20; ++pair) {
    PdeParams mu{uniform(rng, 0.5, 5.0), uniform(rng, 0.0, 2.0), 0.0};
    for (int pt = 0; pt < 5; ++pt) {
      const FusedQuery q{uniform(rng, 0, 6.28), uniform(rng, 0, 1), mu};
      CHECK(std::abs(residual(q, wave)) < 1e-10);
    }
  }
}

TEST_CASE("sample_collocation: deterministic, in range, exact cardinality") {
  DomainSpec domain;
  const std::vector<PdeParams> mus{{1, 0, 0}, {2, 0, 0}, {3, 0, 0}, {4, 0, 0}};
  const auto a = sample_collocation(domain, mus, 64, 32, 16, 99);
  const auto b = sample_collocation(domain, mus, 64, 32, 16, 99);

  REQUIRE(a.mus.size() == 4);
  std::size_t nres = 0, nini = 0, nbnd = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    nres += a.residual_pts[i].size();
    nini += a.initial_xs[i].size();
    nbnd += a.boundary_ts[i].size();
    for (const auto& p : a.residual_pts[i]) {
      CHECK(p.x >= domain.x_min);
      CHECK(p.x <= domain.x_max);
      CHECK(p.t >= 0.0);
      CHECK(p.t <= domain.t_train);
    }
    for (std::size_t j = 0; j < a.residual_pts[i].size(); ++j) {
      CHECK(a.residual_pts[i][j].x == b.residual_pts[i][j].x);
      CHECK(a.residual_pts[i][j].t == b.residual_pts[i][j].t);
    }
  }
  CHECK(nres == 4 * 64);
  CHECK(nini == 4 * 32);
  CHECK(nbnd == 4 * 16);
}

TEST_CASE("sample_collocation: empty mu batch is fatal") {
  DomainSpec domain;
  CHECK_THROWS_AS(sample_collocation(domain, {}, 8, 8, 8, 0), ConfigError);
}

TEST_CASE("sample_collocation: non-positive counts are fatal") {
  DomainSpec domain;
  const std::vector<PdeParams> mus{{1, 0, 0}};
  CHECK_THROWS_AS(sample_collocation(domain, mus, 0, 8, 8, 0), ConfigError);
}

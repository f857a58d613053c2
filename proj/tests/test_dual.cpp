#include <doctest.h>

#include "dldmf/dual.hpp"
#include "dldmf/errors.hpp"
#include "dldmf/network.hpp"
#include "dldmf/rng.hpp"
#include "helpers.hpp"

using namespace dldmf;
using test::close;

TEST_CASE("dual: polynomial x^2 at x = 3") {
  const Dual2 x = Dual2::seed(3.0);
  const Dual2 y = x * x;
  CHECK(y.v == 9.0);
  CHECK(y.d1 == 6.0);
  CHECK(y.d2 == 2.0);
}

TEST_CASE("dual: sin at the origin") {
  const Dual2 y = sin(Dual2::seed(0.0));
  CHECK(y.v == 0.0);
  CHECK(y.d1 == 1.0);
  CHECK(y.d2 == 0.0);
}

TEST_CASE("dual: product rule second derivative shape") {
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    const Dual2 a{uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, -2, 2)};
    const Dual2 b{uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, -2, 2)};
    const Dual2 p = a * b;
    CHECK(p.d2 == doctest::Approx(a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2).epsilon(1e-14));
  }
}

TEST_CASE("dual: division inverts multiplication") {
  Rng rng(12);
  for (int i = 0; i < 50; ++i) {
    const Dual2 a{uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, -2, 2)};
    const Dual2 b{uniform(rng, 0.5, 2), uniform(rng, -2, 2), uniform(rng, -2, 2)};
    const Dual2 q = (a / b) * b;
    CHECK(close(q.v, a.v, 1e-12, 1e-12));
    CHECK(close(q.d1, a.d1, 1e-12, 1e-12));
    CHECK(close(q.d2, a.d2, 1e-12, 1e-12));
  }
}

TEST_CASE("dual: elementary derivatives against finite differences") {
  Rng rng(13);
  auto probe = [&](auto f, auto fd, double lo, double hi) {
    for (int i = 0; i < 100; ++i) {
      const double x = uniform(rng, lo, hi);
      const Dual2 y = f(Dual2::seed(x));
      const double h = 1e-4;
      const double d1 = (fd(x + h) - fd(x - h)) / (2.0 * h);
      const double d2 = (fd(x + h) - 2.0 * fd(x) + fd(x - h)) / (h * h);
      CHECK(close(y.d1, d1, 1e-5));
      CHECK(close(y.d2, d2, 1e-4, 1e-5));
    }
  };
  probe([](Dual2 x) { return tanh(x); }, [](double x) { return std::tanh(x); }, -2, 2);
  probe([](Dual2 x) { return exp(x); }, [](double x) { return std::exp(x); }, -1, 1);
  probe([](Dual2 x) { return sin(x) * cos(x); },
        [](double x) { return std::sin(x) * std::cos(x); }, -3, 3);
}

TEST_CASE("forward_dual: random two-hidden tanh network matches finite differences") {
  ParamStore ps;
  Rng rng(split_seed(42, "net"));
  const Network net = build_dense(ps, "f", {1, 16, 16, 1}, rng);

  const double x = 0.7;
  const auto dual = forward_dual(net, ps, std::vector<double>{x}, 0);
  REQUIRE(dual.size() == 1);

  auto f = [&](double xv) { return eval_net<double>(net, ps, std::vector<double>{xv})[0]; };
  const double h = 1e-4;
  const double d1 = (f(x + h) - f(x - h)) / (2.0 * h);
  const double d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
  CHECK(test::rel_err(dual[0].d1, d1) < 1e-5);
  CHECK(test::rel_err(dual[0].d2, d2) < 1e-5);
}

TEST_CASE("forward_dual: value channel is bit-identical to the plain pass") {
  ParamStore ps;
  Rng rng(split_seed(43, "net"));
  const Network net = build_dense(ps, "f", {3, 16, 16, 2}, rng);
  Rng xr(44);
  for (int i = 0; i < 20; ++i) {
    const std::vector<double> in{uniform(xr, -2, 2), uniform(xr, -2, 2), uniform(xr, -2, 2)};
    const auto plain = eval_net<double>(net, ps, in);
    const auto dual = forward_dual(net, ps, in, i % 3);
    for (std::size_t j = 0; j < plain.size(); ++j) CHECK(plain[j] == dual[j].v);
  }
}

TEST_CASE("forward_dual: seed index out of range") {
  ParamStore ps;
  Rng rng(1);
  const Network net = build_dense(ps, "f", {2, 4, 1}, rng);
  CHECK_THROWS_AS(forward_dual(net, ps, std::vector<double>{1.0, 2.0}, 5), DimensionError);
}

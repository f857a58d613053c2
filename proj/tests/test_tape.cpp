#include <doctest.h>

#include <vector>

#include "dldmf/errors.hpp"
#include "dldmf/rng.hpp"
#include "dldmf/tape.hpp"
#include "helpers.hpp"

using namespace dldmf;
using test::close;

TEST_CASE("tape: gradient of w^2 at w = 3 is 6") {
  ParamStore ps;
  const auto w = ps.allocate(1);
  ps.values[w] = 3.0;
  Tape<double> tp(&ps);
  const auto loss = tp.square_(tp.param(w));
  std::vector<double> grad(ps.size(), 0.0);
  tp.gradients(loss, grad);
  CHECK(grad[w] == 6.0);
}

TEST_CASE("tape: untouched weights keep gradient zero") {
  ParamStore ps;
  const auto w = ps.allocate(1);
  const auto dead = ps.allocate(3);
  ps.values[w] = 2.0;
  Tape<double> tp(&ps);
  const auto loss = tp.square_(tp.param(w));
  std::vector<double> grad(ps.size(), 0.0);
  tp.gradients(loss, grad);
  CHECK(grad[dead] == 0.0);
  CHECK(grad[dead + 1] == 0.0);
  CHECK(grad[dead + 2] == 0.0);
}

TEST_CASE("tape: constant trace has zero gradient everywhere") {
  ParamStore ps;
  const auto w = ps.allocate(2);
  ps.values[w] = 1.5;
  Tape<double> tp(&ps);
  const auto loss = tp.mul(tp.leaf(3.0), tp.leaf(4.0));
  std::vector<double> grad(ps.size(), 0.0);
  tp.gradients(loss, grad);
  CHECK(grad[w] == 0.0);
  CHECK(grad[w + 1] == 0.0);
}

namespace {

// A random little expression touching every primitive once.
template <class T>
std::uint32_t build_expr(Tape<T>& tp, std::uint32_t w_off, std::uint32_t b_off,
                         std::uint32_t x_begin) {
  const auto a = tp.affine(w_off, x_begin, 4, b_off);
  const auto t = tp.tanh_(a);
  const auto s = tp.sin_(tp.mul(t, tp.leaf(T{1.3})));
  const auto c = tp.cos_(a);
  const auto e = tp.exp_(tp.mul(t, tp.leaf(T{0.4})));
  const auto d = tp.div(s, tp.add(e, tp.leaf(T{1.5})));
  const auto sp = tp.scale_param(b_off, c);
  const auto sum = tp.sum_range(x_begin, 4);
  const auto mix = tp.add(tp.sub(d, sp), tp.mul(sum, tp.leaf(T{0.2})));
  return tp.square_(mix);
}

}  // namespace

TEST_CASE("tape: every primitive passes a central finite-difference check") {
  Rng rng(101);
  for (int probe = 0; probe < 100; ++probe) {
    ParamStore ps;
    const auto w = ps.allocate(4);
    const auto b = ps.allocate(1);
    for (int i = 0; i < 4; ++i) ps.values[w + i] = uniform(rng, -1, 1);
    ps.values[b] = uniform(rng, -1, 1);
    std::vector<double> xs(4);
    for (auto& x : xs) x = uniform(rng, -1, 1);

    auto value = [&]() {
      Tape<double> tp(&ps);
      std::uint32_t x0 = 0;
      for (int i = 0; i < 4; ++i) {
        const auto node = tp.leaf(xs[i]);
        if (i == 0) x0 = node;
      }
      return tp.value(build_expr(tp, w, b, x0));
    };

    Tape<double> tp(&ps);
    std::uint32_t x0 = 0;
    for (int i = 0; i < 4; ++i) {
      const auto node = tp.leaf(xs[i]);
      if (i == 0) x0 = node;
    }
    const auto loss = build_expr(tp, w, b, x0);
    std::vector<double> grad(ps.size(), 0.0);
    tp.gradients(loss, grad);

    const double h = 1e-6;
    const int k = probe % 5;
    double* slot = k < 4 ? &ps.values[w + k] : &ps.values[b];
    const double keep = *slot;
    *slot = keep + h;
    const double up = value();
    *slot = keep - h;
    const double dn = value();
    *slot = keep;
    const double fd = (up - dn) / (2.0 * h);
    const double an = k < 4 ? grad[w + k] : grad[b];
    CHECK(close(an, fd, 1e-5));
  }
}

TEST_CASE("tape: gradient of a sum of traces equals the sum of gradients") {
  Rng rng(102);
  for (int probe = 0; probe < 20; ++probe) {
    ParamStore ps;
    const auto w = ps.allocate(4);
    const auto b = ps.allocate(1);
    for (int i = 0; i < 4; ++i) ps.values[w + i] = uniform(rng, -1, 1);
    ps.values[b] = uniform(rng, -1, 1);
    std::vector<double> xs(4), ys(4);
    for (auto& x : xs) x = uniform(rng, -1, 1);
    for (auto& y : ys) y = uniform(rng, -1, 1);

    auto grad_of = [&](const std::vector<double>& in1, const std::vector<double>* in2) {
      Tape<double> tp(&ps);
      std::uint32_t x0 = 0;
      for (int i = 0; i < 4; ++i) {
        const auto node = tp.leaf(in1[i]);
        if (i == 0) x0 = node;
      }
      auto root = build_expr(tp, w, b, x0);
      if (in2) {
        std::uint32_t y0 = 0;
        for (int i = 0; i < 4; ++i) {
          const auto node = tp.leaf((*in2)[i]);
          if (i == 0) y0 = node;
        }
        root = tp.add(root, build_expr(tp, w, b, y0));
      }
      std::vector<double> grad(ps.size(), 0.0);
      tp.gradients(root, grad);
      return grad;
    };

    const auto ga = grad_of(xs, nullptr);
    const auto gb = grad_of(ys, nullptr);
    const auto gsum = grad_of(xs, &ys);
    for (std::size_t i = 0; i < ga.size(); ++i)
      CHECK(close(gsum[i], ga[i] + gb[i], 1e-12, 1e-12));
  }
}

TEST_CASE("tape: reverse-over-forward matches dual finite differences") {
  // u = tanh(w * x) with x seeded: gradients of u_x and u_xx with respect to
  // w must match central differences of the dual channels.
  Rng rng(103);
  for (int probe = 0; probe < 50; ++probe) {
    ParamStore ps;
    const auto w = ps.allocate(1);
    ps.values[w] = uniform(rng, -1.5, 1.5);
    const double x = uniform(rng, -1.5, 1.5);

    auto channels = [&]() {
      const Dual2 u = tanh(Dual2{ps.values[w]} * Dual2::seed(x));
      return u;
    };

    Tape<Dual2> tp(&ps);
    const auto xl = tp.leaf(Dual2::seed(x));
    const auto prod = tp.scale_param(w, xl);
    const auto u = tp.tanh_(prod);

    std::vector<double> grad_d1(ps.size(), 0.0), grad_d2(ps.size(), 0.0);
    {
      const auto picked = tp.pick_d1(u);
      tp.gradients(picked, grad_d1);
    }
    {
      const auto picked = tp.pick_d2(u);
      tp.gradients(picked, grad_d2);
    }

    const double h = 1e-6;
    const double keep = ps.values[w];
    ps.values[w] = keep + h;
    const Dual2 up = channels();
    ps.values[w] = keep - h;
    const Dual2 dn = channels();
    ps.values[w] = keep;
    CHECK(close(grad_d1[w], (up.d1 - dn.d1) / (2.0 * h), 1e-4));
    CHECK(close(grad_d2[w], (up.d2 - dn.d2) / (2.0 * h), 1e-4));
  }
}

TEST_CASE("tape: pack routes adjoints into both sources") {
  // y = value(a) + d1 slot from b; gradient of pick_d1(pack) w.r.t. b is 1.
  ParamStore ps;
  const auto p = ps.allocate(2);
  ps.values[p] = 0.3;
  ps.values[p + 1] = 0.9;
  Tape<Dual2> tp(&ps);
  const auto a = tp.param(p);
  const auto b = tp.param(p + 1);
  const auto packed = tp.pack(a, b);
  const auto loss = tp.square_(tp.pick_d1(packed));
  std::vector<double> grad(ps.size(), 0.0);
  tp.gradients(loss, grad);
  CHECK(grad[p] == 0.0);
  CHECK(grad[p + 1] == doctest::Approx(2.0 * 0.9).epsilon(1e-14));
}

TEST_CASE("tape: non-scalar root is rejected") {
  ParamStore ps;
  Tape<Dual2> tp(&ps);
  const auto x = tp.leaf(Dual2::seed(1.0));
  const auto y = tp.tanh_(x);  // carries derivative channels
  std::vector<double> grad(ps.size(), 0.0);
  CHECK_THROWS_AS(tp.gradients(y, grad), std::invalid_argument);
}

TEST_CASE("tape: truncation reuses storage without disturbing the prefix") {
  ParamStore ps;
  const auto w = ps.allocate(1);
  ps.values[w] = 2.0;
  Tape<double> tp(&ps);
  const auto keep = tp.leaf(5.0);
  std::vector<double> grad(ps.size(), 0.0);
  for (int i = 0; i < 10; ++i) {
    const auto m = tp.mark();
    const auto r = tp.mul(tp.param(w), tp.copy(keep));
    const auto sq = tp.square_(r);
    tp.seed(sq, 1.0);
    tp.sweep(m.nodes, grad);
    tp.truncate(m);
  }
  // per pass: d/dw (w*5)^2 = 2*(w*5)*5 = 100, d/dkeep = 2*(w*5)*w = 40
  CHECK(grad[w] == doctest::Approx(1000.0).epsilon(1e-12));
  CHECK(tp.adjoint(keep) == doctest::Approx(400.0).epsilon(1e-12));
  CHECK(tp.size() == 1);
}

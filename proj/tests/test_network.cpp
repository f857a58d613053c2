#include <doctest.h>

#include "dldmf/errors.hpp"
#include "dldmf/model.hpp"
#include "dldmf/network.hpp"
#include "helpers.hpp"

using namespace dldmf;

TEST_CASE("init_model: same seed gives identical weights") {
  const auto cfg = test::tiny_config(123);
  const Model a = Model::init(cfg);
  const Model b = Model::init(cfg);
  REQUIRE(a.params.size() == b.params.size());
  for (std::size_t i = 0; i < a.params.size(); ++i)
    CHECK(a.params.values[i] == b.params.values[i]);
}

TEST_CASE("init_model: decoder depth 2 leaves no modulatable layer") {
  auto cfg = test::tiny_config();
  cfg.decoder_depth = 2;
  CHECK_THROWS_AS(Model::init(cfg), ConfigError);
}

TEST_CASE("init_model: non-positive widths rejected") {
  auto cfg = test::tiny_config();
  cfg.latent_dim = 0;
  CHECK_THROWS_AS(Model::init(cfg), ConfigError);
}

TEST_CASE("init_model: parameter count matches the closed form") {
  const auto cfg = test::tiny_config();
  const Model m = Model::init(cfg);

  auto chain = [](std::vector<int> widths) {
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i)
      n += static_cast<std::size_t>(widths[i]) * widths[i + 1] + widths[i + 1];
    return n;
  };
  std::size_t expect = 0;
  expect += chain({2, 16, 16, 8});        // spatial: (sin x, cos x) -> d_x'
  expect += chain({3, 16, 8});            // param: mu -> d_p
  expect += chain({8, 16, 4});            // latent init: d_p -> d_z
  expect += chain({12, 16, 16, 4});       // dynamics: d_z + d_p -> d_z
  expect += chain({20, 16, 16, 16, 1});   // decoder: depth 4 over concat width 20
  CHECK(m.param_count() == expect);
  CHECK(m.params.size() == expect);
}

TEST_CASE("eval_net: zero weights give the last-layer bias") {
  ParamStore ps;
  Rng rng(5);
  const Network net = build_dense(ps, "f", {3, 8, 2}, rng);
  for (auto& v : ps.values) v = 0.0;
  const auto& last = std::get<DenseLayer>(net.layers.back());
  ps.values[last.b] = 0.25;
  ps.values[last.b + 1] = -1.5;
  const auto out = eval_net<double>(net, ps, std::vector<double>{0.3, -0.7, 2.0});
  CHECK(out[0] == 0.25);
  CHECK(out[1] == -1.5);
}

TEST_CASE("eval_net: identity single layer returns its input") {
  ParamStore ps;
  DenseLayer l;
  l.in = 3;
  l.out = 3;
  l.act = Activation::Identity;
  l.w = ps.allocate(9);
  l.b = ps.allocate(3);
  for (int i = 0; i < 3; ++i) ps.values[l.w + i * 3 + i] = 1.0;
  Network net;
  net.name = "id";
  net.layers.emplace_back(l);
  const std::vector<double> v{1.25, -3.5, 0.125};
  const auto out = eval_net<double>(net, ps, v);
  CHECK(out[0] == v[0]);
  CHECK(out[1] == v[1]);
  CHECK(out[2] == v[2]);
}

TEST_CASE("eval_net: purity, same input twice is bit-identical") {
  ParamStore ps;
  Rng rng(6);
  const Network net = build_dense(ps, "f", {2, 16, 16, 1}, rng);
  const std::vector<double> in{0.4, -1.2};
  const auto a = eval_net<double>(net, ps, in);
  const auto b = eval_net<double>(net, ps, in);
  CHECK(a[0] == b[0]);
}

TEST_CASE("eval_net: width mismatch is fatal") {
  ParamStore ps;
  Rng rng(7);
  const Network net = build_dense(ps, "f", {2, 4, 1}, rng);
  CHECK_THROWS_AS(eval_net<double>(net, ps, std::vector<double>{1.0, 2.0, 3.0}),
                  DimensionError);
}

TEST_CASE("trace_net: taped values equal the plain pass bit-for-bit") {
  ParamStore ps;
  Rng rng(8);
  const Network net = build_dense(ps, "f", {3, 16, 16, 2}, rng);
  Rng xr(9);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> in{uniform(xr, -2, 2), uniform(xr, -2, 2), uniform(xr, -2, 2)};
    const auto plain = eval_net<double>(net, ps, in);

    Tape<double> tp(&ps);
    std::uint32_t x0 = 0;
    for (int i = 0; i < 3; ++i) {
      const auto node = tp.leaf(in[i]);
      if (i == 0) x0 = node;
    }
    const auto out = trace_net(tp, net, x0, 3);
    CHECK(tp.value(out) == plain[0]);
    CHECK(tp.value(out + 1) == plain[1]);

    // dual tape carries the same value channel
    std::vector<Dual2> din(in.begin(), in.end());
    din[0] = Dual2::seed(in[0]);
    const auto dual = eval_net<Dual2>(net, ps, din);
    Tape<Dual2> td(&ps);
    std::uint32_t d0 = 0;
    for (int i = 0; i < 3; ++i) {
      const auto node = td.leaf(din[i]);
      if (i == 0) d0 = node;
    }
    const auto dout = trace_net(td, net, d0, 3);
    CHECK(td.value(dout).v == dual[0].v);
    CHECK(td.value(dout).d1 == dual[0].d1);
    CHECK(td.value(dout).d2 == dual[0].d2);
  }
}

#include <doctest.h>

#include <fstream>

#include "dldmf/errors.hpp"
#include "dldmf/finetune.hpp"
#include "dldmf/model.hpp"
#include "helpers.hpp"

using namespace dldmf;

TEST_CASE("checkpoint: round-trip preserves every weight bit-exactly") {
  test::TempDir tmp("ckpt");
  const Model m = Model::init(test::tiny_config(21));
  const auto path = tmp.path / "m.ckpt";
  m.save(path);
  const Model r = Model::load(path);

  REQUIRE(r.params.size() == m.params.size());
  for (std::size_t i = 0; i < m.params.size(); ++i)
    CHECK(r.params.values[i] == m.params.values[i]);
  CHECK(r.kind == m.kind);
  CHECK(r.cfg.latent_dim == m.cfg.latent_dim);
  CHECK(r.cfg.periodic_features == m.cfg.periodic_features);
  CHECK(r.cfg.mu_lo == m.cfg.mu_lo);
  CHECK(r.cfg.mu_hi == m.cfg.mu_hi);

  // loaded model answers queries identically
  const FusedQuery q{1.3, 0.0, {2.0, 0.0, 0.0}};
  CHECK(
      m.decode(m.encode_spatial(q.x), m.initial_latent(m.encode_param(q.mu)).z,
               m.encode_param(q.mu)) ==
      r.decode(r.encode_spatial(q.x), r.initial_latent(r.encode_param(q.mu)).z,
               r.encode_param(q.mu)));
}

TEST_CASE("checkpoint: static kind round-trips with its time encoder") {
  test::TempDir tmp("ckpt_static");
  const Model m = Model::init(test::tiny_config(22), ModelKind::StaticFusion);
  const auto path = tmp.path / "s.ckpt";
  m.save(path);
  const Model r = Model::load(path);
  CHECK(r.kind == ModelKind::StaticFusion);
  REQUIRE(r.params.size() == m.params.size());
  for (std::size_t i = 0; i < m.params.size(); ++i)
    CHECK(r.params.values[i] == m.params.values[i]);
}

TEST_CASE("checkpoint: factored decoder round-trips") {
  test::TempDir tmp("ckpt_fact");
  Model m = Model::init(test::tiny_config(23));
  factor_decoder(m);
  const auto path = tmp.path / "f.ckpt";
  m.save(path);
  const Model r = Model::load(path);

  int factored = 0;
  for (const auto& l : r.decoder.layers)
    if (std::holds_alternative<FactoredLayer>(l)) ++factored;
  CHECK(factored == 2);  // depth 4 -> layers 2..3

  const auto h_p = m.encode_param({2.5, 0, 0});
  const auto h_x = m.encode_spatial(0.7);
  const auto z = m.initial_latent(h_p).z;
  CHECK(m.decode(h_x, z, h_p) == r.decode(r.encode_spatial(0.7), z, r.encode_param({2.5, 0, 0})));
}

TEST_CASE("checkpoint: corrupted magic names the header") {
  test::TempDir tmp("ckpt_bad");
  const Model m = Model::init(test::tiny_config(24));
  const auto path = tmp.path / "m.ckpt";
  m.save(path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("JUNK", 4);
  }
  CHECK_THROWS_WITH_AS(static_cast<void>(Model::load(path)),
                       doctest::Contains("magic"), CheckpointError);
}

TEST_CASE("checkpoint: truncated tensor detected") {
  test::TempDir tmp("ckpt_trunc");
  const Model m = Model::init(test::tiny_config(25));
  const auto path = tmp.path / "m.ckpt";
  m.save(path);
  const auto full = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, full - 16);
  CHECK_THROWS_AS(static_cast<void>(Model::load(path)), CheckpointError);
}

TEST_CASE("checkpoint: a different latent width is a shape mismatch") {
  test::TempDir tmp("ckpt_shape");
  const Model m = Model::init(test::tiny_config(26));
  const auto path = tmp.path / "m.ckpt";
  m.save(path);
  auto other = test::tiny_config(26);
  other.latent_dim = 8;
  CHECK_THROWS_AS(static_cast<void>(Model::load_expected(path, other, ModelKind::Dldmf)),
                  DimensionError);
  CHECK_NOTHROW(
      static_cast<void>(Model::load_expected(path, test::tiny_config(26), ModelKind::Dldmf)));
}

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dldmf/finetune.hpp"
#include "dldmf/model.hpp"
#include "dldmf/physics.hpp"
#include "dldmf/trainer.hpp"

namespace dldmf {

// Everything a run needs, parsed from a flat "key = value" file with
// bracketed section headers. Unknown sections or keys are rejected.
struct RunConfig {
  DomainSpec domain;
  ModelConfig model;
  ModelKind kind = ModelKind::Dldmf;
  IntegratorConfig integrator;
  TrainConfig train;
  FinetuneConfig finetune;

  // [data] sweep: the training coefficient grid plus extra reference points.
  std::string family = "convection";
  double lo = 1.0, hi = 5.0;
  int points = 5;
  std::vector<PdeParams> extra_mu;
  int nx = 256;
  int nt_per_unit = 100;  // rows per unit time (plus the t = 0 row)
  double max_dt = 1e-3;

  // [eval]
  std::vector<double> snapshots{1.0, 5.0, 10.0};
  bool rollout = false;

  // [timing]
  int timing_queries = 20;
  int autodecode_steps = 100;
  double autodecode_rate = 1e-2;

  // [paths]
  std::string data_dir;
  std::string checkpoint;
  std::string out_dir;

  std::uint64_t seed = 0;
  std::string raw;  // byte-identical snapshot of the parsed file

  // Derived: family -> active axes; also pins model.mu_lo/hi to the ranges.
  void finalize();
};

RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<text>");

std::vector<PdeParams> sweep_mus(const RunConfig& cfg);

// Exception log entry for a command run: deterministic id, config snapshot,
// artifact paths, timestamps (timestamps are excluded from rerun
// comparisons).
struct ExperimentManifest {
  std::string run_id;
  std::string command;
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;
  std::string config_snapshot;

  void write(const std::filesystem::path& path) const;
};

ExperimentManifest make_manifest(const std::string& command, const RunConfig& cfg);

}  // namespace dldmf

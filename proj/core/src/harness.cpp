#include "dldmf/harness.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "dldmf/dataset_io.hpp"
#include "dldmf/errors.hpp"
#include "dldmf/evaluation.hpp"
#include "dldmf/parallel.hpp"

namespace dldmf {

namespace fs = std::filesystem;

fs::path resolve_out_dir(const RunConfig& cfg) {
  if (!cfg.out_dir.empty()) return cfg.out_dir;
  if (const char* env = std::getenv("DLDMF_OUT")) return env;
  return "runs";
}

fs::path resolve_data_dir(const RunConfig& cfg) {
  if (!cfg.data_dir.empty()) return cfg.data_dir;
  return resolve_out_dir(cfg) / "data";
}

fs::path resolve_checkpoint(const RunConfig& cfg) {
  if (!cfg.checkpoint.empty()) return cfg.checkpoint;
  return resolve_out_dir(cfg) / "checkpoints" / "model.ckpt";
}

namespace {

int grid_nt(const RunConfig& cfg) {
  return static_cast<int>(std::lround(cfg.domain.t_test * cfg.nt_per_unit)) + 1;
}

int grid_substeps(const RunConfig& cfg) {
  const double row_dt = cfg.domain.t_test / (grid_nt(cfg) - 1);
  return std::max(1, static_cast<int>(std::ceil(row_dt / cfg.max_dt - 1e-12)));
}

EvalPlan plan_from(const RunConfig& cfg) {
  EvalPlan plan;
  plan.t_train = cfg.domain.t_train;
  plan.train_lo = cfg.train.mu_set.lo;
  plan.train_hi = cfg.train.mu_set.hi;
  plan.train_mus = make_mu_set(cfg.train.mu_set);
  plan.rollout = cfg.rollout;
  plan.autodecode_steps = cfg.autodecode_steps;
  plan.autodecode_rate = cfg.autodecode_rate;
  return plan;
}

std::vector<SolutionGrid> load_references(const RunConfig& cfg) {
  const fs::path dir = resolve_data_dir(cfg);
  const fs::path manifest = dir / "manifest.csv";
  if (!fs::exists(manifest))
    throw ConfigError("eval: missing dataset manifest " + manifest.string() +
                      " (run generate first)");
  std::vector<SolutionGrid> grids;
  for (const auto& row : read_manifest(manifest)) grids.push_back(read_grid(dir / row.file));
  return grids;
}

Model configured_model(const RunConfig& cfg, ModelKind kind) {
  Model m = Model::init(cfg.model, kind);
  m.integrator = cfg.integrator;
  return m;
}

Model load_model(const RunConfig& cfg) {
  const fs::path ck = resolve_checkpoint(cfg);
  if (!fs::exists(ck))
    throw ConfigError("missing checkpoint " + ck.string() + " (run train first)");
  Model m = Model::load(ck);
  m.integrator = cfg.integrator;
  if (cfg.kind == ModelKind::AutodecodeInit && m.kind == ModelKind::Dldmf)
    m.kind = ModelKind::AutodecodeInit;  // same nets, auto-decoded z_0 at inference
  return m;
}

void write_combined_results(const fs::path& path,
                            const std::vector<std::pair<std::string, std::vector<MetricsRecord>>>&
                                groups) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw ConfigError("results: cannot open " + path.string());
  os << "model,kind,beta,nu,rho,time_regime,mu_regime,l2_abs,l2_rel,max_err,exp_var,latency_ms\n";
  char buf[512];
  for (const auto& [name, records] : groups) {
    for (const auto& r : records) {
      std::snprintf(buf, sizeof(buf),
                    "%s,%s,%.17g,%.17g,%.17g,%s,%s,%.17g,%.17g,%.17g,%.17g,%.3f\n", name.c_str(),
                    name.c_str(), r.mu.beta, r.mu.nu, r.mu.rho, to_string(r.time_regime),
                    to_string(r.mu_regime), r.m.l2_abs,
                    r.m.rel_defined ? r.m.l2_rel : std::nan(""), r.m.max_err,
                    r.m.explained_variance, r.latency_ms);
      os << buf;
    }
  }
}

void print_summary(const std::string& name, std::span<const MetricsRecord> records) {
  for (const auto& s : summarize(records)) {
    std::printf("%-16s %-5s %-6s  n=%d  l2_rel %.4f +- %.4f  max %.4f  expvar %.4f\n",
                name.c_str(), to_string(s.time_regime), to_string(s.mu_regime), s.count,
                s.mean_l2_rel, s.std_l2_rel, s.mean_max_err, s.mean_exp_var);
  }
}

}  // namespace

void cmd_generate(const RunConfig& cfg) {
  const fs::path dir = resolve_data_dir(cfg);
  fs::create_directories(dir);
  const auto mus = sweep_mus(cfg);
  const int nt = grid_nt(cfg);
  const int substeps = grid_substeps(cfg);

  std::vector<SolutionGrid> grids(mus.size());
  parallel_for(mus.size(), [&](std::size_t i) {
    try {
      grids[i] = solve(mus[i], cfg.domain, cfg.nx, nt, substeps);
    } catch (const SolverDivergedError& e) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "generate: mu=(%g, %g, %g): %s", mus[i].beta, mus[i].nu,
                    mus[i].rho, e.what());
      throw ConfigError(buf);
    }
  });

  ExperimentManifest man = make_manifest("generate", cfg);
  std::vector<ManifestRow> rows;
  for (std::size_t i = 0; i < mus.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "mu_%03zu.bin", i);
    write_grid(dir / name, grids[i]);
    rows.push_back({name, mus[i]});
    man.artifacts.push_back((dir / name).string());
  }
  write_manifest(dir / "manifest.csv", rows);
  man.artifacts.push_back((dir / "manifest.csv").string());
  man.write(resolve_out_dir(cfg) / "manifest_generate.txt");
  std::printf("generate: wrote %zu datasets to %s\n", mus.size(), dir.string().c_str());
}

void cmd_train(const RunConfig& cfg) {
  const fs::path out = resolve_out_dir(cfg);
  const fs::path ckdir = out / "checkpoints";
  fs::create_directories(ckdir);

  Model model = configured_model(cfg, cfg.kind);
  ExperimentManifest man = make_manifest("train", cfg);

  TrainHooks hooks;
  hooks.on_checkpoint = [&](int step, const Model& m) {
    char name[64];
    std::snprintf(name, sizeof(name), "model_step%06d.ckpt", step);
    m.save(ckdir / name);
    man.artifacts.push_back((ckdir / name).string());
  };
  const auto log = train(model, cfg.train, cfg.domain, hooks);

  model.save(ckdir / "model.ckpt");
  man.artifacts.push_back((ckdir / "model.ckpt").string());
  write_train_log(out / "train_log.csv", log);
  man.artifacts.push_back((out / "train_log.csv").string());
  man.write(out / "manifest_train.txt");
  std::printf("train: %zu steps, final loss %.6g -> %s\n", log.size(),
              log.empty() ? 0.0 : log.back().total, (ckdir / "model.ckpt").string().c_str());
}

void cmd_finetune(const RunConfig& cfg) {
  const fs::path out = resolve_out_dir(cfg);
  fs::create_directories(out / "checkpoints");
  Model model = load_model(cfg);
  factor_decoder(model);

  FinetuneConfig fc = cfg.finetune;
  fc.n_f = cfg.train.n_f;
  fc.n_u = cfg.train.n_u;
  fc.n_b = cfg.train.n_b;
  fc.w1 = cfg.train.w1;
  fc.w2 = cfg.train.w2;
  fc.w3 = cfg.train.w3;
  const auto log = finetune(model, fc, cfg.domain);

  ExperimentManifest man = make_manifest("finetune", cfg);
  const fs::path ck = out / "checkpoints" / "finetuned.ckpt";
  model.save(ck);
  man.artifacts.push_back(ck.string());
  write_train_log(out / "finetune_log.csv", log);
  man.artifacts.push_back((out / "finetune_log.csv").string());
  man.write(out / "manifest_finetune.txt");
  std::printf("finetune: %zu steps on mu=(%g, %g, %g), %zu learnable scalars -> %s\n", log.size(),
              fc.query.beta, fc.query.nu, fc.query.rho, modulated_parameter_count(model),
              ck.string().c_str());
}

void cmd_eval(const RunConfig& cfg) {
  const fs::path out = resolve_out_dir(cfg);
  const fs::path results_dir = out / "results";
  fs::create_directories(results_dir);

  const auto refs = load_references(cfg);
  Model model = load_model(cfg);
  const EvalPlan plan = plan_from(cfg);
  const ModelGridPredictor pred(model, plan);

  const auto records = evaluate_model(pred, plan, refs);
  write_results_csv(results_dir / "results.csv", pred.name(), model.kind, records);

  const fs::path plot_dir = results_dir / "plot_data";
  for (const auto& ref : refs) {
    const auto u_hat = pred.predict(ref);
    write_plot_data(plot_dir, pred.name(), ref, u_hat, cfg.snapshots);
  }

  ExperimentManifest man = make_manifest("eval", cfg);
  man.artifacts.push_back((results_dir / "results.csv").string());
  man.artifacts.push_back(plot_dir.string());
  man.write(out / "manifest_eval.txt");
  print_summary(pred.name(), records);
}

void cmd_ablate(const RunConfig& cfg) {
  const fs::path out = resolve_out_dir(cfg);
  const fs::path results_dir = out / "results";
  fs::create_directories(results_dir);
  fs::create_directories(out / "checkpoints");

  const auto refs = load_references(cfg);
  const EvalPlan plan = plan_from(cfg);
  ExperimentManifest man = make_manifest("ablate", cfg);

  // identical pre-training budget for every variant
  Model dldmf_model = configured_model(cfg, ModelKind::Dldmf);
  train(dldmf_model, cfg.train, cfg.domain);
  dldmf_model.save(out / "checkpoints" / "ablate_dldmf.ckpt");
  man.artifacts.push_back((out / "checkpoints" / "ablate_dldmf.ckpt").string());

  Model static_model = configured_model(cfg, ModelKind::StaticFusion);
  train(static_model, cfg.train, cfg.domain);
  static_model.save(out / "checkpoints" / "ablate_static.ckpt");
  man.artifacts.push_back((out / "checkpoints" / "ablate_static.ckpt").string());

  Model autodecode_view = dldmf_model;  // shared pre-training, auto-decoded z_0
  autodecode_view.kind = ModelKind::AutodecodeInit;

  std::vector<std::pair<std::string, std::vector<MetricsRecord>>> groups;
  groups.emplace_back("dldmf", evaluate_model(ModelGridPredictor(dldmf_model, plan), plan, refs));
  groups.emplace_back("static_fusion",
                      evaluate_model(ModelGridPredictor(static_model, plan), plan, refs));
  groups.emplace_back("autodecode_init",
                      evaluate_model(ModelGridPredictor(autodecode_view, plan), plan, refs));

  write_combined_results(results_dir / "ablation.csv", groups);
  man.artifacts.push_back((results_dir / "ablation.csv").string());
  man.write(out / "manifest_ablate.txt");
  for (const auto& [name, records] : groups) print_summary(name, records);
}

void cmd_timing(const RunConfig& cfg) {
  const fs::path out = resolve_out_dir(cfg);
  const fs::path results_dir = out / "results";
  fs::create_directories(results_dir);

  Model model = load_model(cfg);
  if (model.kind == ModelKind::AutodecodeInit) model.kind = ModelKind::Dldmf;
  const auto stats = timing_probe(model, cfg.domain, cfg.timing_queries, cfg.autodecode_steps,
                                  cfg.autodecode_rate, cfg.seed);

  const double ratio = stats.median_feedforward_ms() > 0.0
                           ? stats.median_autodecode_ms() / stats.median_feedforward_ms()
                           : 0.0;
  std::ofstream os(results_dir / "timing.csv", std::ios::trunc);
  if (!os) throw ConfigError("timing: cannot open output");
  os << "metric,median_ms,grad_steps\n";
  char buf[160];
  std::snprintf(buf, sizeof(buf), "feedforward_init,%.6f,%d\n", stats.median_feedforward_ms(),
                stats.feedforward_grad_steps);
  os << buf;
  std::snprintf(buf, sizeof(buf), "full_query,%.6f,%d\n", stats.median_full_query_ms(),
                stats.feedforward_grad_steps);
  os << buf;
  std::snprintf(buf, sizeof(buf), "autodecode_init,%.6f,%d\n", stats.median_autodecode_ms(),
                stats.autodecode_grad_steps);
  os << buf;
  std::snprintf(buf, sizeof(buf), "autodecode_over_feedforward,%.3f,\n", ratio);
  os << buf;
  os.close();

  ExperimentManifest man = make_manifest("timing", cfg);
  man.artifacts.push_back((results_dir / "timing.csv").string());
  man.write(out / "manifest_timing.txt");
  std::printf(
      "timing: feedforward %.4f ms (0 grad steps), autodecode %.4f ms (%d grad steps), "
      "ratio %.1fx\n",
      stats.median_feedforward_ms(), stats.median_autodecode_ms(), stats.autodecode_grad_steps,
      ratio);
}

void run_command(const std::string& name, const RunConfig& cfg) {
  if (name == "generate") return cmd_generate(cfg);
  if (name == "train") return cmd_train(cfg);
  if (name == "finetune") return cmd_finetune(cfg);
  if (name == "eval") return cmd_eval(cfg);
  if (name == "ablate") return cmd_ablate(cfg);
  if (name == "timing") return cmd_timing(cfg);
  throw ConfigError("unknown command '" + name + "'");
}

}  // namespace dldmf

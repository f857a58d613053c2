// Command-line front end: dataset generation, pre-training, SVD fine-tuning,
// evaluation, ablations, and latency probes, driven by a config file.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "dldmf/errors.hpp"
#include "dldmf/harness.hpp"
#include "dldmf/run_config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"DLDMF: parameterized CDR solver surrogate with latent dynamics"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  long long seed = -1;

  for (const char* name : {"generate", "train", "finetune", "eval", "ablate", "timing"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "run configuration file");
    sub->add_option("--seed", seed, "global seed (overrides the config)");
    sub->add_option("--out", out_dir, "output directory (overrides config and DLDMF_OUT)");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    dldmf::RunConfig cfg =
        config_path.empty() ? dldmf::parse_config_text("", "<defaults>")
                            : dldmf::parse_config(config_path);
    if (seed >= 0) {
      cfg.seed = static_cast<std::uint64_t>(seed);
      cfg.finalize();
    }
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    dldmf::run_command(command, cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

#pragma once

#include <filesystem>
#include <string>

#include "dldmf/run_config.hpp"

namespace dldmf {

// Resolved output locations for a run: --out flag beats [paths] out beats
// the DLDMF_OUT environment variable beats ./runs.
std::filesystem::path resolve_out_dir(const RunConfig& cfg);
std::filesystem::path resolve_data_dir(const RunConfig& cfg);
std::filesystem::path resolve_checkpoint(const RunConfig& cfg);

// End-to-end commands. Each writes its artifacts plus a manifest and throws
// on failure (the CLI maps exceptions to nonzero exits).
void cmd_generate(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_finetune(const RunConfig& cfg);
void cmd_eval(const RunConfig& cfg);
void cmd_ablate(const RunConfig& cfg);
void cmd_timing(const RunConfig& cfg);

void run_command(const std::string& name, const RunConfig& cfg);

}  // namespace dldmf

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dldmf/reference_solver.hpp"

namespace dldmf {

// Dataset file: text header lines (nx=, nt=, beta=, nu=, rho=, ic=, t_max=)
// terminated by a blank line, then nt*nx raw little-endian f64 in row-major
// (t-major) order.
void write_grid(const std::filesystem::path& path, const SolutionGrid& g);
SolutionGrid read_grid(const std::filesystem::path& path);

struct ManifestRow {
  std::string file;
  PdeParams mu;
};

// Sweep manifest CSV listing (file, beta, nu, rho).
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows);
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

}  // namespace dldmf

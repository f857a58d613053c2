#include "dldmf/dataset_io.hpp"

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dldmf/errors.hpp"

namespace dldmf {

static_assert(std::endian::native == std::endian::little,
              "dataset IO assumes a little-endian host");

namespace {
std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

void write_grid(const std::filesystem::path& path, const SolutionGrid& g) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("dataset: cannot open " + path.string() + " for writing");
  os << "nx=" << g.nx << "\n";
  os << "nt=" << g.nt << "\n";
  os << "beta=" << fmt_double(g.mu.beta) << "\n";
  os << "nu=" << fmt_double(g.mu.nu) << "\n";
  os << "rho=" << fmt_double(g.mu.rho) << "\n";
  os << "ic=" << to_string(g.ic) << "\n";
  os << "t_max=" << fmt_double(g.t_max) << "\n";
  os << "\n";
  os.write(reinterpret_cast<const char*>(g.u.data()),
           static_cast<std::streamsize>(g.u.size() * sizeof(double)));
  if (!os) throw ConfigError("dataset: write to " + path.string() + " failed");
}

SolutionGrid read_grid(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("dataset: cannot open " + path.string());
  SolutionGrid g;
  bool saw_nx = false, saw_nt = false, saw_tmax = false;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) break;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("dataset: malformed header line '" + line + "' in " + path.string());
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "nx") { g.nx = std::stoi(val); saw_nx = true; }
    else if (key == "nt") { g.nt = std::stoi(val); saw_nt = true; }
    else if (key == "beta") g.mu.beta = std::stod(val);
    else if (key == "nu") g.mu.nu = std::stod(val);
    else if (key == "rho") g.mu.rho = std::stod(val);
    else if (key == "ic") g.ic = ic_from_string(val);
    else if (key == "t_max") { g.t_max = std::stod(val); saw_tmax = true; }
    else throw ConfigError("dataset: unknown header key '" + key + "' in " + path.string());
  }
  if (!saw_nx || !saw_nt || !saw_tmax)
    throw ConfigError("dataset: incomplete header in " + path.string());
  if (g.nx <= 0 || g.nt <= 0)
    throw ConfigError("dataset: non-positive grid dims in " + path.string());

  g.u.resize(static_cast<std::size_t>(g.nx) * g.nt);
  is.read(reinterpret_cast<char*>(g.u.data()),
          static_cast<std::streamsize>(g.u.size() * sizeof(double)));
  if (!is) throw ConfigError("dataset: truncated payload in " + path.string());

  g.x.resize(g.nx);
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  for (int i = 0; i < g.nx; ++i) g.x[i] = kTwoPi * i / g.nx;
  g.t.resize(g.nt);
  const double row_dt = g.t_max / (g.nt - 1);
  for (int r = 0; r < g.nt; ++r) g.t[r] = row_dt * r;
  return g;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw ConfigError("manifest: cannot open " + path.string() + " for writing");
  os << "file,beta,nu,rho\n";
  for (const auto& r : rows)
    os << r.file << "," << fmt_double(r.mu.beta) << "," << fmt_double(r.mu.nu) << ","
       << fmt_double(r.mu.rho) << "\n";
  if (!os) throw ConfigError("manifest: write to " + path.string() + " failed");
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("manifest: cannot open " + path.string());
  std::vector<ManifestRow> rows;
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("manifest: empty file " + path.string());
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    ManifestRow r;
    std::string tok;
    if (!std::getline(ss, r.file, ',')) continue;
    if (!std::getline(ss, tok, ',')) throw ConfigError("manifest: bad row '" + line + "'");
    r.mu.beta = std::stod(tok);
    if (!std::getline(ss, tok, ',')) throw ConfigError("manifest: bad row '" + line + "'");
    r.mu.nu = std::stod(tok);
    if (!std::getline(ss, tok, ',')) throw ConfigError("manifest: bad row '" + line + "'");
    r.mu.rho = std::stod(tok);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace dldmf

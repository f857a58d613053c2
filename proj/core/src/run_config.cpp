#include "dldmf/run_config.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dldmf/errors.hpp"
#include "dldmf/rng.hpp"

namespace dldmf {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: key '" + key + "' expects a boolean, got '" + v + "'");
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
  }
}

long parse_int(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
  }
}

ModelKind kind_from_string(const std::string& v) {
  if (v == "dldmf") return ModelKind::Dldmf;
  if (v == "static_fusion") return ModelKind::StaticFusion;
  if (v == "autodecode_init") return ModelKind::AutodecodeInit;
  throw ConfigError("config: unknown model kind '" + v + "'");
}

std::vector<PdeParams> parse_mu_list(const std::string& v, const std::string& key) {
  std::vector<PdeParams> out;
  std::istringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item = trim(item);
    if (item.empty()) continue;
    PdeParams mu;
    const auto c1 = item.find(':');
    if (c1 == std::string::npos) {
      mu.beta = parse_double(item, key);  // single-axis shorthand, resolved in finalize()
      mu.nu = std::nan("");
      out.push_back(mu);
      continue;
    }
    const auto c2 = item.find(':', c1 + 1);
    if (c2 == std::string::npos)
      throw ConfigError("config: key '" + key + "' expects beta:nu:rho triples");
    mu.beta = parse_double(item.substr(0, c1), key);
    mu.nu = parse_double(item.substr(c1 + 1, c2 - c1 - 1), key);
    mu.rho = parse_double(item.substr(c2 + 1), key);
    out.push_back(mu);
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& v, const std::string& key) {
  std::vector<double> out;
  std::istringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(item, key));
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& v, const std::string& key) {
  std::vector<int> out;
  std::istringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item = trim(item);
    if (!item.empty()) out.push_back(static_cast<int>(parse_int(item, key)));
  }
  if (out.empty()) throw ConfigError("config: key '" + key + "' expects a width list");
  return out;
}

std::array<bool, 3> family_axes(const std::string& family) {
  if (family == "convection") return {true, false, false};
  if (family == "diffusion") return {false, true, false};
  if (family == "reaction") return {false, false, true};
  if (family == "conv_diff") return {true, true, false};
  if (family == "reac_diff") return {false, true, true};
  if (family == "conv_diff_reac") return {true, true, true};
  throw ConfigError("config: unknown family '" + family + "'");
}

}  // namespace

void RunConfig::finalize() {
  const auto axes = family_axes(family);
  train.mu_set.active = axes;
  for (int a = 0; a < 3; ++a) {
    train.mu_set.lo[a] = axes[a] ? lo : 0.0;
    train.mu_set.hi[a] = axes[a] ? hi : 0.0;
    train.mu_set.points[a] = axes[a] ? points : 1;
  }
  model.mu_lo = train.mu_set.lo;
  model.mu_hi = train.mu_set.hi;
  model.seed = seed;
  train.seed = seed;
  finetune.seed = split_seed(seed, "finetune");

  int single_axis = -1;
  int n_active = 0;
  for (int a = 0; a < 3; ++a)
    if (axes[a]) {
      ++n_active;
      single_axis = a;
    }
  for (auto& mu : extra_mu) {
    if (std::isnan(mu.nu)) {  // single-axis shorthand
      if (n_active != 1)
        throw ConfigError("config: extra_mu shorthand needs a single-coefficient family; "
                          "use beta:nu:rho triples");
      const double v = mu.beta;
      mu = PdeParams{};
      if (single_axis == 0) mu.beta = v;
      if (single_axis == 1) mu.nu = v;
      if (single_axis == 2) mu.rho = v;
    }
  }
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  cfg.raw = text;

  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("config: malformed section header at " + origin + ":" +
                          std::to_string(lineno));
      section = t.substr(1, t.size() - 2);
      if (section != "domain" && section != "model" && section != "integrator" &&
          section != "train" && section != "finetune" && section != "data" &&
          section != "eval" && section != "timing" && section != "paths" && section != "run")
        throw ConfigError("config: unknown section '" + section + "'");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected key = value at " + origin + ":" +
                        std::to_string(lineno));
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    const std::string full = section + "." + key;

    if (full == "run.seed") cfg.seed = static_cast<std::uint64_t>(parse_int(val, full));
    else if (full == "domain.t_train") cfg.domain.t_train = parse_double(val, full);
    else if (full == "domain.t_test") cfg.domain.t_test = parse_double(val, full);
    else if (full == "domain.ic") cfg.domain.ic = ic_from_string(val);
    else if (full == "model.spatial_dim") cfg.model.spatial_dim = static_cast<int>(parse_int(val, full));
    else if (full == "model.param_dim") cfg.model.param_dim = static_cast<int>(parse_int(val, full));
    else if (full == "model.latent_dim") cfg.model.latent_dim = static_cast<int>(parse_int(val, full));
    else if (full == "model.decoder_depth") cfg.model.decoder_depth = static_cast<int>(parse_int(val, full));
    else if (full == "model.decoder_width") cfg.model.decoder_width = static_cast<int>(parse_int(val, full));
    else if (full == "model.spatial_hidden") cfg.model.spatial_hidden = parse_int_list(val, full);
    else if (full == "model.param_hidden") cfg.model.param_hidden = parse_int_list(val, full);
    else if (full == "model.latent_init_hidden") cfg.model.latent_init_hidden = parse_int_list(val, full);
    else if (full == "model.dynamics_hidden") cfg.model.dynamics_hidden = parse_int_list(val, full);
    else if (full == "model.time_encoder_hidden") cfg.model.time_encoder_hidden = parse_int_list(val, full);
    else if (full == "model.periodic_features") cfg.model.periodic_features = parse_bool(val, full);
    else if (full == "model.kind") cfg.kind = kind_from_string(val);
    else if (full == "integrator.step") cfg.integrator.step = parse_double(val, full);
    else if (full == "integrator.max_steps") cfg.integrator.max_steps = parse_int(val, full);
    else if (full == "train.w1") cfg.train.w1 = parse_double(val, full);
    else if (full == "train.w2") cfg.train.w2 = parse_double(val, full);
    else if (full == "train.w3") cfg.train.w3 = parse_double(val, full);
    else if (full == "train.lr") cfg.train.adam.lr = parse_double(val, full);
    else if (full == "train.beta1") cfg.train.adam.beta1 = parse_double(val, full);
    else if (full == "train.beta2") cfg.train.adam.beta2 = parse_double(val, full);
    else if (full == "train.eps") cfg.train.adam.eps = parse_double(val, full);
    else if (full == "train.steps") cfg.train.steps = static_cast<int>(parse_int(val, full));
    else if (full == "train.mu_batch") cfg.train.mu_batch = static_cast<int>(parse_int(val, full));
    else if (full == "train.n_f") cfg.train.n_f = static_cast<int>(parse_int(val, full));
    else if (full == "train.n_u") cfg.train.n_u = static_cast<int>(parse_int(val, full));
    else if (full == "train.n_b") cfg.train.n_b = static_cast<int>(parse_int(val, full));
    else if (full == "train.checkpoint_every") cfg.train.checkpoint_every = static_cast<int>(parse_int(val, full));
    else if (full == "train.probe_every") cfg.train.probe_every = static_cast<int>(parse_int(val, full));
    else if (full == "finetune.beta") cfg.finetune.query.beta = parse_double(val, full);
    else if (full == "finetune.nu") cfg.finetune.query.nu = parse_double(val, full);
    else if (full == "finetune.rho") cfg.finetune.query.rho = parse_double(val, full);
    else if (full == "finetune.steps") cfg.finetune.steps = static_cast<int>(parse_int(val, full));
    else if (full == "finetune.lr") cfg.finetune.lr = parse_double(val, full);
    else if (full == "finetune.train_first_last") cfg.finetune.train_first_last = parse_bool(val, full);
    else if (full == "data.family") cfg.family = val;
    else if (full == "data.lo") cfg.lo = parse_double(val, full);
    else if (full == "data.hi") cfg.hi = parse_double(val, full);
    else if (full == "data.points") cfg.points = static_cast<int>(parse_int(val, full));
    else if (full == "data.extra_mu") cfg.extra_mu = parse_mu_list(val, full);
    else if (full == "data.nx") cfg.nx = static_cast<int>(parse_int(val, full));
    else if (full == "data.nt_per_unit") cfg.nt_per_unit = static_cast<int>(parse_int(val, full));
    else if (full == "data.max_dt") cfg.max_dt = parse_double(val, full);
    else if (full == "eval.snapshots") cfg.snapshots = parse_double_list(val, full);
    else if (full == "eval.rollout") cfg.rollout = parse_bool(val, full);
    else if (full == "timing.queries") cfg.timing_queries = static_cast<int>(parse_int(val, full));
    else if (full == "timing.autodecode_steps") cfg.autodecode_steps = static_cast<int>(parse_int(val, full));
    else if (full == "timing.autodecode_rate") cfg.autodecode_rate = parse_double(val, full);
    else if (full == "paths.data_dir") cfg.data_dir = val;
    else if (full == "paths.checkpoint") cfg.checkpoint = val;
    else if (full == "paths.out") cfg.out_dir = val;
    else
      throw ConfigError("config: unknown key '" + full + "' at " + origin + ":" +
                        std::to_string(lineno));
  }
  cfg.finalize();
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

std::vector<PdeParams> sweep_mus(const RunConfig& cfg) {
  auto mus = make_mu_set(cfg.train.mu_set);
  mus.insert(mus.end(), cfg.extra_mu.begin(), cfg.extra_mu.end());
  return mus;
}

void ExperimentManifest::write(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("manifest: cannot open " + path.string());
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch());
  os << "run_id=" << run_id << "\n";
  os << "command=" << command << "\n";
  os << "seed=" << seed << "\n";
  os << "created=" << secs.count() << "\n";
  for (const auto& a : artifacts) os << "artifact=" << a << "\n";
  os << "---config---\n";
  os << config_snapshot;
}

ExperimentManifest make_manifest(const std::string& command, const RunConfig& cfg) {
  ExperimentManifest m;
  m.command = command;
  m.seed = cfg.seed;
  m.config_snapshot = cfg.raw;
  std::uint64_t h = 0xCBF29CE484222325ull;
  auto mix = [&](std::string_view s) {
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001B3ull;
    }
  };
  mix(command);
  mix(cfg.raw);
  mix(std::to_string(cfg.seed));
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  m.run_id = buf;
  return m;
}

}  // namespace dldmf

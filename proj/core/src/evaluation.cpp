#include "dldmf/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "dldmf/errors.hpp"
#include "dldmf/parallel.hpp"
#include "dldmf/rng.hpp"

namespace dldmf {

MuRegime classify_mu(const EvalPlan& plan, const PdeParams& mu) {
  const std::array<double, 3> v{mu.beta, mu.nu, mu.rho};
  for (const auto& tm : plan.train_mus) {
    const std::array<double, 3> t{tm.beta, tm.nu, tm.rho};
    bool same = true;
    for (int i = 0; i < 3; ++i)
      if (std::abs(t[i] - v[i]) > 1e-12) same = false;
    if (same) return MuRegime::Train;
  }
  for (int i = 0; i < 3; ++i)
    if (v[i] < plan.train_lo[i] - 1e-12 || v[i] > plan.train_hi[i] + 1e-12)
      return MuRegime::OutMu;
  return MuRegime::InMu;
}

namespace {

// Decodes every row of the grid given per-row z slots. h_x is shared across
// rows; rows fan out to threads.
std::vector<double> decode_grid(const Model& m, const SolutionGrid& ref,
                                const std::vector<std::vector<double>>& slot_per_row,
                                const std::vector<double>& h_p) {
  const int nx = ref.nx;
  const int nt = ref.nt;
  std::vector<std::vector<double>> h_xs(nx);
  for (int i = 0; i < nx; ++i) h_xs[i] = m.encode_spatial(ref.x[i]);

  std::vector<double> out(static_cast<std::size_t>(nt) * nx);
  const int din = m.cfg.decoder_input_width();
  parallel_for(static_cast<std::size_t>(nt), [&](std::size_t r) {
    std::vector<double> in(din), y, scr;
    const auto& slot = slot_per_row[r];
    for (int i = 0; i < nx; ++i) {
      auto it = std::copy(h_xs[i].begin(), h_xs[i].end(), in.begin());
      it = std::copy(slot.begin(), slot.end(), it);
      std::copy(h_p.begin(), h_p.end(), it);
      eval_net<double>(m.decoder, m.params, in, y, scr);
      out[r * static_cast<std::size_t>(nx) + i] = y[0];
    }
  });
  return out;
}

std::vector<double> predict_dldmf(const Model& m, const SolutionGrid& ref) {
  const auto h_p = m.encode_param(ref.mu);
  const auto traj = m.make_trajectory_from(ref.mu, m.initial_latent(h_p), ref.t);
  std::vector<std::vector<double>> slots(ref.nt);
  for (int r = 0; r < ref.nt; ++r) {
    auto z = traj.at(static_cast<std::size_t>(r));
    slots[r].assign(z.begin(), z.end());
  }
  return decode_grid(m, ref, slots, h_p);
}

std::vector<double> predict_static(const Model& m, const SolutionGrid& ref) {
  const auto h_p = m.encode_param(ref.mu);
  std::vector<std::vector<double>> slots(ref.nt);
  for (int r = 0; r < ref.nt; ++r) {
    const double tin[1] = {ref.t[r]};
    slots[r] = eval_net<double>(m.time_encoder, m.params, tin);
  }
  return decode_grid(m, ref, slots, h_p);
}

// Auto-decoding inference: z_0 from iterative decoding of the first row.
// Without rollout the latent runs over the whole horizon from that single
// inferred state; with rollout each training-length window is re-seeded by
// auto-decoding the previous window's final predicted snapshot.
std::vector<double> predict_autodecode(const Model& m, const EvalPlan& plan,
                                       const SolutionGrid& ref) {
  const auto h_p = m.encode_param(ref.mu);
  std::vector<double> out(static_cast<std::size_t>(ref.nt) * ref.nx);

  auto infer_z = [&](std::span<const double> snapshot) {
    return autodecode_init(snapshot, ref.x, m, ref.mu, plan.autodecode_steps,
                           plan.autodecode_rate)
        .z;
  };

  if (!plan.rollout) {
    const auto z0 = infer_z(ref.row(0));
    const auto traj = m.make_trajectory_from(ref.mu, z0, ref.t);
    std::vector<std::vector<double>> slots(ref.nt);
    for (int r = 0; r < ref.nt; ++r) {
      auto z = traj.at(static_cast<std::size_t>(r));
      slots[r].assign(z.begin(), z.end());
    }
    return decode_grid(m, ref, slots, h_p);
  }

  const double window = plan.t_train;
  std::vector<double> seed_row(ref.row(0).begin(), ref.row(0).end());
  int r = 0;
  double window_start = 0.0;
  while (r < ref.nt) {
    const auto z0 = infer_z(seed_row);
    std::vector<int> rows;
    std::vector<double> local_t;
    while (r < ref.nt && ref.t[r] <= window_start + window + 1e-12) {
      rows.push_back(r);
      local_t.push_back(ref.t[r] - window_start);
      ++r;
    }
    if (rows.empty()) break;
    const auto traj = m.make_trajectory_from(ref.mu, z0, local_t);
    SolutionGrid sub = ref;
    sub.nt = static_cast<int>(rows.size());
    sub.t.assign(local_t.begin(), local_t.end());
    sub.u.clear();
    std::vector<std::vector<double>> slots(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto z = traj.at(i);
      slots[i].assign(z.begin(), z.end());
    }
    const auto pred = decode_grid(m, sub, slots, h_p);
    for (std::size_t i = 0; i < rows.size(); ++i)
      std::copy(pred.begin() + static_cast<std::ptrdiff_t>(i) * ref.nx,
                pred.begin() + static_cast<std::ptrdiff_t>(i + 1) * ref.nx,
                out.begin() + static_cast<std::ptrdiff_t>(rows[i]) * ref.nx);
    // last predicted row of this window seeds the next
    seed_row.assign(out.begin() + static_cast<std::ptrdiff_t>(rows.back()) * ref.nx,
                    out.begin() + static_cast<std::ptrdiff_t>(rows.back() + 1) * ref.nx);
    window_start = ref.t[rows.back()];
  }
  return out;
}

}  // namespace

std::vector<double> ModelGridPredictor::predict(const SolutionGrid& ref) const {
  switch (model_->kind) {
    case ModelKind::Dldmf: return predict_dldmf(*model_, ref);
    case ModelKind::StaticFusion: return predict_static(*model_, ref);
    case ModelKind::AutodecodeInit: return predict_autodecode(*model_, *plan_, ref);
  }
  throw ConfigError("unknown model kind");
}

std::vector<MetricsRecord> evaluate_model(const GridPredictor& pred, const EvalPlan& plan,
                                          std::span<const SolutionGrid> references) {
  std::vector<MetricsRecord> records;
  for (const auto& ref : references) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto u_hat = pred.predict(ref);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (u_hat.size() != ref.u.size())
      throw DimensionError("evaluate_model: prediction grid size mismatch");

    int in_rows = 0;
    while (in_rows < ref.nt && ref.t[in_rows] <= plan.t_train + 1e-12) ++in_rows;
    const std::size_t nin = static_cast<std::size_t>(in_rows) * ref.nx;

    const MuRegime mr = classify_mu(plan, ref.mu);
    if (in_rows > 0) {
      MetricsRecord rec;
      rec.m = metrics({u_hat.data(), nin}, {ref.u.data(), nin});
      rec.time_regime = TimeRegime::InT;
      rec.mu_regime = mr;
      rec.mu = ref.mu;
      rec.latency_ms = ms;
      records.push_back(rec);
    }
    if (in_rows < ref.nt) {
      MetricsRecord rec;
      rec.m = metrics({u_hat.data() + nin, u_hat.size() - nin},
                      {ref.u.data() + nin, ref.u.size() - nin});
      rec.time_regime = TimeRegime::OutT;
      rec.mu_regime = mr;
      rec.mu = ref.mu;
      rec.latency_ms = ms;
      records.push_back(rec);
    }
  }
  return records;
}

std::vector<RegimeSummary> summarize(std::span<const MetricsRecord> records) {
  std::vector<RegimeSummary> out;
  for (TimeRegime tr : {TimeRegime::InT, TimeRegime::OutT}) {
    for (MuRegime mr : {MuRegime::Train, MuRegime::InMu, MuRegime::OutMu}) {
      RegimeSummary s;
      s.time_regime = tr;
      s.mu_regime = mr;
      double sum = 0.0, sum2 = 0.0;
      for (const auto& r : records) {
        if (r.time_regime != tr || r.mu_regime != mr) continue;
        ++s.count;
        sum += r.m.l2_rel;
        sum2 += r.m.l2_rel * r.m.l2_rel;
        s.mean_max_err += r.m.max_err;
        s.mean_exp_var += r.m.explained_variance;
      }
      if (s.count == 0) continue;
      s.mean_l2_rel = sum / s.count;
      s.std_l2_rel = std::sqrt(std::max(0.0, sum2 / s.count - s.mean_l2_rel * s.mean_l2_rel));
      s.mean_max_err /= s.count;
      s.mean_exp_var /= s.count;
      out.push_back(s);
    }
  }
  return out;
}

namespace {
double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace

double TimingStats::median_feedforward_ms() const { return median_of(feedforward_ms); }
double TimingStats::median_full_query_ms() const { return median_of(full_query_ms); }
double TimingStats::median_autodecode_ms() const { return median_of(autodecode_ms); }

TimingStats timing_probe(const Model& model, const DomainSpec& domain, int n_queries,
                         int autodecode_steps, double autodecode_rate, std::uint64_t seed) {
  TimingStats stats;
  stats.autodecode_grad_steps = autodecode_steps;
  if (n_queries <= 0) return stats;
  if (model.kind == ModelKind::StaticFusion)
    throw ConfigError("timing_probe: latent initialization paths need a dldmf model");

  Rng rng(split_seed(seed, "timing"));
  const int nx = 256;
  std::vector<double> xs(nx);
  for (int i = 0; i < nx; ++i) xs[i] = domain.x_min + (domain.x_max - domain.x_min) * i / nx;
  std::vector<double> u0(nx);
  for (int i = 0; i < nx; ++i) u0[i] = initial_condition(xs[i], domain.ic);
  const int nt = 101;
  std::vector<double> times(nt);
  for (int r = 0; r < nt; ++r) times[r] = domain.t_train * r / (nt - 1);

  SolutionGrid shape;
  shape.nx = nx;
  shape.nt = nt;
  shape.t_max = domain.t_train;
  shape.x = xs;
  shape.t = times;
  shape.ic = domain.ic;

  for (int q = 0; q < n_queries; ++q) {
    PdeParams mu;
    mu.beta = uniform(rng, model.cfg.mu_lo[0], std::max(model.cfg.mu_lo[0], model.cfg.mu_hi[0]));
    mu.nu = uniform(rng, model.cfg.mu_lo[1], std::max(model.cfg.mu_lo[1], model.cfg.mu_hi[1]));
    mu.rho = uniform(rng, model.cfg.mu_lo[2], std::max(model.cfg.mu_lo[2], model.cfg.mu_hi[2]));

    auto t0 = std::chrono::steady_clock::now();
    const auto h_p = model.encode_param(mu);
    const auto z0 = model.initial_latent(h_p);
    stats.feedforward_ms.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count());

    t0 = std::chrono::steady_clock::now();
    shape.mu = mu;
    const auto traj = model.make_trajectory_from(mu, z0, shape.t);
    std::vector<std::vector<double>> slots(shape.nt);
    for (int r = 0; r < shape.nt; ++r) {
      auto z = traj.at(static_cast<std::size_t>(r));
      slots[r].assign(z.begin(), z.end());
    }
    decode_grid(model, shape, slots, h_p);
    stats.full_query_ms.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count() +
        stats.feedforward_ms.back());

    t0 = std::chrono::steady_clock::now();
    autodecode_init(u0, xs, model, mu, autodecode_steps, autodecode_rate);
    stats.autodecode_ms.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count());
  }
  return stats;
}

void write_results_csv(const std::filesystem::path& path, const std::string& model_name,
                       ModelKind kind, std::span<const MetricsRecord> records) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw ConfigError("results: cannot open " + path.string());
  os << "model,kind,beta,nu,rho,time_regime,mu_regime,l2_abs,l2_rel,max_err,exp_var,latency_ms\n";
  char buf[512];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%.17g,%.17g,%s,%s,%.17g,%.17g,%.17g,%.17g,%.3f\n",
                  model_name.c_str(), to_string(kind), r.mu.beta, r.mu.nu, r.mu.rho,
                  to_string(r.time_regime), to_string(r.mu_regime), r.m.l2_abs,
                  r.m.rel_defined ? r.m.l2_rel : std::nan(""), r.m.max_err,
                  r.m.explained_variance, r.latency_ms);
    os << buf;
  }
}

void write_plot_data(const std::filesystem::path& dir, const std::string& model_name,
                     const SolutionGrid& ref, std::span<const double> pred,
                     std::span<const double> snapshot_times) {
  std::filesystem::create_directories(dir);
  for (double snap : snapshot_times) {
    int best = 0;
    for (int r = 1; r < ref.nt; ++r)
      if (std::abs(ref.t[r] - snap) < std::abs(ref.t[best] - snap)) best = r;
    char fname[256];
    std::snprintf(fname, sizeof(fname), "%s_beta%g_nu%g_rho%g_t%g.dat", model_name.c_str(),
                  ref.mu.beta, ref.mu.nu, ref.mu.rho, ref.t[best]);
    std::ofstream os(dir / fname, std::ios::trunc);
    if (!os) throw ConfigError("plot data: cannot open " + (dir / fname).string());
    os << "# x u_hat\n";
    char buf[128];
    for (int i = 0; i < ref.nx; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", ref.x[i],
                    pred[static_cast<std::size_t>(best) * ref.nx + i]);
      os << buf;
    }
  }
}

}  // namespace dldmf

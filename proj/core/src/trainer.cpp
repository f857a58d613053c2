#include "dldmf/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "dldmf/errors.hpp"
#include "dldmf/parallel.hpp"
#include "dldmf/rng.hpp"

namespace dldmf {

std::vector<PdeParams> make_mu_set(const MuSetSpec& spec) {
  if (!spec.active[0] && !spec.active[1] && !spec.active[2])
    throw ConfigError("mu set: at least one coefficient must be active");
  std::array<std::vector<double>, 3> axes;
  for (int a = 0; a < 3; ++a) {
    if (!spec.active[a]) {
      axes[a] = {0.0};
      continue;
    }
    if (spec.lo[a] > spec.hi[a]) throw ConfigError("mu set: lo > hi");
    const int k = std::max(1, spec.points[a]);
    for (int i = 0; i < k; ++i)
      axes[a].push_back(k == 1 ? spec.lo[a]
                               : spec.lo[a] + (spec.hi[a] - spec.lo[a]) * i / (k - 1));
  }
  std::vector<PdeParams> out;
  out.reserve(axes[0].size() * axes[1].size() * axes[2].size());
  for (double b : axes[0])
    for (double n : axes[1])
      for (double r : axes[2]) out.push_back({b, n, r});
  return out;
}

// ---------------------------------------------------------------------------
// Untraced losses against a point evaluator (test / reporting path)
// ---------------------------------------------------------------------------

LossParts compute_losses(const std::function<const PointEvaluator&(std::size_t)>& evaluator_for,
                         const CollocationBatch& batch, const DomainSpec& domain) {
  if (batch.mus.empty()) throw ConfigError("compute_losses: empty batch");
  LossParts parts;
  const std::size_t b = batch.mus.size();
  for (std::size_t i = 0; i < b; ++i) {
    const PointEvaluator& ev = evaluator_for(i);
    const PdeParams& mu = batch.mus[i];
    if (batch.residual_pts[i].empty() || batch.initial_xs[i].empty() ||
        batch.boundary_ts[i].empty())
      throw ConfigError("compute_losses: empty collocation sub-batch");

    double lf = 0.0;
    for (const auto& p : batch.residual_pts[i]) {
      const double r = residual_from(ev.point_eval({p.x, p.t, mu}), mu);
      lf += r * r;
    }
    parts.l_f += lf / static_cast<double>(batch.residual_pts[i].size());

    double lu = 0.0;
    for (double x : batch.initial_xs[i]) {
      const double d = ev.point_eval({x, 0.0, mu}).u - initial_condition(x, domain.ic);
      lu += d * d;
    }
    parts.l_u += lu / static_cast<double>(batch.initial_xs[i].size());

    double lb = 0.0;
    for (double t : batch.boundary_ts[i]) {
      const double d =
          ev.point_eval({domain.x_min, t, mu}).u - ev.point_eval({domain.x_max, t, mu}).u;
      lb += d * d;
    }
    parts.l_b += lb / static_cast<double>(batch.boundary_ts[i].size());
  }
  parts.l_u /= static_cast<double>(b);
  parts.l_f /= static_cast<double>(b);
  parts.l_b /= static_cast<double>(b);
  return parts;
}

LossParts compute_losses(const PointEvaluator& evaluator, const CollocationBatch& batch,
                         const DomainSpec& domain) {
  return compute_losses([&](std::size_t) -> const PointEvaluator& { return evaluator; }, batch,
                        domain);
}

LossParts compute_losses(const Model& model, const CollocationBatch& batch,
                         const DomainSpec& domain) {
  std::vector<LatentTrajectory> trajs(batch.mus.size());
  std::vector<ModelPointEvaluator> evs;
  evs.reserve(batch.mus.size());
  const bool needs_latent = model.kind != ModelKind::StaticFusion;
  for (std::size_t i = 0; i < batch.mus.size(); ++i) {
    if (needs_latent) {
      std::vector<double> times{0.0};
      for (const auto& p : batch.residual_pts[i]) times.push_back(p.t);
      for (double t : batch.boundary_ts[i]) times.push_back(t);
      std::sort(times.begin(), times.end());
      trajs[i] = model.make_trajectory(batch.mus[i], times);
      evs.emplace_back(model, &trajs[i]);
    } else {
      evs.emplace_back(model);
    }
  }
  return compute_losses(
      [&](std::size_t i) -> const PointEvaluator& { return evs[i]; }, batch, domain);
}

// ---------------------------------------------------------------------------
// Traced per-instance loss + gradient
// ---------------------------------------------------------------------------

namespace {

struct InstanceWork {
  Tape<Dual2> dual;
  Tape<double> scalar;
  std::vector<double> grad;
  explicit InstanceWork(const ParamStore* ps)
      : dual(ps), scalar(ps), grad(ps->size(), 0.0) {}
};

struct InstanceLoss {
  double l_u = 0, l_f = 0, l_b = 0;
};

// Dual-tape feature lift; returns the contiguous feature node range.
std::pair<std::uint32_t, int> trace_features(Tape<Dual2>& td, double x, bool periodic) {
  if (periodic) {
    const std::uint32_t xl = td.leaf(Dual2::seed(x));
    const std::uint32_t s = td.sin_(xl);
    td.cos_(xl);
    return {s, 2};
  }
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  double w = std::fmod(x, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  const std::uint32_t xl = td.leaf(Dual2::seed(w));
  return {td.copy(xl), 1};
}

std::pair<std::uint32_t, int> scalar_features(Tape<double>& ts, double x, bool periodic) {
  if (periodic) {
    const std::uint32_t s = ts.leaf(std::sin(x));
    ts.leaf(std::cos(x));
    return {s, 2};
  }
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  double w = std::fmod(x, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  return {ts.leaf(w), 1};
}

struct ResidualConsts {
  std::uint32_t one, beta, nu, rho;
};

// r = u_t + beta u_x - nu u_xx - rho u (1 - u), then r^2.
std::uint32_t trace_residual_square(Tape<Dual2>& td, std::uint32_t ut, std::uint32_t u_node,
                                    const ResidualConsts& c) {
  const std::uint32_t ux = td.pick_d1(u_node);
  const std::uint32_t uxx = td.pick_d2(u_node);
  const std::uint32_t uval = td.pick_val(u_node);
  std::uint32_t r = td.add(ut, td.mul(c.beta, ux));
  r = td.sub(r, td.mul(c.nu, uxx));
  r = td.sub(r, td.mul(c.rho, td.mul(uval, td.sub(c.one, uval))));
  return td.square_(r);
}

// Sorted query bookkeeping for one instance trajectory.
struct QueryPlan {
  std::vector<double> times;            // ascending
  std::vector<int> residual_slot;       // per query: residual point index or -1
  std::vector<std::size_t> res_to_query;  // residual point -> query index
  std::vector<std::size_t> bnd_to_query;  // boundary point -> query index
};

QueryPlan plan_queries(std::span<const CollocationBatch::XT> res,
                       std::span<const double> bnd) {
  struct Item {
    double t;
    int res_slot;  // -1 for boundary
    int src;
  };
  std::vector<Item> items;
  items.reserve(res.size() + bnd.size());
  for (std::size_t i = 0; i < res.size(); ++i)
    items.push_back({res[i].t, static_cast<int>(i), static_cast<int>(i)});
  for (std::size_t i = 0; i < bnd.size(); ++i)
    items.push_back({bnd[i], -1, static_cast<int>(i)});
  std::stable_sort(items.begin(), items.end(),
                   [](const Item& a, const Item& b) { return a.t < b.t; });
  QueryPlan plan;
  plan.times.resize(items.size());
  plan.residual_slot.resize(items.size());
  plan.res_to_query.resize(res.size());
  plan.bnd_to_query.resize(bnd.size());
  for (std::size_t q = 0; q < items.size(); ++q) {
    plan.times[q] = items[q].t;
    plan.residual_slot[q] = items[q].res_slot;
    if (items[q].res_slot >= 0)
      plan.res_to_query[items[q].src] = q;
    else
      plan.bnd_to_query[items[q].src] = q;
  }
  return plan;
}

InstanceLoss eval_instance_dldmf(const Model& m, const DomainSpec& domain, const PdeParams& mu,
                                 std::span<const CollocationBatch::XT> res_pts,
                                 std::span<const double> init_xs,
                                 std::span<const double> bnd_ts, double seed_u, double seed_f,
                                 double seed_b, InstanceWork& w) {
  const int dz = m.cfg.latent_dim;
  const int dp = m.cfg.param_dim;
  const int dx = m.cfg.spatial_dim;
  const bool periodic = m.cfg.periodic_features;

  const auto mu_n = m.normalize_mu(mu);
  const auto h_p = m.encode_param(mu);
  const auto z0 = m.initial_latent(h_p);

  QueryPlan plan = plan_queries(res_pts, bnd_ts);
  const StepSchedule sched = step_schedule(0.0, plan.times, m.integrator);
  const std::size_t S = sched.times.empty() ? 0 : sched.times.size() - 1;

  // Forward walk, keeping every intermediate state for the reverse recompute.
  std::vector<std::vector<double>> states(S + 1);
  states[0] = z0.z;
  {
    std::vector<double> in(static_cast<std::size_t>(dz + dp));
    std::copy(h_p.begin(), h_p.end(), in.begin() + dz);
    std::vector<double> y, scr;
    VelocityFn f = [&](std::span<const double> z, std::span<double> out) {
      std::copy(z.begin(), z.end(), in.begin());
      eval_net<double>(m.dynamics, m.params, in, y, scr);
      std::copy(y.begin(), y.end(), out.begin());
    };
    std::vector<double> k1(dz), k2(dz), k3(dz), k4(dz), tmp(dz);
    for (std::size_t s = 1; s <= S; ++s) {
      states[s] = states[s - 1];
      rk4_step_inplace(f, states[s], sched.times[s] - sched.times[s - 1], k1, k2, k3, k4, tmp);
      for (double zc : states[s])
        if (!std::isfinite(zc)) throw IntegrationDivergedError(sched.times[s]);
    }
  }

  // Velocities at residual query times.
  std::vector<double> vels(res_pts.size() * static_cast<std::size_t>(dz));
  for (std::size_t p = 0; p < res_pts.size(); ++p) {
    const auto& zq = states[sched.query_pos[plan.res_to_query[p]]];
    latent_velocity(zq, h_p, m.dynamics, m.params,
                    {vels.data() + p * static_cast<std::size_t>(dz),
                     static_cast<std::size_t>(dz)});
  }

  std::vector<double> zq_adj(plan.times.size() * static_cast<std::size_t>(dz), 0.0);
  std::vector<double> vq_adj(res_pts.size() * static_cast<std::size_t>(dz), 0.0);
  std::vector<double> hp_adj(dp, 0.0);
  InstanceLoss loss;

  // ---- residual points on the dual tape
  {
    Tape<Dual2>& td = w.dual;
    td.clear();
    std::vector<std::uint32_t> hp_leaf(dp);
    for (int j = 0; j < dp; ++j) hp_leaf[j] = td.leaf(Dual2{h_p[j]});
    ResidualConsts rc{td.leaf(Dual2{1.0}), td.leaf(Dual2{mu.beta}), td.leaf(Dual2{mu.nu}),
                      td.leaf(Dual2{mu.rho})};

    for (std::size_t p = 0; p < res_pts.size(); ++p) {
      const auto mark = td.mark();
      const auto& zq = states[sched.query_pos[plan.res_to_query[p]]];
      const double* vp = vels.data() + p * static_cast<std::size_t>(dz);

      std::uint32_t v0 = 0;
      for (int j = 0; j < dz; ++j) {
        const std::uint32_t node = td.leaf(Dual2{vp[j]});
        if (j == 0) v0 = node;
      }
      const auto [feat0, featn] = trace_features(td, res_pts[p].x, periodic);
      const std::uint32_t hx0 = trace_net(td, m.spatial_encoder, feat0, featn);
      std::uint32_t zl0 = 0;
      for (int j = 0; j < dz; ++j) {
        const std::uint32_t node = td.leaf(Dual2{zq[j]});
        if (j == 0) zl0 = node;
      }
      for (int j = 0; j < dp; ++j) td.copy(hp_leaf[j]);
      const std::uint32_t u_node = trace_net(td, m.decoder, hx0, dx + dz + dp);

      std::uint32_t pv0 = 0;
      for (int j = 0; j < dx; ++j) {
        const std::uint32_t node = td.pick_val(hx0 + static_cast<std::uint32_t>(j));
        if (j == 0) pv0 = node;
      }
      for (int j = 0; j < dz; ++j)
        td.pack(zl0 + static_cast<std::uint32_t>(j), v0 + static_cast<std::uint32_t>(j));
      for (int j = 0; j < dp; ++j) td.copy(hp_leaf[j]);
      const std::uint32_t u2 = trace_net(td, m.decoder, pv0, dx + dz + dp);
      const std::uint32_t ut = td.pick_d1(u2);

      const std::uint32_t sq = trace_residual_square(td, ut, u_node, rc);
      loss.l_f += td.value(sq).v;
      td.seed(sq, Dual2{seed_f});
      td.sweep(mark.nodes, w.grad);

      const std::size_t q = plan.res_to_query[p];
      for (int j = 0; j < dz; ++j) {
        zq_adj[q * dz + j] += td.adjoint(zl0 + static_cast<std::uint32_t>(j)).v;
        vq_adj[p * dz + j] += td.adjoint(v0 + static_cast<std::uint32_t>(j)).v;
      }
      td.truncate(mark);
    }
    for (int j = 0; j < dp; ++j) hp_adj[j] += td.adjoint(hp_leaf[j]).v;
  }

  // ---- scalar tape: IC and boundary decodes, trajectory reverse, encoders
  Tape<double>& ts = w.scalar;
  ts.clear();
  std::vector<std::uint32_t> hp_s(dp);
  for (int j = 0; j < dp; ++j) hp_s[j] = ts.leaf(h_p[j]);
  std::vector<std::uint32_t> z0_s(dz);
  for (int j = 0; j < dz; ++j) z0_s[j] = ts.leaf(z0.z[j]);

  for (double x : init_xs) {
    const auto mark = ts.mark();
    const auto [feat0, featn] = scalar_features(ts, x, periodic);
    const std::uint32_t hx0 = trace_net(ts, m.spatial_encoder, feat0, featn);
    for (int j = 0; j < dz; ++j) ts.copy(z0_s[j]);
    for (int j = 0; j < dp; ++j) ts.copy(hp_s[j]);
    const std::uint32_t u = trace_net(ts, m.decoder, hx0, dx + dz + dp);
    const std::uint32_t diff = ts.sub(u, ts.leaf(initial_condition(x, domain.ic)));
    const std::uint32_t sq = ts.square_(diff);
    loss.l_u += ts.value(sq);
    ts.seed(sq, seed_u);
    ts.sweep(mark.nodes, w.grad);
    ts.truncate(mark);
  }

  for (std::size_t bq = 0; bq < bnd_ts.size(); ++bq) {
    const auto mark = ts.mark();
    const std::size_t q = plan.bnd_to_query[bq];
    const auto& zq = states[sched.query_pos[q]];
    std::vector<std::uint32_t> zl(dz);
    for (int j = 0; j < dz; ++j) zl[j] = ts.leaf(zq[j]);

    auto decode_at = [&](double x) {
      const auto [feat0, featn] = scalar_features(ts, x, periodic);
      const std::uint32_t hx0 = trace_net(ts, m.spatial_encoder, feat0, featn);
      for (int j = 0; j < dz; ++j) ts.copy(zl[j]);
      for (int j = 0; j < dp; ++j) ts.copy(hp_s[j]);
      return trace_net(ts, m.decoder, hx0, dx + dz + dp);
    };
    const std::uint32_t ua = decode_at(domain.x_min);
    const std::uint32_t ub = decode_at(domain.x_max);
    const std::uint32_t sq = ts.square_(ts.sub(ua, ub));
    loss.l_b += ts.value(sq);
    ts.seed(sq, seed_b);
    ts.sweep(mark.nodes, w.grad);
    for (int j = 0; j < dz; ++j) zq_adj[q * dz + j] += ts.adjoint(zl[j]);
    ts.truncate(mark);
  }

  // ---- trajectory reverse with per-step recompute
  std::vector<double> abar(dz, 0.0);
  auto absorb_query = [&](std::size_t q) {
    const int rslot = plan.residual_slot[q];
    if (rslot >= 0) {
      // velocity evaluation hangs off the query state
      const auto mark = ts.mark();
      const auto& zq = states[sched.query_pos[q]];
      std::uint32_t zl0 = 0;
      for (int j = 0; j < dz; ++j) {
        const std::uint32_t node = ts.leaf(zq[j]);
        if (j == 0) zl0 = node;
      }
      const std::uint32_t vtr = trace_velocity(ts, m.dynamics, zl0, dz, hp_s[0], dp);
      for (int j = 0; j < dz; ++j)
        ts.seed(vtr + static_cast<std::uint32_t>(j), vq_adj[rslot * dz + j]);
      ts.sweep(mark.nodes, w.grad);
      for (int j = 0; j < dz; ++j) abar[j] += ts.adjoint(zl0 + static_cast<std::uint32_t>(j));
      ts.truncate(mark);
    }
    for (int j = 0; j < dz; ++j) abar[j] += zq_adj[q * dz + j];
  };

  std::ptrdiff_t qi = static_cast<std::ptrdiff_t>(plan.times.size()) - 1;
  for (std::size_t s = S; s >= 1; --s) {
    while (qi >= 0 && sched.query_pos[static_cast<std::size_t>(qi)] == s) {
      absorb_query(static_cast<std::size_t>(qi));
      --qi;
    }
    const auto mark = ts.mark();
    std::uint32_t zl0 = 0;
    for (int j = 0; j < dz; ++j) {
      const std::uint32_t node = ts.leaf(states[s - 1][j]);
      if (j == 0) zl0 = node;
    }
    const std::uint32_t znew = trace_rk4_step(ts, m.dynamics, zl0, dz, hp_s[0], dp,
                                              sched.times[s] - sched.times[s - 1]);
    for (int j = 0; j < dz; ++j) ts.seed(znew + static_cast<std::uint32_t>(j), abar[j]);
    ts.sweep(mark.nodes, w.grad);
    for (int j = 0; j < dz; ++j) abar[j] = ts.adjoint(zl0 + static_cast<std::uint32_t>(j));
    ts.truncate(mark);
  }
  while (qi >= 0) {
    absorb_query(static_cast<std::size_t>(qi));
    --qi;
  }

  // ---- encoders: z0 = g_theta0(g_thetap(mu))
  for (int j = 0; j < dz; ++j) abar[j] += ts.adjoint(z0_s[j]);
  const auto sfx = ts.mark();
  std::uint32_t mu0 = 0;
  for (int j = 0; j < 3; ++j) {
    const std::uint32_t node = ts.leaf(mu_n[j]);
    if (j == 0) mu0 = node;
  }
  const std::uint32_t htr = trace_net(ts, m.param_encoder, mu0, 3);
  const std::uint32_t z0tr = trace_net(ts, m.latent_init, htr, dp);
  for (int j = 0; j < dz; ++j) ts.seed(z0tr + static_cast<std::uint32_t>(j), abar[j]);
  for (int j = 0; j < dp; ++j)
    ts.seed(htr + static_cast<std::uint32_t>(j), hp_adj[j] + ts.adjoint(hp_s[j]));
  ts.sweep(sfx.nodes, w.grad);

  loss.l_u /= static_cast<double>(init_xs.size());
  loss.l_f /= static_cast<double>(res_pts.size());
  loss.l_b /= static_cast<double>(bnd_ts.size());
  return loss;
}

InstanceLoss eval_instance_static(const Model& m, const DomainSpec& domain, const PdeParams& mu,
                                  std::span<const CollocationBatch::XT> res_pts,
                                  std::span<const double> init_xs,
                                  std::span<const double> bnd_ts, double seed_u, double seed_f,
                                  double seed_b, InstanceWork& w) {
  const int dz = m.cfg.latent_dim;
  const int dp = m.cfg.param_dim;
  const int dx = m.cfg.spatial_dim;
  const bool periodic = m.cfg.periodic_features;

  const auto mu_n = m.normalize_mu(mu);
  const auto h_p = m.encode_param(mu);

  std::vector<double> hp_adj(dp, 0.0);
  InstanceLoss loss;

  // ---- residual points on the dual tape
  {
    Tape<Dual2>& td = w.dual;
    td.clear();
    std::vector<std::uint32_t> hp_leaf(dp);
    for (int j = 0; j < dp; ++j) hp_leaf[j] = td.leaf(Dual2{h_p[j]});
    ResidualConsts rc{td.leaf(Dual2{1.0}), td.leaf(Dual2{mu.beta}), td.leaf(Dual2{mu.nu}),
                      td.leaf(Dual2{mu.rho})};

    for (const auto& pt : res_pts) {
      const auto mark = td.mark();
      // t-seeded time encoding: the d1 channel carries d/dt
      const std::uint32_t tl = td.leaf(Dual2::seed(pt.t));
      const std::uint32_t tcopy = td.copy(tl);
      const std::uint32_t ht = trace_net(td, m.time_encoder, tcopy, 1);

      const auto [feat0, featn] = trace_features(td, pt.x, periodic);
      const std::uint32_t hx0 = trace_net(td, m.spatial_encoder, feat0, featn);
      for (int j = 0; j < dz; ++j) td.pick_val(ht + static_cast<std::uint32_t>(j));
      for (int j = 0; j < dp; ++j) td.copy(hp_leaf[j]);
      const std::uint32_t u_node = trace_net(td, m.decoder, hx0, dx + dz + dp);

      std::uint32_t pv0 = 0;
      for (int j = 0; j < dx; ++j) {
        const std::uint32_t node = td.pick_val(hx0 + static_cast<std::uint32_t>(j));
        if (j == 0) pv0 = node;
      }
      for (int j = 0; j < dz; ++j) td.copy(ht + static_cast<std::uint32_t>(j));
      for (int j = 0; j < dp; ++j) td.copy(hp_leaf[j]);
      const std::uint32_t u2 = trace_net(td, m.decoder, pv0, dx + dz + dp);
      const std::uint32_t ut = td.pick_d1(u2);

      const std::uint32_t sq = trace_residual_square(td, ut, u_node, rc);
      loss.l_f += td.value(sq).v;
      td.seed(sq, Dual2{seed_f});
      td.sweep(mark.nodes, w.grad);
      td.truncate(mark);
    }
    for (int j = 0; j < dp; ++j) hp_adj[j] += td.adjoint(hp_leaf[j]).v;
  }

  // ---- scalar tape: IC and boundary decodes, then the param encoder
  Tape<double>& ts = w.scalar;
  ts.clear();
  std::vector<std::uint32_t> hp_s(dp);
  for (int j = 0; j < dp; ++j) hp_s[j] = ts.leaf(h_p[j]);

  auto decode_at = [&](double x, std::uint32_t ht0) {
    const auto [feat0, featn] = scalar_features(ts, x, periodic);
    const std::uint32_t hx0 = trace_net(ts, m.spatial_encoder, feat0, featn);
    for (int j = 0; j < dz; ++j) ts.copy(ht0 + static_cast<std::uint32_t>(j));
    for (int j = 0; j < dp; ++j) ts.copy(hp_s[j]);
    return trace_net(ts, m.decoder, hx0, dx + dz + dp);
  };

  for (double x : init_xs) {
    const auto mark = ts.mark();
    const std::uint32_t tl = ts.leaf(0.0);
    const std::uint32_t ht = trace_net(ts, m.time_encoder, tl, 1);
    const std::uint32_t u = decode_at(x, ht);
    const std::uint32_t diff = ts.sub(u, ts.leaf(initial_condition(x, domain.ic)));
    const std::uint32_t sq = ts.square_(diff);
    loss.l_u += ts.value(sq);
    ts.seed(sq, seed_u);
    ts.sweep(mark.nodes, w.grad);
    ts.truncate(mark);
  }

  for (double t : bnd_ts) {
    const auto mark = ts.mark();
    const std::uint32_t tl = ts.leaf(t);
    const std::uint32_t ht = trace_net(ts, m.time_encoder, tl, 1);
    const std::uint32_t ua = decode_at(domain.x_min, ht);
    const std::uint32_t ub = decode_at(domain.x_max, ht);
    const std::uint32_t sq = ts.square_(ts.sub(ua, ub));
    loss.l_b += ts.value(sq);
    ts.seed(sq, seed_b);
    ts.sweep(mark.nodes, w.grad);
    ts.truncate(mark);
  }

  const auto sfx = ts.mark();
  std::uint32_t mu0 = 0;
  for (int j = 0; j < 3; ++j) {
    const std::uint32_t node = ts.leaf(mu_n[j]);
    if (j == 0) mu0 = node;
  }
  const std::uint32_t htr = trace_net(ts, m.param_encoder, mu0, 3);
  for (int j = 0; j < dp; ++j)
    ts.seed(htr + static_cast<std::uint32_t>(j), hp_adj[j] + ts.adjoint(hp_s[j]));
  ts.sweep(sfx.nodes, w.grad);

  loss.l_u /= static_cast<double>(init_xs.size());
  loss.l_f /= static_cast<double>(res_pts.size());
  loss.l_b /= static_cast<double>(bnd_ts.size());
  return loss;
}

LossParts batch_loss_and_gradient(const Model& model, const CollocationBatch& batch,
                                  const DomainSpec& domain, double w1, double w2, double w3,
                                  std::vector<InstanceWork>& pool, std::span<double> grad) {
  const std::size_t b = batch.mus.size();
  if (b == 0) throw ConfigError("training batch is empty");
  for (std::size_t i = 0; i < b; ++i)
    if (batch.residual_pts[i].empty() || batch.initial_xs[i].empty() ||
        batch.boundary_ts[i].empty())
      throw ConfigError("training batch has an empty collocation sub-batch");

  std::vector<InstanceLoss> losses(b);
  parallel_for(b, [&](std::size_t i) {
    InstanceWork& w = pool[i];
    std::fill(w.grad.begin(), w.grad.end(), 0.0);
    const double su = w1 / (static_cast<double>(b) * batch.initial_xs[i].size());
    const double sf = w2 / (static_cast<double>(b) * batch.residual_pts[i].size());
    const double sb = w3 / (static_cast<double>(b) * batch.boundary_ts[i].size());
    losses[i] = model.kind == ModelKind::StaticFusion
                    ? eval_instance_static(model, domain, batch.mus[i], batch.residual_pts[i],
                                           batch.initial_xs[i], batch.boundary_ts[i], su, sf,
                                           sb, w)
                    : eval_instance_dldmf(model, domain, batch.mus[i], batch.residual_pts[i],
                                          batch.initial_xs[i], batch.boundary_ts[i], su, sf, sb,
                                          w);
  });

  LossParts parts;
  for (std::size_t i = 0; i < b; ++i) {
    parts.l_u += losses[i].l_u;
    parts.l_f += losses[i].l_f;
    parts.l_b += losses[i].l_b;
    const auto& g = pool[i].grad;
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += g[j];
  }
  parts.l_u /= static_cast<double>(b);
  parts.l_f /= static_cast<double>(b);
  parts.l_b /= static_cast<double>(b);

  // Frozen parameters report gradient 0.
  const auto& mask = model.params.trainable;
  for (std::size_t j = 0; j < grad.size(); ++j)
    if (!mask[j]) grad[j] = 0.0;
  return parts;
}

}  // namespace

LossParts loss_and_gradient(const Model& model, const CollocationBatch& batch,
                            const DomainSpec& domain, double w1, double w2, double w3,
                            std::span<double> grad) {
  std::vector<InstanceWork> pool;
  pool.reserve(batch.mus.size());
  for (std::size_t i = 0; i < batch.mus.size(); ++i) pool.emplace_back(&model.params);
  return batch_loss_and_gradient(model, batch, domain, w1, w2, w3, pool, grad);
}

std::vector<TrainLogRecord> train(Model& model, const TrainConfig& cfg, const DomainSpec& domain,
                                  const TrainHooks& hooks) {
  if (cfg.w1 < 0 || cfg.w2 < 0 || cfg.w3 < 0 || (cfg.w1 == 0 && cfg.w2 == 0 && cfg.w3 == 0))
    throw ConfigError("train: loss weights must be >= 0 and not all zero");
  if (cfg.steps <= 0) throw ConfigError("train: steps must be positive");
  if (cfg.mu_batch <= 0) throw ConfigError("train: mu batch must be positive");
  if (model.kind == ModelKind::AutodecodeInit)
    throw ConfigError("train: the autodecode_init ablation shares dldmf pre-training");

  const std::vector<PdeParams> mu_set = make_mu_set(cfg.mu_set);
  Adam opt(cfg.adam);
  opt.reset(model.params.size());

  std::vector<InstanceWork> pool;
  pool.reserve(cfg.mu_batch);
  for (int i = 0; i < cfg.mu_batch; ++i) pool.emplace_back(&model.params);

  Rng mu_rng(split_seed(cfg.seed, "mu_batch"));
  std::vector<double> grad(model.params.size(), 0.0);
  std::vector<TrainLogRecord> log;
  log.reserve(cfg.steps);
  const auto t0 = std::chrono::steady_clock::now();

  CollocationBatch frozen;
  bool have_frozen = false;

  for (int step = 1; step <= cfg.steps; ++step) {
    CollocationBatch batch;
    if (cfg.freeze_sampling && have_frozen) {
      batch = frozen;
    } else {
      std::vector<PdeParams> mus(cfg.mu_batch);
      if (static_cast<int>(mu_set.size()) >= cfg.mu_batch) {
        // without replacement: partial Fisher-Yates over a scratch index list
        std::vector<std::size_t> idx(mu_set.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (int i = 0; i < cfg.mu_batch; ++i) {
          const std::size_t j =
              i + static_cast<std::size_t>(mu_rng() % (idx.size() - static_cast<std::size_t>(i)));
          std::swap(idx[i], idx[j]);
          mus[i] = mu_set[idx[i]];
        }
      } else {
        for (int i = 0; i < cfg.mu_batch; ++i)
          mus[i] = mu_set[static_cast<std::size_t>(mu_rng() % mu_set.size())];
      }
      batch = sample_collocation(domain, mus, cfg.n_f, cfg.n_u, cfg.n_b,
                                 split_seed(cfg.seed, "step", static_cast<std::uint64_t>(
                                                                  cfg.freeze_sampling ? 0 : step)));
      if (cfg.freeze_sampling) {
        frozen = batch;
        have_frozen = true;
      }
    }

    std::fill(grad.begin(), grad.end(), 0.0);
    LossParts parts;
    try {
      parts = batch_loss_and_gradient(model, batch, domain, cfg.w1, cfg.w2, cfg.w3, pool, grad);
    } catch (const IntegrationDivergedError& e) {
      throw TrainDivergedError(step, e.what());
    }
    const double total = parts.total(cfg.w1, cfg.w2, cfg.w3);
    if (!std::isfinite(total))
      throw TrainDivergedError(step, "L_u=" + std::to_string(parts.l_u) +
                                         " L_f=" + std::to_string(parts.l_f) +
                                         " L_b=" + std::to_string(parts.l_b));

    opt.step(model.params.values, grad, model.params.trainable);

    TrainLogRecord rec;
    rec.step = step;
    rec.l_u = parts.l_u;
    rec.l_f = parts.l_f;
    rec.l_b = parts.l_b;
    rec.total = total;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log.push_back(rec);

    if (hooks.on_checkpoint && cfg.checkpoint_every > 0 &&
        (step % cfg.checkpoint_every == 0 || step == cfg.steps))
      hooks.on_checkpoint(step, model);
    if (hooks.should_stop && cfg.probe_every > 0 && step % cfg.probe_every == 0 &&
        hooks.should_stop(step, model))
      break;
  }
  return log;
}

void write_train_log(const std::filesystem::path& path, std::span<const TrainLogRecord> log) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw ConfigError("train log: cannot open " + path.string());
  os << "step,L_u,L_f,L_b,total,seconds\n";
  char buf[256];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.3f\n", r.step, r.l_u, r.l_f,
                  r.l_b, r.total, r.seconds);
    os << buf;
  }
}

}  // namespace dldmf

#include "dldmf/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "dldmf/checkpoint.hpp"
#include "dldmf/errors.hpp"

namespace dldmf {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

double wrap_domain(double x) {
  double w = std::fmod(x, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  return w;
}
}  // namespace

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Dldmf: return "dldmf";
    case ModelKind::StaticFusion: return "static_fusion";
    case ModelKind::AutodecodeInit: return "autodecode_init";
  }
  return "?";
}

std::optional<std::size_t> LatentTrajectory::find_time(double t) const {
  const double tol = 1e-9 * std::max(1.0, std::abs(t));
  auto it = std::lower_bound(times.begin(), times.end(), t - tol);
  if (it == times.end() || std::abs(*it - t) > tol) return std::nullopt;
  return static_cast<std::size_t>(it - times.begin());
}

Model Model::init(const ModelConfig& cfg, ModelKind kind) {
  if (cfg.spatial_dim <= 0 || cfg.param_dim <= 0 || cfg.latent_dim <= 0)
    throw ConfigError("model: embedding widths must be positive");
  if (cfg.decoder_depth < 3)
    throw ConfigError("model: decoder depth " + std::to_string(cfg.decoder_depth) +
                      " leaves no modulatable hidden layer (need >= 3)");

  Model m;
  m.cfg = cfg;
  m.kind = kind;

  auto widths = [](int in, const std::vector<int>& hidden, int out) {
    std::vector<int> w{in};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(out);
    return w;
  };

  auto build = [&](const std::string& name, const std::vector<int>& w) {
    Rng rng(split_seed(cfg.seed, "init/" + name));
    return build_dense(m.params, name, w, rng);
  };

  m.spatial_encoder =
      build("spatial_encoder", widths(cfg.spatial_input_width(), cfg.spatial_hidden, cfg.spatial_dim));
  m.param_encoder = build("param_encoder", widths(3, cfg.param_hidden, cfg.param_dim));
  if (kind == ModelKind::StaticFusion) {
    m.time_encoder = build("time_encoder", widths(1, cfg.time_encoder_hidden, cfg.latent_dim));
  } else {
    m.latent_init = build("latent_init", widths(cfg.param_dim, cfg.latent_init_hidden, cfg.latent_dim));
    m.dynamics =
        build("dynamics", widths(cfg.latent_dim + cfg.param_dim, cfg.dynamics_hidden, cfg.latent_dim));
  }
  std::vector<int> dec{cfg.decoder_input_width()};
  for (int l = 0; l < cfg.decoder_depth - 1; ++l) dec.push_back(cfg.decoder_width);
  dec.push_back(1);
  m.decoder = build("decoder", dec);
  return m;
}

std::size_t Model::param_count() const {
  std::size_t n = spatial_encoder.param_count() + param_encoder.param_count() +
                  decoder.param_count();
  if (kind == ModelKind::StaticFusion) return n + time_encoder.param_count();
  return n + latent_init.param_count() + dynamics.param_count();
}

std::array<double, 3> Model::normalize_mu(const PdeParams& mu) const {
  std::array<double, 3> raw{mu.beta, mu.nu, mu.rho};
  std::array<double, 3> out{};
  for (int i = 0; i < 3; ++i) {
    const double span = cfg.mu_hi[i] - cfg.mu_lo[i];
    out[i] = span > 0.0 ? (raw[i] - cfg.mu_lo[i]) / span : 0.0;
  }
  return out;
}

std::vector<double> Model::spatial_features(double x) const {
  if (cfg.periodic_features) return {std::sin(x), std::cos(x)};
  return {wrap_domain(x)};
}

std::vector<double> Model::encode_param(const PdeParams& mu) const {
  const auto n = normalize_mu(mu);
  return eval_net<double>(param_encoder, params, std::span<const double>{n.data(), 3});
}

std::vector<double> Model::encode_spatial(double x) const {
  const auto f = spatial_features(x);
  return eval_net<double>(spatial_encoder, params, f);
}

LatentState Model::initial_latent(std::span<const double> h_param) const {
  return init_latent(h_param, latent_init, params);
}

LatentTrajectory Model::make_trajectory(const PdeParams& mu,
                                        std::span<const double> times) const {
  LatentTrajectory traj;
  traj.mu = mu;
  traj.h_param = encode_param(mu);
  return make_trajectory_from(mu, initial_latent(traj.h_param), times);
}

LatentTrajectory Model::make_trajectory_from(const PdeParams& mu, const LatentState& z0,
                                             std::span<const double> times) const {
  LatentTrajectory traj;
  traj.mu = mu;
  traj.h_param = encode_param(mu);
  traj.latent_dim = cfg.latent_dim;
  traj.times.assign(times.begin(), times.end());
  const auto states = integrate(z0, traj.h_param, dynamics, params, times, integrator);
  traj.z.resize(states.size() * static_cast<std::size_t>(cfg.latent_dim));
  for (std::size_t i = 0; i < states.size(); ++i)
    std::copy(states[i].z.begin(), states[i].z.end(),
              traj.z.begin() + i * static_cast<std::size_t>(cfg.latent_dim));
  return traj;
}

double Model::decode(std::span<const double> h_x, std::span<const double> z_slot,
                     std::span<const double> h_param) const {
  std::vector<double> in(h_x.size() + z_slot.size() + h_param.size());
  auto out = std::copy(h_x.begin(), h_x.end(), in.begin());
  out = std::copy(z_slot.begin(), z_slot.end(), out);
  std::copy(h_param.begin(), h_param.end(), out);
  return eval_net<double>(decoder, params, in)[0];
}

std::vector<double> Model::latent_at(const FusedQuery& q, const LatentTrajectory* cache) const {
  if (cache) {
    if (auto idx = cache->find_time(q.t)) {
      auto zs = cache->at(*idx);
      return {zs.begin(), zs.end()};
    }
  }
  if (kind == ModelKind::AutodecodeInit)
    throw ConfigError("autodecode_init: queries need a trajectory cache built from an "
                      "auto-decoded initial state");
  const auto h = encode_param(q.mu);
  const double tq[1] = {q.t};
  const auto states = integrate(initial_latent(h), h, dynamics, params, tq, integrator);
  return states[0].z;
}

double Model::forward(const FusedQuery& q, const LatentTrajectory* cache) const {
  const auto h_x = encode_spatial(q.x);
  const auto h_p = cache && !cache->h_param.empty() ? cache->h_param : encode_param(q.mu);
  if (kind == ModelKind::StaticFusion) {
    const double tin[1] = {q.t};
    const auto h_t = eval_net<double>(time_encoder, params, tin);
    return decode(h_x, h_t, h_p);
  }
  return decode(h_x, latent_at(q, cache), h_p);
}

namespace {

// Dual decoder pass with the z slot seeded along direction v: the d1 channel
// of the output is (d g/d z) . v.
double decoder_jvp(const Network& decoder, const ParamStore& ps, std::span<const double> h_x,
                   std::span<const double> z, std::span<const double> v,
                   std::span<const double> h_p) {
  std::vector<Dual2> in;
  in.reserve(h_x.size() + z.size() + h_p.size());
  for (double h : h_x) in.emplace_back(h);
  for (std::size_t i = 0; i < z.size(); ++i) in.emplace_back(z[i], v[i], 0.0);
  for (double h : h_p) in.emplace_back(h);
  return eval_net<Dual2>(decoder, ps, in)[0].d1;
}

}  // namespace

double Model::time_derivative(const FusedQuery& q, const LatentTrajectory* cache) const {
  if (kind == ModelKind::StaticFusion)
    throw ConfigError("time_derivative: static_fusion differentiates its t input instead");
  const auto h_x = encode_spatial(q.x);
  const auto h_p = cache && !cache->h_param.empty() ? cache->h_param : encode_param(q.mu);
  const auto z = latent_at(q, cache);
  std::vector<double> v(z.size());
  latent_velocity(z, h_p, dynamics, params, v);
  return decoder_jvp(decoder, params, h_x, z, v, h_p);
}

namespace {

// Spatial dual pass: h_x carries duals seeded at x (before the periodic
// lift); z and h_param ride along as constants.
Dual2 decode_spatial_dual(const Model& m, double x, std::span<const double> z_slot,
                          std::span<const double> h_p, std::vector<Dual2>& h_x_out) {
  const Dual2 xd = Dual2::seed(m.cfg.periodic_features ? x : wrap_domain(x));
  std::vector<Dual2> feat;
  if (m.cfg.periodic_features) {
    feat.push_back(sin(xd));
    feat.push_back(cos(xd));
  } else {
    feat.push_back(xd);
  }
  h_x_out = eval_net<Dual2>(m.spatial_encoder, m.params, feat);
  std::vector<Dual2> in;
  in.reserve(h_x_out.size() + z_slot.size() + h_p.size());
  for (const auto& h : h_x_out) in.push_back(h);
  for (double zi : z_slot) in.emplace_back(zi);
  for (double hi : h_p) in.emplace_back(hi);
  return eval_net<Dual2>(m.decoder, m.params, in)[0];
}

}  // namespace

std::pair<double, double> Model::spatial_derivatives(const FusedQuery& q,
                                                     const LatentTrajectory* cache) const {
  const auto h_p = cache && !cache->h_param.empty() ? cache->h_param : encode_param(q.mu);
  std::vector<double> slot;
  if (kind == ModelKind::StaticFusion) {
    const double tin[1] = {q.t};
    slot = eval_net<double>(time_encoder, params, tin);
  } else {
    slot = latent_at(q, cache);
  }
  std::vector<Dual2> h_x;
  const Dual2 u = decode_spatial_dual(*this, q.x, slot, h_p, h_x);
  return {u.d1, u.d2};
}

PointDerivatives Model::point_eval(const FusedQuery& q, const LatentTrajectory* cache) const {
  const auto h_p = cache && !cache->h_param.empty() ? cache->h_param : encode_param(q.mu);
  PointDerivatives out;
  if (kind == ModelKind::StaticFusion) {
    const double tin[1] = {q.t};
    const auto h_t = eval_net<double>(time_encoder, params, tin);
    std::vector<Dual2> h_x;
    const Dual2 u = decode_spatial_dual(*this, q.x, h_t, h_p, h_x);
    out.u = u.v;
    out.u_x = u.d1;
    out.u_xx = u.d2;
    // t-seeded pass through the time encoder for dt u.
    std::vector<Dual2> tfeat{Dual2::seed(q.t)};
    const auto h_t_dual = eval_net<Dual2>(time_encoder, params, tfeat);
    std::vector<Dual2> in;
    in.reserve(h_x.size() + h_t_dual.size() + h_p.size());
    for (const auto& h : h_x) in.emplace_back(h.v);
    for (const auto& h : h_t_dual) in.push_back(h);
    for (double hi : h_p) in.emplace_back(hi);
    out.u_t = eval_net<Dual2>(decoder, params, in)[0].d1;
    return out;
  }
  const auto z = latent_at(q, cache);
  std::vector<Dual2> h_x;
  const Dual2 u = decode_spatial_dual(*this, q.x, z, h_p, h_x);
  out.u = u.v;
  out.u_x = u.d1;
  out.u_xx = u.d2;
  std::vector<double> v(z.size());
  latent_velocity(z, h_p, dynamics, params, v);
  std::vector<double> h_x_v(h_x.size());
  for (std::size_t i = 0; i < h_x.size(); ++i) h_x_v[i] = h_x[i].v;
  out.u_t = decoder_jvp(decoder, params, h_x_v, z, v, h_p);
  return out;
}

// ---------------------------------------------------------------------------
// Checkpointing
// ---------------------------------------------------------------------------

namespace {

void append_net_tensors(const Network& net, const ParamStore& ps,
                        std::vector<NamedTensor>& out) {
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const std::string base = net.name + "." + std::to_string(i);
    if (const auto* d = std::get_if<DenseLayer>(&net.layers[i])) {
      NamedTensor w{base + ".weight",
                    {static_cast<std::uint32_t>(d->out), static_cast<std::uint32_t>(d->in)},
                    {}};
      w.data.assign(ps.data(d->w), ps.data(d->w) + static_cast<std::size_t>(d->in) * d->out);
      out.push_back(std::move(w));
      NamedTensor b{base + ".bias", {static_cast<std::uint32_t>(d->out)}, {}};
      b.data.assign(ps.data(d->b), ps.data(d->b) + d->out);
      out.push_back(std::move(b));
    } else {
      const auto& f = std::get<FactoredLayer>(net.layers[i]);
      NamedTensor psi{base + ".psi",
                      {static_cast<std::uint32_t>(f.out), static_cast<std::uint32_t>(f.r)},
                      {}};
      psi.data.assign(ps.data(f.psi), ps.data(f.psi) + static_cast<std::size_t>(f.out) * f.r);
      out.push_back(std::move(psi));
      NamedTensor alpha{base + ".alpha", {static_cast<std::uint32_t>(f.r)}, {}};
      alpha.data.assign(ps.data(f.alpha), ps.data(f.alpha) + f.r);
      out.push_back(std::move(alpha));
      // stored as [in x r] on disk; kept transposed in memory
      NamedTensor phi{base + ".phi",
                      {static_cast<std::uint32_t>(f.in), static_cast<std::uint32_t>(f.r)},
                      {}};
      phi.data.resize(static_cast<std::size_t>(f.in) * f.r);
      for (int j = 0; j < f.r; ++j)
        for (int i2 = 0; i2 < f.in; ++i2)
          phi.data[static_cast<std::size_t>(i2) * f.r + j] =
              ps.values[f.phi_t + static_cast<std::uint32_t>(j) * f.in + i2];
      out.push_back(std::move(phi));
      NamedTensor b{base + ".bias", {static_cast<std::uint32_t>(f.out)}, {}};
      b.data.assign(ps.data(f.b), ps.data(f.b) + f.out);
      out.push_back(std::move(b));
    }
  }
}

}  // namespace

void Model::save(const std::filesystem::path& path) const {
  std::vector<NamedTensor> tensors;
  append_net_tensors(spatial_encoder, params, tensors);
  append_net_tensors(param_encoder, params, tensors);
  if (kind == ModelKind::StaticFusion) {
    append_net_tensors(time_encoder, params, tensors);
  } else {
    append_net_tensors(latent_init, params, tensors);
    append_net_tensors(dynamics, params, tensors);
  }
  append_net_tensors(decoder, params, tensors);
  tensors.push_back({"meta.mu_lo", {3}, {cfg.mu_lo[0], cfg.mu_lo[1], cfg.mu_lo[2]}});
  tensors.push_back({"meta.mu_hi", {3}, {cfg.mu_hi[0], cfg.mu_hi[1], cfg.mu_hi[2]}});
  tensors.push_back({"meta.flags",
                     {2},
                     {cfg.periodic_features ? 1.0 : 0.0, static_cast<double>(kind)}});
  write_tensors(path, tensors);
}

namespace {

struct LoadedLayer {
  const NamedTensor* weight = nullptr;
  const NamedTensor* bias = nullptr;
  const NamedTensor* psi = nullptr;
  const NamedTensor* alpha = nullptr;
  const NamedTensor* phi = nullptr;
};

Network rebuild_net(const std::string& name, const std::map<int, LoadedLayer>& layers,
                    ParamStore& ps) {
  Network net;
  net.name = name;
  int expect = 0;
  int prev_out = -1;
  for (const auto& [idx, t] : layers) {
    if (idx != expect)
      throw CheckpointError("checkpoint: missing layer " + std::to_string(expect) + " of " + name);
    ++expect;
    if (!t.bias) throw CheckpointError("checkpoint: layer of " + name + " lacks a bias tensor");
    const bool last = static_cast<std::size_t>(expect) == layers.size();
    if (t.weight) {
      if (t.weight->dims.size() != 2)
        throw CheckpointError("checkpoint: weight of " + name + " is not rank 2");
      DenseLayer d;
      d.out = static_cast<int>(t.weight->dims[0]);
      d.in = static_cast<int>(t.weight->dims[1]);
      d.act = last ? Activation::Identity : Activation::Tanh;
      if (t.bias->data.size() != static_cast<std::size_t>(d.out))
        throw CheckpointError("checkpoint: bias shape mismatch in " + name);
      if (prev_out >= 0 && prev_out != d.in)
        throw CheckpointError("checkpoint: layer widths of " + name + " do not chain");
      d.w = ps.allocate(t.weight->data.size());
      std::copy(t.weight->data.begin(), t.weight->data.end(), ps.data(d.w));
      d.b = ps.allocate(t.bias->data.size());
      std::copy(t.bias->data.begin(), t.bias->data.end(), ps.data(d.b));
      prev_out = d.out;
      net.layers.emplace_back(d);
    } else if (t.psi && t.alpha && t.phi) {
      if (t.psi->dims.size() != 2 || t.phi->dims.size() != 2)
        throw CheckpointError("checkpoint: factored tensors of " + name + " are not rank 2");
      FactoredLayer f;
      f.out = static_cast<int>(t.psi->dims[0]);
      f.r = static_cast<int>(t.psi->dims[1]);
      f.in = static_cast<int>(t.phi->dims[0]);
      if (static_cast<int>(t.phi->dims[1]) != f.r || t.alpha->data.size() != static_cast<std::size_t>(f.r))
        throw CheckpointError("checkpoint: factored ranks of " + name + " disagree");
      if (prev_out >= 0 && prev_out != f.in)
        throw CheckpointError("checkpoint: layer widths of " + name + " do not chain");
      f.act = last ? Activation::Identity : Activation::Tanh;
      f.psi = ps.allocate(t.psi->data.size(), false);
      std::copy(t.psi->data.begin(), t.psi->data.end(), ps.data(f.psi));
      f.alpha = ps.allocate(t.alpha->data.size(), true);
      std::copy(t.alpha->data.begin(), t.alpha->data.end(), ps.data(f.alpha));
      f.phi_t = ps.allocate(t.phi->data.size(), false);
      for (int j = 0; j < f.r; ++j)
        for (int i = 0; i < f.in; ++i)
          ps.values[f.phi_t + static_cast<std::uint32_t>(j) * f.in + i] =
              t.phi->data[static_cast<std::size_t>(i) * f.r + j];
      f.b = ps.allocate(t.bias->data.size());
      std::copy(t.bias->data.begin(), t.bias->data.end(), ps.data(f.b));
      prev_out = f.out;
      net.layers.emplace_back(f);
    } else {
      throw CheckpointError("checkpoint: layer of " + name +
                            " has neither dense nor complete factored tensors");
    }
  }
  return net;
}

}  // namespace

Model Model::load(const std::filesystem::path& path) {
  const auto tensors = read_tensors(path);

  std::map<std::string, std::map<int, LoadedLayer>> nets;
  const NamedTensor* mu_lo = nullptr;
  const NamedTensor* mu_hi = nullptr;
  const NamedTensor* flags = nullptr;
  for (const auto& t : tensors) {
    if (t.name == "meta.mu_lo") { mu_lo = &t; continue; }
    if (t.name == "meta.mu_hi") { mu_hi = &t; continue; }
    if (t.name == "meta.flags") { flags = &t; continue; }
    const auto dot1 = t.name.find('.');
    const auto dot2 = t.name.find('.', dot1 == std::string::npos ? 0 : dot1 + 1);
    if (dot1 == std::string::npos || dot2 == std::string::npos)
      throw CheckpointError("checkpoint: unrecognized tensor name " + t.name);
    const std::string net = t.name.substr(0, dot1);
    const int idx = std::stoi(t.name.substr(dot1 + 1, dot2 - dot1 - 1));
    const std::string leafn = t.name.substr(dot2 + 1);
    auto& slot = nets[net][idx];
    if (leafn == "weight") slot.weight = &t;
    else if (leafn == "bias") slot.bias = &t;
    else if (leafn == "psi") slot.psi = &t;
    else if (leafn == "alpha") slot.alpha = &t;
    else if (leafn == "phi") slot.phi = &t;
    else throw CheckpointError("checkpoint: unrecognized tensor name " + t.name);
  }
  if (!mu_lo || !mu_hi || !flags)
    throw CheckpointError("checkpoint: missing meta tensors");

  Model m;
  m.kind = static_cast<ModelKind>(static_cast<int>(flags->data.at(1)));
  m.cfg.periodic_features = flags->data.at(0) != 0.0;
  for (int i = 0; i < 3; ++i) {
    m.cfg.mu_lo[i] = mu_lo->data.at(i);
    m.cfg.mu_hi[i] = mu_hi->data.at(i);
  }

  auto need = [&](const char* name) -> const std::map<int, LoadedLayer>& {
    auto it = nets.find(name);
    if (it == nets.end())
      throw CheckpointError(std::string("checkpoint: missing network ") + name);
    return it->second;
  };

  m.spatial_encoder = rebuild_net("spatial_encoder", need("spatial_encoder"), m.params);
  m.param_encoder = rebuild_net("param_encoder", need("param_encoder"), m.params);
  if (m.kind == ModelKind::StaticFusion) {
    m.time_encoder = rebuild_net("time_encoder", need("time_encoder"), m.params);
  } else {
    m.latent_init = rebuild_net("latent_init", need("latent_init"), m.params);
    m.dynamics = rebuild_net("dynamics", need("dynamics"), m.params);
  }
  m.decoder = rebuild_net("decoder", need("decoder"), m.params);

  // Reconstruct the architecture description from the shapes.
  auto hidden_of = [](const Network& n) {
    std::vector<int> h;
    for (std::size_t i = 0; i + 1 < n.layers.size(); ++i) h.push_back(layer_out(n.layers[i]));
    return h;
  };
  m.cfg.spatial_dim = m.spatial_encoder.output_width();
  m.cfg.param_dim = m.param_encoder.output_width();
  m.cfg.latent_dim = m.kind == ModelKind::StaticFusion ? m.time_encoder.output_width()
                                                       : m.latent_init.output_width();
  m.cfg.spatial_hidden = hidden_of(m.spatial_encoder);
  m.cfg.param_hidden = hidden_of(m.param_encoder);
  if (m.kind == ModelKind::StaticFusion) {
    m.cfg.time_encoder_hidden = hidden_of(m.time_encoder);
  } else {
    m.cfg.latent_init_hidden = hidden_of(m.latent_init);
    m.cfg.dynamics_hidden = hidden_of(m.dynamics);
  }
  m.cfg.decoder_depth = static_cast<int>(m.decoder.layers.size());
  m.cfg.decoder_width = m.cfg.decoder_depth > 1 ? layer_out(m.decoder.layers.front()) : 1;

  if (m.decoder.input_width() != m.cfg.decoder_input_width())
    throw CheckpointError("checkpoint: decoder input width " +
                          std::to_string(m.decoder.input_width()) +
                          " is inconsistent with the embedding widths");
  if (m.spatial_encoder.input_width() != m.cfg.spatial_input_width())
    throw CheckpointError("checkpoint: spatial encoder input width disagrees with flags");
  return m;
}

Model Model::load_expected(const std::filesystem::path& path, const ModelConfig& expected,
                           ModelKind kind) {
  Model m = load(path);
  if (m.kind != kind)
    throw CheckpointError("checkpoint: model kind " + std::string(to_string(m.kind)) +
                          " does not match expected " + to_string(kind));
  auto check = [&](const Network& got, const Network& want) {
    if (got.layers.size() != want.layers.size())
      throw DimensionError("checkpoint: " + want.name + " layer count mismatch");
    for (std::size_t i = 0; i < got.layers.size(); ++i) {
      if (layer_in(got.layers[i]) != layer_in(want.layers[i]) ||
          layer_out(got.layers[i]) != layer_out(want.layers[i]))
        throw DimensionError("checkpoint: shape mismatch in " + want.name + " layer " +
                             std::to_string(i) + " (expected " +
                             std::to_string(layer_in(want.layers[i])) + "x" +
                             std::to_string(layer_out(want.layers[i])) + ", found " +
                             std::to_string(layer_in(got.layers[i])) + "x" +
                             std::to_string(layer_out(got.layers[i])) + ")");
    }
  };
  Model want = Model::init(expected, kind);
  check(m.spatial_encoder, want.spatial_encoder);
  check(m.param_encoder, want.param_encoder);
  if (kind == ModelKind::StaticFusion) {
    check(m.time_encoder, want.time_encoder);
  } else {
    check(m.latent_init, want.latent_init);
    check(m.dynamics, want.dynamics);
  }
  check(m.decoder, want.decoder);
  return m;
}

// ---------------------------------------------------------------------------
// Auto-decoding latent inference (ablation)
// ---------------------------------------------------------------------------

AutodecodeResult autodecode_init(std::span<const double> target_u0, std::span<const double> xs,
                                 const Model& model, const PdeParams& mu, int steps,
                                 double rate) {
  if (target_u0.size() != xs.size())
    throw DimensionError("autodecode_init: target and grid sizes differ");
  const int dz = model.cfg.latent_dim;
  const auto h_p = model.encode_param(mu);
  std::vector<std::vector<double>> h_xs(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) h_xs[i] = model.encode_spatial(xs[i]);

  AutodecodeResult res;
  res.z.z.assign(dz, 0.0);
  res.z.t = 0.0;
  res.steps = steps;

  auto plain_loss = [&]() {
    double l = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double d = model.decode(h_xs[i], res.z.z, h_p) - target_u0[i];
      l += d * d;
    }
    return l;
  };

  const auto t0 = std::chrono::steady_clock::now();
  Tape<double> tp(&model.params);
  std::vector<double> scratch_grad;  // unused (frozen decoder)
  for (int k = 0; k < steps; ++k) {
    tp.clear();
    std::vector<std::uint32_t> z_nodes(dz);
    for (int i = 0; i < dz; ++i) z_nodes[i] = tp.leaf(res.z.z[i]);
    std::vector<std::uint32_t> hp_nodes(h_p.size());
    for (std::size_t i = 0; i < h_p.size(); ++i) hp_nodes[i] = tp.leaf(h_p[i]);

    double loss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto m = tp.mark();
      std::uint32_t in0 = 0;
      for (std::size_t j = 0; j < h_xs[i].size(); ++j) {
        std::uint32_t node = tp.leaf(h_xs[i][j]);
        if (j == 0) in0 = node;
      }
      for (int j = 0; j < dz; ++j) tp.copy(z_nodes[j]);
      for (std::size_t j = 0; j < h_p.size(); ++j) tp.copy(hp_nodes[j]);
      const std::uint32_t u = trace_net(tp, model.decoder, in0, model.cfg.decoder_input_width());
      const std::uint32_t diff = tp.sub(u, tp.leaf(target_u0[i]));
      const std::uint32_t sq = tp.square_(diff);
      loss += tp.value(sq);
      tp.seed(sq, 1.0);
      tp.sweep(m.nodes, scratch_grad, /*with_params=*/false);
      tp.truncate(m);
    }
    if (!std::isfinite(loss))
      throw NumericalError("auto-decoding diverged (non-finite loss); try a smaller rate");
    res.loss_curve.push_back(loss);
    for (int i = 0; i < dz; ++i) res.z.z[i] -= rate * tp.adjoint(z_nodes[i]);
  }
  res.loss_curve.push_back(plain_loss());
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace dldmf

#include "dldmf/network.hpp"

#include <cmath>

#include "dldmf/errors.hpp"
#include "dldmf/kernels.hpp"

namespace dldmf {

int layer_in(const Layer& l) {
  return std::visit([](const auto& d) { return d.in; }, l);
}
int layer_out(const Layer& l) {
  return std::visit([](const auto& d) { return d.out; }, l);
}

std::size_t Network::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) {
    if (const auto* d = std::get_if<DenseLayer>(&l)) {
      n += static_cast<std::size_t>(d->in) * d->out + d->out;
    } else {
      const auto& f = std::get<FactoredLayer>(l);
      n += static_cast<std::size_t>(f.out) * f.r + f.r +
           static_cast<std::size_t>(f.in) * f.r + f.out;
    }
  }
  return n;
}

Network build_dense(ParamStore& ps, const std::string& name, const std::vector<int>& widths,
                    Rng& rng) {
  if (widths.size() < 2) throw ConfigError("network " + name + ": needs at least one layer");
  for (int w : widths)
    if (w <= 0) throw ConfigError("network " + name + ": non-positive width");

  Network net;
  net.name = name;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    layer.in = widths[l];
    layer.out = widths[l + 1];
    layer.act = (l + 2 == widths.size()) ? Activation::Identity : Activation::Tanh;
    layer.w = ps.allocate(static_cast<std::size_t>(layer.in) * layer.out);
    layer.b = ps.allocate(layer.out);
    const double limit = std::sqrt(6.0 / (layer.in + layer.out));
    for (int i = 0; i < layer.in * layer.out; ++i)
      ps.values[layer.w + i] = uniform(rng, -limit, limit);
    net.layers.emplace_back(layer);
  }
  return net;
}

namespace {

template <class T>
void apply_tanh(std::vector<T>& v) {
  for (auto& x : v) {
    using std::tanh;
    x = tanh(x);
  }
}

template <class T>
void eval_layer(const Layer& layer, const ParamStore& ps, const std::vector<T>& x,
                std::vector<T>& y, std::vector<T>& scratch) {
  if (const auto* d = std::get_if<DenseLayer>(&layer)) {
    y.resize(d->out);
    for (int r = 0; r < d->out; ++r)
      y[r] = detail::affine_kernel(ps.data(d->w + static_cast<std::uint32_t>(r) * d->in),
                                   x.data(), d->in, ps.values[d->b + r]);
    if (d->act == Activation::Tanh) apply_tanh(y);
    return;
  }
  const auto& f = std::get<FactoredLayer>(layer);
  scratch.resize(f.r);
  for (int j = 0; j < f.r; ++j)
    scratch[j] = ps.values[f.alpha + j] *
                 detail::affine_kernel(ps.data(f.phi_t + static_cast<std::uint32_t>(j) * f.in),
                                       x.data(), f.in, 0.0);
  y.resize(f.out);
  for (int r = 0; r < f.out; ++r)
    y[r] = detail::affine_kernel(ps.data(f.psi + static_cast<std::uint32_t>(r) * f.r),
                                 scratch.data(), f.r, ps.values[f.b + r]);
  if (f.act == Activation::Tanh) apply_tanh(y);
}

}  // namespace

template <class T>
void eval_net(const Network& net, const ParamStore& ps, std::span<const T> input,
              std::vector<T>& out, std::vector<T>& scratch) {
  if (static_cast<int>(input.size()) != net.input_width())
    throw DimensionError("network " + net.name + ": input width " +
                         std::to_string(input.size()) + " != " +
                         std::to_string(net.input_width()));
  std::vector<T> fscratch;
  out.assign(input.begin(), input.end());
  for (const auto& layer : net.layers) {
    eval_layer(layer, ps, out, scratch, fscratch);
    std::swap(out, scratch);
  }
}

std::vector<Dual2> forward_dual(const Network& net, const ParamStore& ps,
                                std::span<const double> inputs, int seed_index) {
  if (seed_index < 0 || seed_index >= static_cast<int>(inputs.size()))
    throw DimensionError("forward_dual: seed index out of range");
  std::vector<Dual2> in(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) in[i] = Dual2{inputs[i]};
  in[seed_index] = Dual2::seed(inputs[seed_index]);
  return eval_net<Dual2>(net, ps, in);
}

template <class T>
std::uint32_t trace_net(Tape<T>& tp, const Network& net, std::uint32_t in_begin, int in_n) {
  if (in_n != net.input_width())
    throw DimensionError("trace " + net.name + ": input width " + std::to_string(in_n) +
                         " != " + std::to_string(net.input_width()));
  std::uint32_t x = in_begin;
  std::uint32_t n = static_cast<std::uint32_t>(in_n);
  for (const auto& layer : net.layers) {
    std::uint32_t y = 0;
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      for (int r = 0; r < d->out; ++r) {
        std::uint32_t node =
            tp.affine(d->w + static_cast<std::uint32_t>(r) * d->in, x, n, d->b + r);
        if (r == 0) y = node;
      }
      if (d->act == Activation::Tanh) {
        std::uint32_t t0 = 0;
        for (int r = 0; r < d->out; ++r) {
          std::uint32_t node = tp.tanh_(y + r);
          if (r == 0) t0 = node;
        }
        y = t0;
      }
      x = y;
      n = static_cast<std::uint32_t>(d->out);
    } else {
      const auto& f = std::get<FactoredLayer>(layer);
      std::uint32_t proj0 = 0;
      for (int j = 0; j < f.r; ++j) {
        std::uint32_t node = tp.affine(f.phi_t + static_cast<std::uint32_t>(j) * f.in, x, n);
        if (j == 0) proj0 = node;
      }
      std::uint32_t s0 = 0;
      for (int j = 0; j < f.r; ++j) {
        std::uint32_t node = tp.scale_param(f.alpha + j, proj0 + j);
        if (j == 0) s0 = node;
      }
      for (int r = 0; r < f.out; ++r) {
        std::uint32_t node = tp.affine(f.psi + static_cast<std::uint32_t>(r) * f.r, s0,
                                       static_cast<std::uint32_t>(f.r), f.b + r);
        if (r == 0) y = node;
      }
      if (f.act == Activation::Tanh) {
        std::uint32_t t0 = 0;
        for (int r = 0; r < f.out; ++r) {
          std::uint32_t node = tp.tanh_(y + r);
          if (r == 0) t0 = node;
        }
        y = t0;
      }
      x = y;
      n = static_cast<std::uint32_t>(f.out);
    }
  }
  return x;
}

template void eval_net<double>(const Network&, const ParamStore&, std::span<const double>,
                               std::vector<double>&, std::vector<double>&);
template void eval_net<Dual2>(const Network&, const ParamStore&, std::span<const Dual2>,
                              std::vector<Dual2>&, std::vector<Dual2>&);
template std::uint32_t trace_net<double>(Tape<double>&, const Network&, std::uint32_t, int);
template std::uint32_t trace_net<Dual2>(Tape<Dual2>&, const Network&, std::uint32_t, int);

}  // namespace dldmf

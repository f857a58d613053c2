#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dldmf/dual.hpp"
#include "dldmf/param_store.hpp"
#include "dldmf/rng.hpp"
#include "dldmf/tape.hpp"

namespace dldmf {

enum class Activation : std::uint8_t { Tanh, Identity };

struct DenseLayer {
  std::uint32_t w = 0;  // [out][in] row-major in the param store
  std::uint32_t b = 0;  // [out]
  int in = 0, out = 0;
  Activation act = Activation::Tanh;
};

// Dense layer rewritten as psi * diag(alpha) * phi^T with frozen orthonormal
// factors and learnable singular values. Evaluated in the cheap order
// psi * (alpha ⊙ (phi^T x)).
struct FactoredLayer {
  std::uint32_t psi = 0;    // [out][r] row-major
  std::uint32_t alpha = 0;  // [r]
  std::uint32_t phi_t = 0;  // [r][in] row-major (phi stored transposed)
  std::uint32_t b = 0;      // [out]
  int in = 0, out = 0, r = 0;
  Activation act = Activation::Tanh;
};

using Layer = std::variant<DenseLayer, FactoredLayer>;

int layer_in(const Layer& l);
int layer_out(const Layer& l);

struct Network {
  std::string name;  // spatial_encoder | param_encoder | latent_init | dynamics | decoder | time_encoder
  std::vector<Layer> layers;

  int input_width() const { return layers.empty() ? 0 : layer_in(layers.front()); }
  int output_width() const { return layers.empty() ? 0 : layer_out(layers.back()); }
  std::size_t param_count() const;
};

// Dense stack over the widths chain [in, hidden..., out]; tanh everywhere
// except the identity output layer. Glorot-uniform matrices, zero biases.
Network build_dense(ParamStore& ps, const std::string& name, const std::vector<int>& widths, Rng& rng);

// Architecture knobs for the five sub-networks. The decoder consumes the
// concatenation [h_x; z_t; h_param], so its input width is
// spatial_dim + latent_dim + param_dim by construction. decoder_depth counts
// all fully connected decoder layers and must be >= 3 so that at least one
// hidden layer can be SVD-modulated.
struct ModelConfig {
  int spatial_dim = 32;   // d_x'
  int param_dim = 32;     // d_p
  int latent_dim = 16;    // d_z
  std::vector<int> spatial_hidden{64, 64};
  std::vector<int> param_hidden{64, 64};
  std::vector<int> latent_init_hidden{64};
  std::vector<int> dynamics_hidden{64, 64, 64};
  // Time encoder of the static-fusion ablation; 3x84 keeps its parameter
  // count within ~1% of latent_init + dynamics at the default sizes.
  std::vector<int> time_encoder_hidden{84, 84, 84};
  int decoder_depth = 5;  // D_g
  int decoder_width = 64;
  // Lift x to (sin x, cos x) before the spatial encoder (periodic domain).
  bool periodic_features = true;
  // Training ranges used to normalize mu to [0,1] per coordinate.
  std::array<double, 3> mu_lo{1.0, 0.0, 0.0};
  std::array<double, 3> mu_hi{5.0, 0.0, 0.0};
  std::uint64_t seed = 0;

  int decoder_input_width() const { return spatial_dim + latent_dim + param_dim; }
  int spatial_input_width() const { return periodic_features ? 2 : 1; }
};

// Forward pass; pure in (weights, input). T is double or Dual2.
template <class T>
void eval_net(const Network& net, const ParamStore& ps, std::span<const T> input,
              std::vector<T>& out, std::vector<T>& scratch);

template <class T>
std::vector<T> eval_net(const Network& net, const ParamStore& ps, std::span<const T> input) {
  std::vector<T> out, scratch;
  eval_net(net, ps, input, out, scratch);
  return out;
}

// Evaluates the network with input[seed_index] marked as the independent
// variable; outputs carry exact first and second derivatives with respect to
// it. The value channel matches the plain forward pass bit-for-bit.
std::vector<Dual2> forward_dual(const Network& net, const ParamStore& ps,
                                std::span<const double> inputs, int seed_index);

// Records the network onto a tape; the input must be a contiguous node range.
// Returns the first output node; outputs are contiguous.
template <class T>
std::uint32_t trace_net(Tape<T>& tp, const Network& net, std::uint32_t in_begin, int in_n);

extern template void eval_net<double>(const Network&, const ParamStore&, std::span<const double>,
                                      std::vector<double>&, std::vector<double>&);
extern template void eval_net<Dual2>(const Network&, const ParamStore&, std::span<const Dual2>,
                                     std::vector<Dual2>&, std::vector<Dual2>&);
extern template std::uint32_t trace_net<double>(Tape<double>&, const Network&, std::uint32_t, int);
extern template std::uint32_t trace_net<Dual2>(Tape<Dual2>&, const Network&, std::uint32_t, int);

}  // namespace dldmf

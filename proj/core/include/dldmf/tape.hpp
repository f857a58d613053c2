#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "dldmf/dual.hpp"
#include "dldmf/kernels.hpp"
#include "dldmf/param_store.hpp"

namespace dldmf {

enum class Op : std::uint8_t {
  Leaf,        // externally set value
  ParamRead,   // values[a] from the bound ParamStore
  Copy,        // val[a]
  Neg,
  Tanh,
  Sin,
  Cos,
  Exp,
  Square,
  Add,
  Sub,
  Mul,
  Div,
  Affine,      // bias + dot(params[a..a+n), val[b..b+n))
  ScaleParam,  // params[a] * val[b]
  SumRange,    // sum of val[a..a+n)
  PickVal,     // dual tape only: (val[a].v, 0, 0)
  PickD1,      // dual tape only: (val[a].d1, 0, 0)
  PickD2,      // dual tape only: (val[a].d2, 0, 0)
  Pack,        // dual tape only: (val[a].v, val[b].v, 0)
};

// One recorded operation. Parents always point at smaller indices, so a
// single backward pass over the records visits every node once.
struct TapeNode {
  Op op;
  std::uint32_t a = 0;    // parent index, param offset, or range begin
  std::uint32_t b = 0;    // second parent index or input range begin
  std::uint32_t n = 0;    // range length for Affine / SumRange
  std::uint32_t aux = 0;  // bias param offset (Affine) or partials offset
};

inline constexpr std::uint32_t kNoBias = 0xFFFFFFFFu;

namespace detail {

inline void corr_acc(double& acc, double ybar, double c) { acc += ybar * c; }

// Adjoint of multiplication by c in second-order derivative storage
// (transpose of the truncated Taylor product).
inline void corr_acc(Dual2& acc, const Dual2& ybar, const Dual2& c) {
  acc.v += ybar.v * c.v + ybar.d1 * c.d1 + ybar.d2 * c.d2;
  acc.d1 += ybar.d1 * c.v + 2.0 * ybar.d2 * c.d1;
  acc.d2 += ybar.d2 * c.v;
}

inline double corr_value(double ybar, double x) { return ybar * x; }
inline double corr_value(const Dual2& ybar, const Dual2& x) {
  return ybar.v * x.v + ybar.d1 * x.d1 + ybar.d2 * x.d2;
}

inline double value_channel(double v) { return v; }
inline double value_channel(const Dual2& v) { return v.v; }

inline void scale_acc(double& acc, double ybar, double w) { acc += ybar * w; }
inline void scale_acc(Dual2& acc, const Dual2& ybar, double w) {
  acc.v += ybar.v * w;
  acc.d1 += ybar.d1 * w;
  acc.d2 += ybar.d2 * w;
}

template <class T>
T t_tanh(const T& a) {
  using std::tanh;
  return tanh(a);
}
template <class T>
T t_sin(const T& a) {
  using std::sin;
  return sin(a);
}
template <class T>
T t_cos(const T& a) {
  using std::cos;
  return cos(a);
}
template <class T>
T t_exp(const T& a) {
  using std::exp;
  return exp(a);
}

}  // namespace detail

// Eagerly evaluated scalar expression tape. T is double for plain traces and
// Dual2 when the traced computation carries spatial duals. Weight gradients
// come out of a reverse sweep; with T = Dual2 the sweep propagates adjoints
// of all three derivative channels (reverse-over-forward).
template <class T>
struct Tape {
  const ParamStore* params = nullptr;
  std::vector<TapeNode> rec;
  std::vector<T> val;
  std::vector<T> adj;
  std::vector<T> pd;  // stored partials (Tanh/Sin/Cos/Exp/Square/Div)

  struct Mark {
    std::size_t nodes;
    std::size_t partials;
  };

  explicit Tape(const ParamStore* ps = nullptr) : params(ps) {}

  std::size_t size() const { return rec.size(); }
  Mark mark() const { return {rec.size(), pd.size()}; }

  void truncate(Mark m) {
    rec.resize(m.nodes);
    val.resize(m.nodes);
    adj.resize(m.nodes);
    pd.resize(m.partials);
  }

  void clear() {
    rec.clear();
    val.clear();
    adj.clear();
    pd.clear();
  }

  const T& value(std::uint32_t i) const { return val[i]; }
  const T& adjoint(std::uint32_t i) const { return adj[i]; }
  void seed(std::uint32_t i, const T& s) { adj[i] += s; }

  void zero_adjoints() {
    for (auto& a : adj) a = T{};
  }

  std::uint32_t leaf(const T& v) { return push({Op::Leaf}, v); }

  std::uint32_t param(std::uint32_t off) {
    return push({Op::ParamRead, off}, T{params->values[off]});
  }

  std::uint32_t copy(std::uint32_t x) { return push({Op::Copy, x}, val[x]); }
  std::uint32_t neg(std::uint32_t x) { return push({Op::Neg, x}, -val[x]); }

  std::uint32_t tanh_(std::uint32_t x) {
    T y = detail::t_tanh(val[x]);
    return push_partial({Op::Tanh, x}, y, T{1.0} - y * y);
  }
  std::uint32_t sin_(std::uint32_t x) {
    return push_partial({Op::Sin, x}, detail::t_sin(val[x]), detail::t_cos(val[x]));
  }
  std::uint32_t cos_(std::uint32_t x) {
    return push_partial({Op::Cos, x}, detail::t_cos(val[x]), -detail::t_sin(val[x]));
  }
  std::uint32_t exp_(std::uint32_t x) {
    T y = detail::t_exp(val[x]);
    return push_partial({Op::Exp, x}, y, y);
  }
  std::uint32_t square_(std::uint32_t x) {
    const T& a = val[x];
    return push_partial({Op::Square, x}, a * a, 2.0 * a);
  }

  std::uint32_t add(std::uint32_t x, std::uint32_t y) {
    return push({Op::Add, x, y}, val[x] + val[y]);
  }
  std::uint32_t sub(std::uint32_t x, std::uint32_t y) {
    return push({Op::Sub, x, y}, val[x] - val[y]);
  }
  std::uint32_t mul(std::uint32_t x, std::uint32_t y) {
    return push({Op::Mul, x, y}, val[x] * val[y]);
  }
  std::uint32_t div(std::uint32_t x, std::uint32_t y) {
    T q = val[x] / val[y];
    TapeNode nd{Op::Div, x, y};
    nd.aux = static_cast<std::uint32_t>(pd.size());
    pd.push_back(T{1.0} / val[y]);
    pd.push_back(-q / val[y]);
    return push(nd, q);
  }

  std::uint32_t affine(std::uint32_t w_off, std::uint32_t x_begin, std::uint32_t n,
                       std::uint32_t bias_off = kNoBias) {
    const double bias = bias_off == kNoBias ? 0.0 : params->values[bias_off];
    T y = dldmf::detail::affine_kernel(params->values.data() + w_off,
                                       val.data() + x_begin, static_cast<int>(n), bias);
    return push({Op::Affine, w_off, x_begin, n, bias_off}, y);
  }

  std::uint32_t scale_param(std::uint32_t off, std::uint32_t x) {
    return push({Op::ScaleParam, off, x}, params->values[off] * val[x]);
  }

  std::uint32_t sum_range(std::uint32_t begin, std::uint32_t n) {
    T s{};
    for (std::uint32_t i = 0; i < n; ++i) s += val[begin + i];
    return push({Op::SumRange, begin, 0, n}, s);
  }

  std::uint32_t pick_val(std::uint32_t x) {
    if constexpr (std::is_same_v<T, Dual2>) {
      return push({Op::PickVal, x}, T{val[x].v});
    } else {
      throw std::logic_error("tape: channel ops need a Dual2 tape");
    }
  }
  std::uint32_t pick_d1(std::uint32_t x) {
    if constexpr (std::is_same_v<T, Dual2>) {
      return push({Op::PickD1, x}, T{val[x].d1});
    } else {
      throw std::logic_error("tape: channel ops need a Dual2 tape");
    }
  }
  std::uint32_t pick_d2(std::uint32_t x) {
    if constexpr (std::is_same_v<T, Dual2>) {
      return push({Op::PickD2, x}, T{val[x].d2});
    } else {
      throw std::logic_error("tape: channel ops need a Dual2 tape");
    }
  }
  std::uint32_t pack(std::uint32_t v_node, std::uint32_t d1_node) {
    if constexpr (std::is_same_v<T, Dual2>) {
      T y{};
      y.v = val[v_node].v;
      y.d1 = val[d1_node].v;
      return push({Op::Pack, v_node, d1_node}, y);
    } else {
      throw std::logic_error("tape: channel ops need a Dual2 tape");
    }
  }

  // Reverse sweep over nodes [from, size()). Adjoints must be seeded before
  // the call; parameter gradients accumulate into grad unless with_params is
  // false (then only node adjoints propagate).
  void sweep(std::size_t from, std::span<double> grad, bool with_params = true) {
    using namespace detail;
    for (std::size_t i = rec.size(); i-- > from;) {
      const TapeNode& nd = rec[i];
      const T ybar = adj[i];
      switch (nd.op) {
        case Op::Leaf:
          break;
        case Op::ParamRead:
          if (with_params) grad[nd.a] += value_channel(ybar);
          break;
        case Op::Copy:
          adj[nd.a] += ybar;
          break;
        case Op::Neg:
          adj[nd.a] -= ybar;
          break;
        case Op::Tanh:
        case Op::Sin:
        case Op::Cos:
        case Op::Exp:
        case Op::Square:
          corr_acc(adj[nd.a], ybar, pd[nd.aux]);
          break;
        case Op::Add:
          adj[nd.a] += ybar;
          adj[nd.b] += ybar;
          break;
        case Op::Sub:
          adj[nd.a] += ybar;
          adj[nd.b] -= ybar;
          break;
        case Op::Mul:
          corr_acc(adj[nd.a], ybar, val[nd.b]);
          corr_acc(adj[nd.b], ybar, val[nd.a]);
          break;
        case Op::Div:
          corr_acc(adj[nd.a], ybar, pd[nd.aux]);
          corr_acc(adj[nd.b], ybar, pd[nd.aux + 1]);
          break;
        case Op::Affine: {
          const double* w = params->values.data() + nd.a;
          const T* xs = val.data() + nd.b;
          T* xa = adj.data() + nd.b;
          if (with_params) {
            double* g = grad.data() + nd.a;
            for (std::uint32_t j = 0; j < nd.n; ++j) {
              scale_acc(xa[j], ybar, w[j]);
              g[j] += corr_value(ybar, xs[j]);
            }
            if (nd.aux != kNoBias) grad[nd.aux] += value_channel(ybar);
          } else {
            for (std::uint32_t j = 0; j < nd.n; ++j) scale_acc(xa[j], ybar, w[j]);
          }
          break;
        }
        case Op::ScaleParam:
          scale_acc(adj[nd.b], ybar, params->values[nd.a]);
          if (with_params) grad[nd.a] += corr_value(ybar, val[nd.b]);
          break;
        case Op::SumRange:
          for (std::uint32_t j = 0; j < nd.n; ++j) adj[nd.a + j] += ybar;
          break;
        case Op::PickVal:
          if constexpr (std::is_same_v<T, Dual2>) adj[nd.a].v += ybar.v;
          break;
        case Op::PickD1:
          if constexpr (std::is_same_v<T, Dual2>) adj[nd.a].d1 += ybar.v;
          break;
        case Op::PickD2:
          if constexpr (std::is_same_v<T, Dual2>) adj[nd.a].d2 += ybar.v;
          break;
        case Op::Pack:
          if constexpr (std::is_same_v<T, Dual2>) {
            adj[nd.a].v += ybar.v;
            adj[nd.b].v += ybar.d1;
          }
          break;
      }
    }
  }

  // Gradient of a scalar-valued trace with respect to every bound parameter.
  // Untouched parameters keep gradient 0 (caller zero-initializes grad).
  void gradients(std::uint32_t root, std::span<double> grad) {
    if constexpr (std::is_same_v<T, Dual2>) {
      if (val[root].d1 != 0.0 || val[root].d2 != 0.0)
        throw std::invalid_argument("tape: gradient root is not scalar-valued");
    }
    zero_adjoints();
    adj[root] += T{1.0};
    sweep(0, grad);
  }

 private:
  std::uint32_t push(TapeNode nd, const T& v) {
    rec.push_back(nd);
    val.push_back(v);
    adj.push_back(T{});
    return static_cast<std::uint32_t>(rec.size() - 1);
  }

  std::uint32_t push_partial(TapeNode nd, const T& v, const T& partial) {
    nd.aux = static_cast<std::uint32_t>(pd.size());
    pd.push_back(partial);
    return push(nd, v);
  }
};

}  // namespace dldmf

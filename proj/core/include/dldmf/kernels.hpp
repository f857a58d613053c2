#pragma once

#include "dldmf/dual.hpp"

namespace dldmf::detail {

// Canonical affine accumulation y = bias + sum_i w[i]*x[i].
//
// Every forward path in the project (plain evaluation, dual evaluation, taped
// evaluation) funnels through these two kernels. The 4-lane accumulation order
// is part of the contract: it makes the value channel of a dual or taped pass
// bit-identical to the plain pass.
inline double affine_kernel(const double* w, const double* x, int n, double bias) {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 += w[i] * x[i];
    a1 += w[i + 1] * x[i + 1];
    a2 += w[i + 2] * x[i + 2];
    a3 += w[i + 3] * x[i + 3];
  }
  double acc = (a0 + a1) + (a2 + a3);
  for (; i < n; ++i) acc += w[i] * x[i];
  return bias + acc;
}

inline Dual2 affine_kernel(const double* w, const Dual2* x, int n, double bias) {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  double b0 = 0.0, b1 = 0.0, b2 = 0.0, b3 = 0.0;
  double c0 = 0.0, c1 = 0.0, c2 = 0.0, c3 = 0.0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 += w[i] * x[i].v;
    a1 += w[i + 1] * x[i + 1].v;
    a2 += w[i + 2] * x[i + 2].v;
    a3 += w[i + 3] * x[i + 3].v;
    b0 += w[i] * x[i].d1;
    b1 += w[i + 1] * x[i + 1].d1;
    b2 += w[i + 2] * x[i + 2].d1;
    b3 += w[i + 3] * x[i + 3].d1;
    c0 += w[i] * x[i].d2;
    c1 += w[i + 1] * x[i + 1].d2;
    c2 += w[i + 2] * x[i + 2].d2;
    c3 += w[i + 3] * x[i + 3].d2;
  }
  double av = (a0 + a1) + (a2 + a3);
  double ad1 = (b0 + b1) + (b2 + b3);
  double ad2 = (c0 + c1) + (c2 + c3);
  for (; i < n; ++i) {
    av += w[i] * x[i].v;
    ad1 += w[i] * x[i].d1;
    ad2 += w[i] * x[i].d2;
  }
  return {bias + av, ad1, ad2};
}

}  // namespace dldmf::detail

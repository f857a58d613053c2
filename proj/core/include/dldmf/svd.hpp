#pragma once

#include <span>
#include <vector>

namespace dldmf {

// Thin SVD A = U diag(sigma) V^T with singular values sorted descending.
struct SvdResult {
  int m = 0, n = 0, r = 0;       // r = min(m, n)
  std::vector<double> u;         // [m][r] row-major, orthonormal columns
  std::vector<double> sigma;     // [r]
  std::vector<double> v;         // [n][r] row-major, orthonormal columns
};

// One-sided Jacobi on the columns. Throws NumericalError if the sweep cap is
// reached without convergence (not expected at the layer sizes used here).
SvdResult jacobi_svd(int m, int n, std::span<const double> a_rowmajor);

}  // namespace dldmf

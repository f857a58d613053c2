#include "dldmf/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dldmf/errors.hpp"

namespace dldmf {

namespace {

// One-sided Jacobi with m >= n: rotates column pairs of A until all are
// mutually orthogonal, accumulating the rotations in V.
SvdResult jacobi_tall(int m, int n, std::span<const double> a_rowmajor) {
  // column-major work copy
  std::vector<double> a(static_cast<std::size_t>(m) * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      a[static_cast<std::size_t>(j) * m + i] = a_rowmajor[static_cast<std::size_t>(i) * n + j];
  std::vector<double> v(static_cast<std::size_t>(n) * n, 0.0);
  for (int j = 0; j < n; ++j) v[static_cast<std::size_t>(j) * n + j] = 1.0;

  constexpr int kMaxSweeps = 60;
  constexpr double kTol = 1e-15;
  bool converged = false;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    converged = true;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double* cp = a.data() + static_cast<std::size_t>(p) * m;
        double* cq = a.data() + static_cast<std::size_t>(q) * m;
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (int i = 0; i < m; ++i) {
          alpha += cp[i] * cp[i];
          beta += cq[i] * cq[i];
          gamma += cp[i] * cq[i];
        }
        if (std::abs(gamma) <= kTol * std::sqrt(alpha * beta)) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int i = 0; i < m; ++i) {
          const double ap = cp[i];
          cp[i] = c * ap - s * cq[i];
          cq[i] = s * ap + c * cq[i];
        }
        double* vp = v.data() + static_cast<std::size_t>(p) * n;
        double* vq = v.data() + static_cast<std::size_t>(q) * n;
        for (int i = 0; i < n; ++i) {
          const double vpi = vp[i];
          vp[i] = c * vpi - s * vq[i];
          vq[i] = s * vpi + c * vq[i];
        }
      }
    }
  }
  if (!converged) throw NumericalError("jacobi svd: no convergence within the sweep cap");

  std::vector<double> sigma(n);
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    const double* cj = a.data() + static_cast<std::size_t>(j) * m;
    for (int i = 0; i < m; ++i) s += cj[i] * cj[i];
    sigma[j] = std::sqrt(s);
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return sigma[x] > sigma[y]; });

  SvdResult res;
  res.m = m;
  res.n = n;
  res.r = n;
  res.sigma.resize(n);
  res.u.assign(static_cast<std::size_t>(m) * n, 0.0);
  res.v.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int k = 0; k < n; ++k) {
    const int j = order[k];
    res.sigma[k] = sigma[j];
    const double inv = sigma[j] > 0.0 ? 1.0 / sigma[j] : 0.0;
    const double* cj = a.data() + static_cast<std::size_t>(j) * m;
    for (int i = 0; i < m; ++i) res.u[static_cast<std::size_t>(i) * n + k] = cj[i] * inv;
    const double* vj = v.data() + static_cast<std::size_t>(j) * n;
    for (int i = 0; i < n; ++i) res.v[static_cast<std::size_t>(i) * n + k] = vj[i];
  }
  return res;
}

}  // namespace

SvdResult jacobi_svd(int m, int n, std::span<const double> a_rowmajor) {
  if (m <= 0 || n <= 0 || a_rowmajor.size() != static_cast<std::size_t>(m) * n)
    throw DimensionError("jacobi svd: bad matrix shape");
  for (double x : a_rowmajor)
    if (!std::isfinite(x)) throw NumericalError("jacobi svd: non-finite entry");
  if (m >= n) return jacobi_tall(m, n, a_rowmajor);

  // factor the transpose and swap the factors
  std::vector<double> at(static_cast<std::size_t>(n) * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      at[static_cast<std::size_t>(j) * m + i] = a_rowmajor[static_cast<std::size_t>(i) * n + j];
  SvdResult t = jacobi_tall(n, m, at);
  SvdResult res;
  res.m = m;
  res.n = n;
  res.r = t.r;
  res.sigma = std::move(t.sigma);
  res.u = std::move(t.v);
  res.v = std::move(t.u);
  return res;
}

}  // namespace dldmf

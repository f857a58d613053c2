#include "dldmf/reference_solver.hpp"

#include <cmath>

#include "dldmf/errors.hpp"

namespace dldmf {

void step_convection_diffusion(std::span<const double> u, double beta, double nu, double dt,
                               SpectralWorkspace& ws, std::span<double> out) {
  const int n = ws.n;
  for (int i = 0; i < n; ++i) ws.modes[i] = {u[i], 0.0};
  ws.fft(ws.modes.data());
  for (int j = 0; j < n; ++j) {
    const double k = ws.wavenumber(j);
    // exp((-i beta k - nu k^2) dt)
    const double damp = std::exp(-nu * k * k * dt);
    const double ang = -beta * k * dt;
    ws.modes[j] *= std::complex<double>(damp * std::cos(ang), damp * std::sin(ang));
  }
  ws.ifft(ws.modes.data());
  for (int i = 0; i < n; ++i) out[i] = ws.modes[i].real();
}

std::vector<double> step_convection_diffusion(std::span<const double> u, double beta, double nu,
                                              double dt) {
  SpectralWorkspace ws(static_cast<int>(u.size()));
  std::vector<double> out(u.size());
  step_convection_diffusion(u, beta, nu, dt, ws, out);
  return out;
}

std::vector<double> step_reaction(std::span<const double> u, double rho, double dt) {
  std::vector<double> out(u.size());
  const double growth = std::exp(rho * dt);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double g = u[i] * growth;
    out[i] = g / (g + 1.0 - u[i]);
  }
  return out;
}

SolutionGrid solve(const PdeParams& mu, const DomainSpec& domain, int nx, int nt, int substeps) {
  if (!SpectralWorkspace::is_pow2(nx))
    throw ConfigError("reference solve: nx must be a power of two");
  if (substeps < 1) throw ConfigError("reference solve: substeps must be >= 1");
  if (nt < 2) throw ConfigError("reference solve: need at least two time samples");
  if (!(mu.nu >= 0.0)) throw ConfigError("reference solve: nu must be >= 0");

  SolutionGrid g;
  g.nx = nx;
  g.nt = nt;
  g.t_max = domain.t_test;
  g.mu = mu;
  g.ic = domain.ic;
  g.x.resize(nx);
  const double width = domain.x_max - domain.x_min;
  for (int i = 0; i < nx; ++i) g.x[i] = domain.x_min + width * i / nx;
  g.t.resize(nt);
  const double row_dt = g.t_max / (nt - 1);
  for (int r = 0; r < nt; ++r) g.t[r] = row_dt * r;

  g.u.resize(static_cast<std::size_t>(nt) * nx);
  std::vector<double> u(nx);
  for (int i = 0; i < nx; ++i) u[i] = initial_condition(g.x[i], domain.ic);
  std::copy(u.begin(), u.end(), g.u.begin());

  SpectralWorkspace ws(nx);
  std::vector<double> tmp(nx);
  const double dt = row_dt / substeps;
  const double growth_half = std::exp(mu.rho * dt / 2.0);

  auto react_half = [&](std::vector<double>& v) {
    for (int i = 0; i < nx; ++i) {
      const double gg = v[i] * growth_half;
      v[i] = gg / (gg + 1.0 - v[i]);
    }
  };

  for (int r = 1; r < nt; ++r) {
    for (int s = 0; s < substeps; ++s) {
      react_half(u);
      step_convection_diffusion(u, mu.beta, mu.nu, dt, ws, tmp);
      std::swap(u, tmp);
      react_half(u);
    }
    for (int i = 0; i < nx; ++i) {
      if (!std::isfinite(u[i])) throw SolverDivergedError(g.t[r]);
    }
    std::copy(u.begin(), u.end(), g.u.begin() + static_cast<std::size_t>(r) * nx);
  }
  return g;
}

SolutionGrid solve_default(const PdeParams& mu, const DomainSpec& domain) {
  const int nx = 256;
  const int nt = static_cast<int>(std::lround(domain.t_test * 100.0)) + 1;
  const double row_dt = domain.t_test / (nt - 1);
  const int substeps = static_cast<int>(std::ceil(row_dt / 1e-3 - 1e-12));
  return solve(mu, domain, nx, nt, std::max(1, substeps));
}

}  // namespace dldmf

#pragma once

#include <span>
#include <vector>

#include "dldmf/fft.hpp"
#include "dldmf/model.hpp"
#include "dldmf/physics.hpp"

namespace dldmf {

// Ground-truth solution values on a regular (x, t) grid for one parameter
// instance. x excludes the duplicate periodic endpoint; u is row-major with
// one row per time sample; the first row is the initial condition exactly.
struct SolutionGrid {
  int nx = 0;
  int nt = 0;
  double t_max = 0.0;
  std::vector<double> x;
  std::vector<double> t;
  std::vector<double> u;  // [nt][nx]
  PdeParams mu;
  IcKind ic = IcKind::Gaussian;

  std::span<const double> row(int r) const {
    return {u.data() + static_cast<std::size_t>(r) * nx, static_cast<std::size_t>(nx)};
  }
};

// Exact Fourier-space flow of the linear part: mode k scaled by
// exp((-i beta k - nu k^2) dt).
std::vector<double> step_convection_diffusion(std::span<const double> u, double beta, double nu,
                                              double dt);
void step_convection_diffusion(std::span<const double> u, double beta, double nu, double dt,
                               SpectralWorkspace& ws, std::span<double> out);

// Exact pointwise logistic flow of the reaction part:
// u <- u e^{rho dt} / (u e^{rho dt} + 1 - u).
std::vector<double> step_reaction(std::span<const double> u, double rho, double dt);

// Strang splitting: half reaction, full convection-diffusion, half reaction
// per substep; rows sampled at the nt requested times over [0, t_max].
SolutionGrid solve(const PdeParams& mu, const DomainSpec& domain, int nx, int nt, int substeps);

// Paper-scale defaults: nx = 256, 101 samples per unit time, substeps sized
// so the splitting step is at most 1e-3.
SolutionGrid solve_default(const PdeParams& mu, const DomainSpec& domain);

}  // namespace dldmf

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dldmf/integrate.hpp"
#include "dldmf/network.hpp"

namespace dldmf {

// One point mu = (beta, nu, rho) in CDR coefficient space.
struct PdeParams {
  double beta = 0.0;
  double nu = 0.0;
  double rho = 0.0;
};

struct FusedQuery {
  double x = 0.0;
  double t = 0.0;
  PdeParams mu;
};

// dldmf: latent ODE time representation (the full model).
// static_fusion: a direct time encoder fills the z slot (time as coordinate).
// autodecode_init: dldmf architecture, z_0 inferred by iterative auto-decoding.
enum class ModelKind : std::uint8_t { Dldmf = 0, StaticFusion = 1, AutodecodeInit = 2 };

const char* to_string(ModelKind k);

// Cached latent trajectory for one parameter instance.
struct LatentTrajectory {
  PdeParams mu;
  std::vector<double> h_param;
  std::vector<double> times;
  std::vector<double> z;  // [times.size()][latent_dim] row-major
  int latent_dim = 0;

  std::span<const double> at(std::size_t i) const {
    return {z.data() + i * static_cast<std::size_t>(latent_dim),
            static_cast<std::size_t>(latent_dim)};
  }
  // Index of a cached time equal to t (within tolerance), if any.
  std::optional<std::size_t> find_time(double t) const;
};

struct PointDerivatives {
  double u = 0.0;
  double u_t = 0.0;
  double u_x = 0.0;
  double u_xx = 0.0;
};

struct Model {
  ModelConfig cfg;
  ModelKind kind = ModelKind::Dldmf;
  ParamStore params;
  Network spatial_encoder, param_encoder, latent_init, dynamics, decoder;
  Network time_encoder;  // static_fusion only
  IntegratorConfig integrator;

  static Model init(const ModelConfig& cfg, ModelKind kind = ModelKind::Dldmf);

  std::size_t param_count() const;

  std::array<double, 3> normalize_mu(const PdeParams& mu) const;
  std::vector<double> spatial_features(double x) const;
  std::vector<double> encode_param(const PdeParams& mu) const;  // h_param
  std::vector<double> encode_spatial(double x) const;           // h_x

  LatentState initial_latent(std::span<const double> h_param) const;
  LatentTrajectory make_trajectory(const PdeParams& mu, std::span<const double> times) const;
  LatentTrajectory make_trajectory_from(const PdeParams& mu, const LatentState& z0,
                                        std::span<const double> times) const;

  double decode(std::span<const double> h_x, std::span<const double> z_slot,
                std::span<const double> h_param) const;

  // u_hat at a query; for the dldmf kinds z_t comes from the cache when it
  // covers q.t and from a fresh integration otherwise.
  double forward(const FusedQuery& q, const LatentTrajectory* cache = nullptr) const;

  // Chain rule dt u = (d g/d z) . f(z_t, h_param); dldmf kinds only.
  double time_derivative(const FusedQuery& q, const LatentTrajectory* cache = nullptr) const;

  // Exact (u_x, u_xx) via duals seeded at x before the periodic lift.
  std::pair<double, double> spatial_derivatives(const FusedQuery& q,
                                                const LatentTrajectory* cache = nullptr) const;

  // All of u, u_t, u_x, u_xx for the residual in two dual decoder passes.
  PointDerivatives point_eval(const FusedQuery& q,
                              const LatentTrajectory* cache = nullptr) const;

  void save(const std::filesystem::path& path) const;
  static Model load(const std::filesystem::path& path);
  // Loads and verifies shapes against what `expected` would build.
  static Model load_expected(const std::filesystem::path& path, const ModelConfig& expected,
                             ModelKind kind);

 private:
  std::vector<double> latent_at(const FusedQuery& q, const LatentTrajectory* cache) const;
};

struct AutodecodeResult {
  LatentState z;
  std::vector<double> loss_curve;  // loss after each step, preceded by the initial loss
  int steps = 0;
  double seconds = 0.0;
};

// Infers z by K gradient-descent steps on the decoding loss
// sum_x (g([h_x; z; h_param]) - target(x))^2 from z^0 = 0, decoder frozen.
AutodecodeResult autodecode_init(std::span<const double> target_u0, std::span<const double> xs,
                                 const Model& model, const PdeParams& mu, int steps, double rate);

}  // namespace dldmf

#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tag/box_qp.hpp"
#include "tag/bspline.hpp"
#include "tag/forward_model.hpp"

namespace tag {

struct SlotConfig {
  double lambda = 0.22;
  int basis_count = 12;

  // Temperature search range. When unset, each pixel searches
  // [T_b - t_halfwidth, T_b + t_halfwidth] around the brightness temperature
  // T_b of its brightest band.
  std::optional<double> t_lo;
  std::optional<double> t_hi;
  double t_halfwidth = 20.0;
  double t_step = 1.0;
  double v_step = 0.05;

  double refine_tolerance = 1e-10;  // relative to the best coarse objective
  int max_refine_iterations = 200;

  std::vector<double> band_weights;  // empty: all ones

  // Pixels whose relative texture sensitivity ||dM/dV|| / ||M|| falls below
  // this are flagged as having an unidentifiable V.
  double v_sensitivity_threshold = 1e-3;

  bool record_history = false;

  void validate(std::size_t bands) const;
};

struct BetaSolution {
  std::vector<double> beta;
  double objective = 0.0;
  double data_term = 0.0;  // 1/2 sum w r^2
  double penalty = 0.0;    // lambda/2 ||D beta||^2
  int active_bounds = 0;
  int qp_iterations = 0;
};

struct PixelSolution {
  double temperature = 0.0;
  double view_factor = 0.0;
  std::vector<double> beta;
  double objective = 0.0;
  double data_term = 0.0;
  double penalty = 0.0;
  double residual_norm = 0.0;  // sqrt(sum w r^2)

  // diagnostics
  int refine_iterations = 0;
  int evaluations = 0;
  int active_bounds = 0;
  double v_sensitivity = 0.0;
  bool v_identifiable = true;
  bool emissivity_at_bound = false;
  std::vector<double> objective_history;  // filled when record_history
};

/// Per-grid precomputation shared read-only by every pixel.
class SlotProblem {
 public:
  SlotProblem(const SpectralGrid& grid, const AmbientSpectra& ambient, const SlotConfig& config);

  const SpectralGrid& grid() const noexcept { return grid_; }
  const AmbientSpectra& ambient() const noexcept { return ambient_; }
  const SlotConfig& config() const noexcept { return config_; }
  const SplineBasis& basis() const noexcept { return basis_; }
  const BandedBasis& phi() const noexcept { return phi_; }
  std::span<const double> weights() const noexcept { return weights_; }
  const Eigen::MatrixXd& penalty_gram() const noexcept { return penalty_gram_; }

  /// M = X(V) + (B(T) - X(V)) * Phi beta.
  RadianceSpectrum model_spectrum(double temperature, double view_factor, std::span<const double> beta) const;

  /// Exact minimizer over beta in [0,1]^K at fixed (T, V). Throws
  /// NumericalError when the system is singular (lambda = 0, rank deficient).
  BetaSolution solve_beta(double temperature, double view_factor, std::span<const double> spectrum) const;

  /// Same, but starting the active-set iteration from the given feasible
  /// point and working set instead of the clipped unconstrained solution.
  BetaSolution solve_beta_from(double temperature, double view_factor, std::span<const double> spectrum,
                               const Eigen::VectorXd& start, const std::vector<Bound>& working) const;

  /// Normal-equation pieces at (T, V): H = A'WA + lambda D'D, g = A'Wy.
  void normal_equations(double temperature, double view_factor, std::span<const double> spectrum,
                        Eigen::MatrixXd& hessian, Eigen::VectorXd& linear) const;

  /// Profiled objective J(T, V) = min_beta objective.
  double profiled_objective(double temperature, double view_factor, std::span<const double> spectrum) const;

  /// dJ/dT by the envelope theorem: sum w r e dB/dT at the optimal beta.
  double profiled_dT(double temperature, double view_factor, std::span<const double> spectrum) const;

  /// Coarse grid over T x V followed by coordinate refinement.
  PixelSolution outer_search(std::span<const double> spectrum) const;

 private:
  struct Workspace;
  BetaSolution solve_beta_impl(double temperature, double view_factor, std::span<const double> spectrum,
                               Workspace& ws, bool throw_on_singular) const;
  double evaluate(double temperature, double view_factor, std::span<const double> spectrum, Workspace& ws) const;
  std::pair<double, double> temperature_range(std::span<const double> spectrum) const;

  SpectralGrid grid_;
  AmbientSpectra ambient_;
  SlotConfig config_;
  SplineBasis basis_;
  BandedBasis phi_;
  std::vector<double> weights_;
  Eigen::MatrixXd penalty_gram_;  // lambda D'D
};

/// Free-function forms.
RadianceSpectrum model_spectrum(double temperature, double view_factor, std::span<const double> beta,
                                const AmbientSpectra& ambient, const SplineBasis& basis, const SpectralGrid& grid);

BetaSolution solve_beta_subproblem(double temperature, double view_factor, std::span<const double> spectrum,
                                   const AmbientSpectra& ambient, const SpectralGrid& grid, const SlotConfig& config);

PixelSolution outer_search(std::span<const double> spectrum, const AmbientSpectra& ambient, const SpectralGrid& grid,
                           const SlotConfig& config);

struct TexResult {
  int height = 0;
  int width = 0;
  int basis_count = 0;
  SlotConfig config;
  std::vector<double> temperature;    // H*W
  std::vector<double> view_factor;    // H*W
  std::vector<double> beta;           // H*W*K
  std::vector<double> objective;      // H*W
  std::vector<double> residual_norm;  // H*W
  std::vector<int> refine_iterations;
  std::vector<int> active_bounds;
  std::vector<unsigned char> v_identifiable;
  std::vector<unsigned char> emissivity_at_bound;

  std::size_t pixels() const noexcept { return temperature.size(); }
  std::span<const double> pixel_beta(std::size_t p) const {
    return {beta.data() + p * static_cast<std::size_t>(basis_count), static_cast<std::size_t>(basis_count)};
  }
};

/// Per-pixel outer_search. Output is identical for any thread count.
TexResult decompose_cube(const HyperCube& cube, const AmbientSpectra& ambient, const SlotConfig& config,
                         Exec exec = Exec::Parallel);

std::vector<TexResult> lambda_sweep(const HyperCube& cube, const AmbientSpectra& ambient, const SlotConfig& config,
                                    std::span<const double> lambdas, Exec exec = Exec::Parallel);

}  // namespace tag

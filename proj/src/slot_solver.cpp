#include "tag/slot_solver.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <string>

#include "tag/error.hpp"

namespace tag {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kInvPhi = 0.6180339887498949;  // (sqrt(5) - 1) / 2

struct GoldenResult {
  double x;
  double f;
};

// Golden-section search for a minimum of f on [a, b]; stops once the bracket
// is narrower than tol.
template <class F>
GoldenResult golden_section(F&& f, double a, double b, double tol) {
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? GoldenResult{c, fc} : GoldenResult{d, fd};
}

std::vector<double> axis(double lo, double hi, double step) {
  std::vector<double> out;
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j) out.push_back(std::min(lo + static_cast<double>(j) * step, hi));
  return out;
}

}  // namespace

void SlotConfig::validate(std::size_t bands) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw config_error("lambda must be a finite value >= 0");
  if (basis_count < 4) throw config_error("basis_count must be >= 4");
  if (t_lo.has_value() != t_hi.has_value()) throw config_error("t_lo and t_hi must be given together");
  if (t_lo && !(*t_lo > 0.0 && *t_lo < *t_hi)) throw config_error("temperature range requires 0 < t_lo < t_hi");
  if (!(t_halfwidth > 0.0)) throw config_error("t_halfwidth must be positive");
  if (!(t_step > 0.0)) throw config_error("t_step must be positive");
  if (!(v_step > 0.0 && v_step <= 1.0)) throw config_error("v_step must lie in (0, 1]");
  if (!(refine_tolerance > 0.0)) throw config_error("refine_tolerance must be positive");
  if (max_refine_iterations < 0) throw config_error("max_refine_iterations must be >= 0");
  if (!band_weights.empty()) {
    if (band_weights.size() != bands) throw config_error("band_weights length does not match the band count");
    for (double w : band_weights)
      if (!(w >= 0.0) || !std::isfinite(w)) throw config_error("band_weights must be finite and >= 0");
  }
}

struct SlotProblem::Workspace {
  std::size_t n = 0;
  int k = 0;
  double cached_t = -1.0;
  std::vector<double> planck, dplanck, texture, d, y;
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear, beta;
  Eigen::LLT<Eigen::MatrixXd> llt;

  Workspace(std::size_t bands, int count)
      : n(bands), k(count), planck(bands), dplanck(bands), texture(bands), d(bands), y(bands),
        hessian(count, count), linear(count), beta(count), llt(count) {}
};

SlotProblem::SlotProblem(const SpectralGrid& grid, const AmbientSpectra& ambient, const SlotConfig& config)
    : grid_(grid), ambient_(ambient), config_(config) {
  if (ambient.size() != grid.size())
    throw invalid_argument("ambient spectra have " + std::to_string(ambient.size()) + " bands, grid has " +
                           std::to_string(grid.size()));
  config_.validate(grid.size());
  basis_ = make_basis(grid, config.basis_count);
  phi_ = eval_basis_banded(basis_, grid);
  weights_ = config.band_weights.empty() ? std::vector<double>(grid.size(), 1.0) : config.band_weights;
  const Eigen::MatrixXd dmat = second_difference_operator(config.basis_count);
  penalty_gram_ = config.lambda * (dmat.transpose() * dmat);
}

RadianceSpectrum SlotProblem::model_spectrum(double temperature, double view_factor,
                                             std::span<const double> beta) const {
  if (beta.size() != static_cast<std::size_t>(basis_.size())) throw invalid_argument("beta length != K");
  RadianceSpectrum m;
  m.values.resize(grid_.size());
  texture_into(view_factor, ambient_, m.values);
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    const double x = m.values[i];
    m.values[i] = x + (planck(temperature, grid_[i]) - x) * phi_.dot(i, beta);
  }
  return m;
}

void SlotProblem::normal_equations(double temperature, double view_factor, std::span<const double> spectrum,
                                   Eigen::MatrixXd& hessian, Eigen::VectorXd& linear) const {
  Workspace ws(grid_.size(), basis_.size());
  solve_beta_impl(temperature, view_factor, spectrum, ws, false);
  // solve_beta_impl leaves the assembled system in the workspace.
  hessian = ws.hessian;
  linear = ws.linear;
}

BetaSolution SlotProblem::solve_beta_impl(double temperature, double view_factor, std::span<const double> spectrum,
                                          Workspace& ws, bool throw_on_singular) const {
  const std::size_t n = ws.n;
  const int k = ws.k;
  if (spectrum.size() != n) throw invalid_argument("spectrum length does not match the grid");
  if (temperature != ws.cached_t) {
    planck_into(temperature, grid_.values(), ws.planck);
    ws.cached_t = temperature;
  }
  texture_into(view_factor, ambient_, ws.texture);

  ws.hessian = penalty_gram_;
  ws.linear.setZero();
  for (std::size_t i = 0; i < n; ++i) {
    ws.d[i] = ws.planck[i] - ws.texture[i];
    ws.y[i] = spectrum[i] - ws.texture[i];
    const double wd = weights_[i] * ws.d[i];
    const double c = wd * ws.d[i];
    const double cy = wd * ws.y[i];
    const int f = phi_.first[i];
    const auto& pw = phi_.weights[i];
    for (int a = 0; a < 4; ++a) {
      ws.linear[f + a] += cy * pw[a];
      const double ca = c * pw[a];
      for (int b = 0; b < 4; ++b) ws.hessian(f + a, f + b) += ca * pw[b];
    }
  }

  BetaSolution sol;
  ws.llt.compute(ws.hessian);
  bool singular = ws.llt.info() != Eigen::Success;
  if (!singular) {
    const auto& l = ws.llt.matrixLLT();
    const double hmax = ws.hessian.diagonal().maxCoeff();
    for (int i = 0; i < k; ++i)
      if (!(l(i, i) * l(i, i) > 1e-13 * hmax)) singular = true;
  }
  if (singular) {
    if (throw_on_singular)
      throw numerical_error(config_.lambda == 0.0
                                ? "ill-posed emissivity subproblem: design matrix is rank deficient; use lambda > 0"
                                : "singular emissivity subproblem at T=" + std::to_string(temperature) +
                                      ", V=" + std::to_string(view_factor));
    sol.objective = kInf;
    return sol;
  }
  ws.beta = ws.llt.solve(ws.linear);

  bool feasible = true;
  for (int i = 0; i < k; ++i)
    if (ws.beta[i] < 0.0 || ws.beta[i] > 1.0) feasible = false;
  if (!feasible) {
    Eigen::VectorXd start = ws.beta.cwiseMax(0.0).cwiseMin(1.0);
    std::vector<Bound> working(static_cast<std::size_t>(k), Bound::Free);
    for (int i = 0; i < k; ++i) {
      if (ws.beta[i] < 0.0) working[i] = Bound::Lower;
      if (ws.beta[i] > 1.0) working[i] = Bound::Upper;
    }
    auto qp = solve_box_qp(ws.hessian, ws.linear, 0.0, 1.0, std::move(start), std::move(working));
    ws.beta = qp.x;
    sol.qp_iterations = qp.iterations;
  }

  sol.beta.assign(ws.beta.data(), ws.beta.data() + k);
  double data = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ws.d[i] * phi_.dot(i, sol.beta) - ws.y[i];
    data += weights_[i] * r * r;
  }
  sol.data_term = 0.5 * data;
  sol.penalty = 0.5 * config_.lambda * second_difference_norm2(sol.beta);
  sol.objective = sol.data_term + sol.penalty;
  for (double b : sol.beta)
    if (b <= 0.0 || b >= 1.0) ++sol.active_bounds;
  return sol;
}

BetaSolution SlotProblem::solve_beta(double temperature, double view_factor,
                                     std::span<const double> spectrum) const {
  if (!(temperature > 0.0)) throw invalid_argument("temperature must be positive");
  Workspace ws(grid_.size(), basis_.size());
  return solve_beta_impl(temperature, view_factor, spectrum, ws, true);
}

BetaSolution SlotProblem::solve_beta_from(double temperature, double view_factor, std::span<const double> spectrum,
                                          const Eigen::VectorXd& start, const std::vector<Bound>& working) const {
  Eigen::MatrixXd h;
  Eigen::VectorXd g;
  normal_equations(temperature, view_factor, spectrum, h, g);
  const auto qp = solve_box_qp(h, g, 0.0, 1.0, start, working);
  BetaSolution sol;
  sol.beta.assign(qp.x.data(), qp.x.data() + qp.x.size());
  sol.qp_iterations = qp.iterations;
  const auto m = model_spectrum(temperature, view_factor, sol.beta);
  double data = 0.0;
  for (std::size_t i = 0; i < grid_.size(); ++i) data += weights_[i] * (m[i] - spectrum[i]) * (m[i] - spectrum[i]);
  sol.data_term = 0.5 * data;
  sol.penalty = 0.5 * config_.lambda * second_difference_norm2(sol.beta);
  sol.objective = sol.data_term + sol.penalty;
  for (double b : sol.beta)
    if (b <= 0.0 || b >= 1.0) ++sol.active_bounds;
  return sol;
}

double SlotProblem::evaluate(double temperature, double view_factor, std::span<const double> spectrum,
                             Workspace& ws) const {
  return solve_beta_impl(temperature, view_factor, spectrum, ws, false).objective;
}

double SlotProblem::profiled_objective(double temperature, double view_factor,
                                       std::span<const double> spectrum) const {
  return solve_beta(temperature, view_factor, spectrum).objective;
}

double SlotProblem::profiled_dT(double temperature, double view_factor, std::span<const double> spectrum) const {
  const auto sol = solve_beta(temperature, view_factor, spectrum);
  const auto m = model_spectrum(temperature, view_factor, sol.beta);
  double g = 0.0;
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    const double e = phi_.dot(i, sol.beta);
    g += weights_[i] * (m[i] - spectrum[i]) * e * planck_dT(temperature, grid_[i]);
  }
  return g;
}

std::pair<double, double> SlotProblem::temperature_range(std::span<const double> spectrum) const {
  if (config_.t_lo) return {*config_.t_lo, *config_.t_hi};
  const auto it = std::max_element(spectrum.begin(), spectrum.end());
  const auto band = static_cast<std::size_t>(it - spectrum.begin());
  if (!(*it > 0.0)) throw numerical_error("pixel has no positive radiance; cannot seed the temperature search");
  const double tb = brightness_temperature(*it, grid_[band]);
  return {std::max(tb - config_.t_halfwidth, 1.0), tb + config_.t_halfwidth};
}

PixelSolution SlotProblem::outer_search(std::span<const double> spectrum) const {
  if (spectrum.size() != grid_.size()) throw invalid_argument("spectrum length does not match the grid");
  for (double s : spectrum)
    if (!std::isfinite(s)) throw invalid_argument("spectrum contains a non-finite sample");

  Workspace ws(grid_.size(), basis_.size());
  const auto [t_lo, t_hi] = temperature_range(spectrum);
  const auto t_axis = axis(t_lo, t_hi, config_.t_step);
  const auto v_axis = axis(0.0, 1.0, config_.v_step);
  if (t_axis.empty() || v_axis.empty()) throw config_error("empty search grid");

  PixelSolution out;
  double best_t = t_axis.front(), best_v = v_axis.front(), best = kInf;
  // T outer, V inner, strict improvement: exact ties keep the smaller T, then V.
  for (double t : t_axis)
    for (double v : v_axis) {
      const double j = evaluate(t, v, spectrum, ws);
      ++out.evaluations;
      if (j < best) {
        best = j;
        best_t = t;
        best_v = v;
      }
    }
  if (!std::isfinite(best)) throw numerical_error("every grid cell produced a singular emissivity subproblem");

  auto eval = [&](double t, double v) {
    ++out.evaluations;
    return evaluate(t, v, spectrum, ws);
  };

  const double tau = config_.refine_tolerance * best;
  double ht = config_.t_step, hv = config_.v_step;
  if (config_.record_history) out.objective_history.push_back(best);

  for (int it = 0; it < config_.max_refine_iterations && best > 0.0; ++it) {
    const double start_obj = best;
    const double t0 = best_t, v0 = best_v;

    {
      const double a = std::max(best_t - ht, t_lo), b = std::min(best_t + ht, t_hi);
      const auto g = golden_section([&](double t) { return eval(t, best_v); }, a, b,
                                    std::max(1e-3 * (b - a), 1e-10));
      if (g.f < best) {
        best = g.f;
        best_t = g.x;
      }
    }
    {
      const double a = std::max(best_v - hv, 0.0), b = std::min(best_v + hv, 1.0);
      const auto g = golden_section([&](double v) { return eval(best_t, v); }, a, b,
                                    std::max(1e-3 * (b - a), 1e-12));
      if (g.f < best) {
        best = g.f;
        best_v = g.x;
      }
    }

    // Pattern move along this sweep's net displacement; speeds up progress
    // along the narrow T-V valleys the near-degeneracy produces.
    const double dt = best_t - t0, dv = best_v - v0;
    if (dt != 0.0 || dv != 0.0) {
      double s_max = 64.0;
      if (dt > 0.0) s_max = std::min(s_max, (t_hi - best_t) / dt);
      if (dt < 0.0) s_max = std::min(s_max, (t_lo - best_t) / dt);
      if (dv > 0.0) s_max = std::min(s_max, (1.0 - best_v) / dv);
      if (dv < 0.0) s_max = std::min(s_max, (0.0 - best_v) / dv);
      if (s_max > 0.0) {
        const double bt = best_t, bv = best_v;
        auto along = [&](double s) {
          return eval(std::clamp(bt + s * dt, t_lo, t_hi), std::clamp(bv + s * dv, 0.0, 1.0));
        };
        // Expand until the objective rises or the box is hit, then bisect by golden section.
        double lo = 0.0, mid = 0.0, f_mid = best;
        double hi = std::min(1.0, s_max);
        double f_hi = along(hi);
        while (f_hi < f_mid && hi < s_max) {
          lo = mid;
          mid = hi;
          f_mid = f_hi;
          hi = std::min(2.0 * hi, s_max);
          f_hi = along(hi);
        }
        GoldenResult g{hi, f_hi};
        if (f_mid < f_hi || hi > mid) {
          const auto gs = golden_section(along, lo, hi, std::max(1e-3 * (hi - lo), 1e-12));
          if (gs.f < g.f) g = gs;
        }
        if (f_mid < g.f) g = {mid, f_mid};
        if (g.f < best) {
          best = g.f;
          best_t = std::clamp(bt + g.x * dt, t_lo, t_hi);
          best_v = std::clamp(bv + g.x * dv, 0.0, 1.0);
        }
      }
    }

    ++out.refine_iterations;
    if (config_.record_history) out.objective_history.push_back(best);
    const double moved_t = std::abs(best_t - t0), moved_v = std::abs(best_v - v0);
    ht = std::min(std::max(0.5 * ht, 2.0 * moved_t), 4.0 * config_.t_step);
    hv = std::min(std::max(0.5 * hv, 2.0 * moved_v), 4.0 * config_.v_step);
    if (start_obj - best < tau) break;
    if (ht < 1e-9 && hv < 1e-11) break;
  }

  const auto sol = solve_beta_impl(best_t, best_v, spectrum, ws, true);
  out.temperature = best_t;
  out.view_factor = best_v;
  out.beta = sol.beta;
  out.objective = sol.objective;
  out.data_term = sol.data_term;
  out.penalty = sol.penalty;
  out.residual_norm = std::sqrt(2.0 * sol.data_term);
  out.active_bounds = sol.active_bounds;

  // Texture sensitivity ||dM/dV||_w / ||M||_w = ||(1 - e)(S_sky - S_g)|| / ||M||.
  double sens = 0.0, norm_m = 0.0;
  const auto m = model_spectrum(best_t, best_v, sol.beta);
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    const double e = phi_.dot(i, sol.beta);
    const double dm = (1.0 - e) * (ambient_.sky[i] - ambient_.ground[i]);
    sens += weights_[i] * dm * dm;
    norm_m += weights_[i] * m[i] * m[i];
    if (e <= 1e-9 || e >= 1.0 - 1e-9) out.emissivity_at_bound = true;
  }
  out.v_sensitivity = norm_m > 0.0 ? std::sqrt(sens / norm_m) : 0.0;
  out.v_identifiable = out.v_sensitivity >= config_.v_sensitivity_threshold;
  return out;
}

RadianceSpectrum model_spectrum(double temperature, double view_factor, std::span<const double> beta,
                                const AmbientSpectra& ambient, const SplineBasis& basis, const SpectralGrid& grid) {
  if (beta.size() != static_cast<std::size_t>(basis.size())) throw invalid_argument("beta length != K");
  RadianceSpectrum m = texture_radiance(view_factor, ambient);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = m.values[i];
    m.values[i] = x + (planck(temperature, grid[i]) - x) * eval_spline(basis, beta, grid[i]);
  }
  return m;
}

BetaSolution solve_beta_subproblem(double temperature, double view_factor, std::span<const double> spectrum,
                                   const AmbientSpectra& ambient, const SpectralGrid& grid, const SlotConfig& config) {
  return SlotProblem(grid, ambient, config).solve_beta(temperature, view_factor, spectrum);
}

PixelSolution outer_search(std::span<const double> spectrum, const AmbientSpectra& ambient, const SpectralGrid& grid,
                           const SlotConfig& config) {
  return SlotProblem(grid, ambient, config).outer_search(spectrum);
}

TexResult decompose_cube(const HyperCube& cube, const AmbientSpectra& ambient, const SlotConfig& config, Exec exec) {
  if (cube.bands() != ambient.size())
    throw invalid_argument("cube has " + std::to_string(cube.bands()) + " bands, ambient spectra have " +
                           std::to_string(ambient.size()));
  const SlotProblem problem(cube.grid, ambient, config);
  const std::size_t n = cube.pixels();
  const auto k = static_cast<std::size_t>(config.basis_count);

  TexResult res;
  res.height = cube.height;
  res.width = cube.width;
  res.basis_count = config.basis_count;
  res.config = config;
  res.temperature.resize(n);
  res.view_factor.resize(n);
  res.beta.resize(n * k);
  res.objective.resize(n);
  res.residual_norm.resize(n);
  res.refine_iterations.resize(n);
  res.active_bounds.resize(n);
  res.v_identifiable.resize(n);
  res.emissivity_at_bound.resize(n);

  std::exception_ptr failure;
  std::size_t failed_pixel = n;
  std::mutex failure_mutex;

  auto kernel = [&](std::size_t p) {
    try {
      const auto sol = problem.outer_search(cube.pixel(p));
      res.temperature[p] = sol.temperature;
      res.view_factor[p] = sol.view_factor;
      std::copy(sol.beta.begin(), sol.beta.end(), res.beta.begin() + static_cast<std::ptrdiff_t>(p * k));
      res.objective[p] = sol.objective;
      res.residual_norm[p] = sol.residual_norm;
      res.refine_iterations[p] = sol.refine_iterations;
      res.active_bounds[p] = sol.active_bounds;
      res.v_identifiable[p] = sol.v_identifiable ? 1 : 0;
      res.emissivity_at_bound[p] = sol.emissivity_at_bound ? 1 : 0;
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (p < failed_pixel) {
        failed_pixel = p;
        failure = std::current_exception();
      }
    }
  };

  const auto count = static_cast<std::ptrdiff_t>(n);
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t p = 0; p < count; ++p) kernel(static_cast<std::size_t>(p));
  } else {
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t p = 0; p < count; ++p) kernel(static_cast<std::size_t>(p));
  }
  if (failure) std::rethrow_exception(failure);
  return res;
}

std::vector<TexResult> lambda_sweep(const HyperCube& cube, const AmbientSpectra& ambient, const SlotConfig& config,
                                    std::span<const double> lambdas, Exec exec) {
  if (lambdas.empty()) throw invalid_argument("lambda sweep needs at least one value");
  std::vector<TexResult> out;
  out.reserve(lambdas.size());
  for (double lambda : lambdas) {
    SlotConfig c = config;
    c.lambda = lambda;
    out.push_back(decompose_cube(cube, ambient, c, exec));
  }
  return out;
}

}  // namespace tag

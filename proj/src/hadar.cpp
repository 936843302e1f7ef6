#include "tag/hadar.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <string>

#include <Eigen/Dense>

#include "tag/bspline.hpp"
#include "tag/error.hpp"

namespace tag {

namespace {

constexpr double kInvPhi = 0.6180339887498949;

struct Closed {
  double v;
  double residual;
  bool identifiable;
};

// Closed-form V at fixed T: the model is affine in V.
Closed best_view_factor(std::span<const double> s, std::span<const double> e, const AmbientSpectra& ambient,
                        std::span<const double> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double c = (1.0 - e[i]) * (ambient.sky[i] - ambient.ground[i]);
    num += c * (s[i] - e[i] * b[i] - (1.0 - e[i]) * ambient.ground[i]);
    den += c * c;
  }
  Closed out{0.5, 0.0, den > 0.0};
  if (out.identifiable) out.v = std::clamp(num / den, 0.0, 1.0);
  double r2 = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double x = out.v * ambient.sky[i] + (1.0 - out.v) * ambient.ground[i];
    const double r = s[i] - e[i] * b[i] - (1.0 - e[i]) * x;
    r2 += r * r;
  }
  out.residual = 0.5 * r2;
  return out;
}

}  // namespace

void MaterialLibrary::validate(std::size_t bands) const {
  if (entries.empty()) throw invalid_argument("material library is empty");
  for (const auto& entry : entries) {
    if (entry.emissivity.size() != bands)
      throw invalid_argument("library entry '" + entry.name + "' has " + std::to_string(entry.emissivity.size()) +
                             " bands, expected " + std::to_string(bands));
    for (double e : entry.emissivity)
      if (!(e > 0.0 && e < 1.0)) throw invalid_argument("library entry '" + entry.name + "' leaves (0, 1)");
  }
}

double material_residual(std::span<const double> spectrum, std::span<const double> emissivity,
                         const AmbientSpectra& ambient, const SpectralGrid& grid, double temperature,
                         double view_factor) {
  double r2 = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = view_factor * ambient.sky[i] + (1.0 - view_factor) * ambient.ground[i];
    const double r = spectrum[i] - emissivity[i] * planck(temperature, grid[i]) - (1.0 - emissivity[i]) * x;
    r2 += r * r;
  }
  return 0.5 * r2;
}

MaterialFit fit_material(std::span<const double> spectrum, std::span<const double> emissivity,
                         const AmbientSpectra& ambient, const SpectralGrid& grid, const HadarConfig& config) {
  const std::size_t n = grid.size();
  if (spectrum.size() != n || emissivity.size() != n || ambient.size() != n)
    throw invalid_argument("spectrum, emissivity and ambient must share the grid");
  for (double e : emissivity)
    if (!(e > 0.0 && e < 1.0)) throw invalid_argument("library emissivity must lie in (0, 1)");

  double t_lo, t_hi;
  if (config.t_lo) {
    t_lo = *config.t_lo;
    t_hi = *config.t_hi;
  } else {
    const auto it = std::max_element(spectrum.begin(), spectrum.end());
    if (!(*it > 0.0)) throw numerical_error("pixel has no positive radiance");
    const double tb = brightness_temperature(*it, grid[static_cast<std::size_t>(it - spectrum.begin())]);
    t_lo = std::max(tb - config.t_halfwidth, 1.0);
    t_hi = tb + config.t_halfwidth;
  }

  std::vector<double> b(n);
  auto at = [&](double t) {
    planck_into(t, grid.values(), b);
    return best_view_factor(spectrum, emissivity, ambient, b);
  };

  double best_t = t_lo;
  Closed best = at(t_lo);
  const auto steps = static_cast<int>(std::floor((t_hi - t_lo) / config.t_step + 1e-9));
  for (int j = 1; j <= steps; ++j) {
    const double t = t_lo + j * config.t_step;
    const Closed c = at(t);
    if (c.residual < best.residual) {
      best = c;
      best_t = t;
    }
  }

  // Golden section around the best grid node.
  double a = std::max(best_t - config.t_step, t_lo), bnd = std::min(best_t + config.t_step, t_hi);
  double c = bnd - kInvPhi * (bnd - a), d = a + kInvPhi * (bnd - a);
  Closed fc = at(c), fd = at(d);
  while (bnd - a > config.t_tolerance) {
    if (fc.residual <= fd.residual) {
      bnd = d;
      d = c;
      fd = fc;
      c = bnd - kInvPhi * (bnd - a);
      fc = at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (bnd - a);
      fd = at(d);
    }
  }
  if (fc.residual < best.residual) {
    best = fc;
    best_t = c;
  }
  if (fd.residual < best.residual) {
    best = fd;
    best_t = d;
  }
  return MaterialFit{best_t, best.v, best.residual, best.identifiable};
}

Classification classify_pixel(std::span<const double> spectrum, const MaterialLibrary& library,
                              const AmbientSpectra& ambient, const SpectralGrid& grid, const HadarConfig& config) {
  if (library.entries.empty()) throw invalid_argument("material library is empty");
  Classification out;
  for (std::size_t m = 0; m < library.size(); ++m) {
    const auto fit = fit_material(spectrum, library.entries[m].emissivity, ambient, grid, config);
    if (m == 0 || fit.residual < out.fit.residual) {
      out.index = static_cast<int>(m);
      out.fit = fit;
    }
  }
  return out;
}

namespace {

double quantile(std::vector<double>& v, double q) {
  // Linear interpolation between order statistics.
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

LibraryEstimate estimate_library_emissivity(const HyperCube& cube, std::span<const unsigned char> mask,
                                            const AmbientSpectra& ambient, const TesConfig& config) {
  const std::size_t n = cube.bands();
  if (ambient.size() != n) throw invalid_argument("ambient spectra do not match the cube grid");
  if (mask.size() != cube.pixels()) throw invalid_argument("mask size does not match the cube");
  if (!(config.max_emissivity > 0.0 && config.max_emissivity <= 1.0))
    throw invalid_argument("max_emissivity must lie in (0, 1]");

  std::vector<std::vector<double>> samples(n);
  std::vector<double> x(n), b(n), e(n);
  const auto v_count = static_cast<int>(std::floor(1.0 / config.v_step + 1e-9));
  for (std::size_t p = 0; p < cube.pixels(); ++p) {
    if (!mask[p]) continue;
    const auto s = cube.pixel(p);

    double best_rough = std::numeric_limits<double>::infinity();
    double best_v = 0.0, best_t = 0.0;
    for (int j = 0; j <= v_count; ++j) {
      const double v = std::min(j * config.v_step, 1.0);
      texture_into(v, ambient, x);
      // NEM: every band's temperature assuming e = e_max; keep the hottest.
      double t = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double corrected = (s[i] - (1.0 - config.max_emissivity) * x[i]) / config.max_emissivity;
        if (corrected > 0.0) t = std::max(t, brightness_temperature(corrected, cube.grid[i]));
      }
      if (!(t > 0.0)) continue;
      planck_into(t, cube.grid.values(), b);
      for (std::size_t i = 0; i < n; ++i) e[i] = (s[i] - x[i]) / (b[i] - x[i]);
      double rough = 0.0;
      for (std::size_t i = 0; i + 2 < n; ++i) {
        const double d2 = e[i] - 2.0 * e[i + 1] + e[i + 2];
        rough += d2 * d2;
      }
      if (rough < best_rough) {
        best_rough = rough;
        best_v = v;
        best_t = t;
      }
    }
    if (!(best_t > 0.0)) continue;

    texture_into(best_v, ambient, x);
    planck_into(best_t, cube.grid.values(), b);
    for (std::size_t i = 0; i < n; ++i) {
      const double contrast = b[i] - x[i];
      if (std::abs(contrast) <= 1e-6 * std::max(std::abs(b[i]), std::abs(x[i]))) continue;
      samples[i].push_back(std::clamp((s[i] - x[i]) / contrast, config.clip_lo, config.clip_hi));
    }
  }

  LibraryEstimate out;
  out.emissivity.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.iqr.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (samples[i].empty()) {
      out.excluded_bands.push_back(static_cast<int>(i));
      continue;
    }
    out.emissivity[i] = quantile(samples[i], 0.5);
    out.iqr[i] = quantile(samples[i], 0.75) - quantile(samples[i], 0.25);
  }
  if (out.excluded_bands.size() == n) throw invalid_argument("mask selects no usable pixel");

  if (!out.excluded_bands.empty()) {
    // Refill excluded bands from a least-squares spline through the valid ones.
    const auto basis = make_basis(cube.grid, std::min<int>(config.basis_count, static_cast<int>(n - out.excluded_bands.size())));
    const Eigen::MatrixXd phi = eval_basis_matrix(basis, cube.grid);
    std::vector<Eigen::Index> valid;
    for (std::size_t i = 0; i < n; ++i)
      if (!std::isnan(out.emissivity[i])) valid.push_back(static_cast<Eigen::Index>(i));
    Eigen::MatrixXd a(static_cast<Eigen::Index>(valid.size()), basis.size());
    Eigen::VectorXd y(static_cast<Eigen::Index>(valid.size()));
    for (std::size_t r = 0; r < valid.size(); ++r) {
      a.row(static_cast<Eigen::Index>(r)) = phi.row(valid[r]);
      y[static_cast<Eigen::Index>(r)] = out.emissivity[static_cast<std::size_t>(valid[r])];
    }
    const Eigen::VectorXd coef = a.completeOrthogonalDecomposition().solve(y);
    for (int band : out.excluded_bands)
      out.emissivity[static_cast<std::size_t>(band)] =
          std::clamp(phi.row(band).dot(coef), config.clip_lo, config.clip_hi);
  }
  return out;
}

HadarResult decompose_cube_hadar(const HyperCube& cube, const MaterialLibrary& library, const AmbientSpectra& ambient,
                                 const HadarConfig& config, Exec exec) {
  if (ambient.size() != cube.bands())
    throw invalid_argument("cube has " + std::to_string(cube.bands()) + " bands, ambient spectra have " +
                           std::to_string(ambient.size()));
  library.validate(cube.bands());

  HadarResult res;
  res.height = cube.height;
  res.width = cube.width;
  const std::size_t n = cube.pixels();
  res.material.resize(n);
  res.temperature.resize(n);
  res.view_factor.resize(n);
  res.residual.resize(n);

  std::exception_ptr failure;
  std::size_t failed_pixel = n;
  std::mutex failure_mutex;
  auto kernel = [&](std::size_t p) {
    try {
      const auto c = classify_pixel(cube.pixel(p), library, ambient, cube.grid, config);
      res.material[p] = c.index;
      res.temperature[p] = c.fit.temperature;
      res.view_factor[p] = c.fit.view_factor;
      res.residual[p] = c.fit.residual;
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
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t p = 0; p < count; ++p) kernel(static_cast<std::size_t>(p));
  }
  if (failure) std::rethrow_exception(failure);
  return res;
}

}  // namespace tag

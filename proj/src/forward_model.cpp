#include "tag/forward_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "tag/error.hpp"

namespace tag {

AmbientSpectra AmbientSpectra::make(RadianceSpectrum sky, RadianceSpectrum ground) {
  if (sky.size() != ground.size()) throw invalid_argument("sky and ground spectra differ in length");
  if (sky.size() < 2) throw invalid_argument("ambient spectra need at least 2 bands");
  for (std::size_t i = 0; i < sky.size(); ++i)
    if (!std::isfinite(sky[i]) || !std::isfinite(ground[i]))
      throw invalid_argument("ambient spectrum has a non-finite value at band " + std::to_string(i));
  return AmbientSpectra{std::move(sky), std::move(ground)};
}

bool AmbientSpectra::degenerate() const {
  for (std::size_t i = 0; i < sky.size(); ++i)
    if (sky[i] != ground[i]) return false;
  return true;
}

AmbientSpectra default_ambient(const SpectralGrid& grid, double sky_temperature, double ground_temperature) {
  RadianceSpectrum sky = planck_radiance(sky_temperature, grid);
  RadianceSpectrum ground = planck_radiance(ground_temperature, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    sky.values[i] *= 0.98;
    ground.values[i] = 0.95 * ground.values[i] + 0.05 * sky.values[i];
  }
  return AmbientSpectra::make(std::move(sky), std::move(ground));
}

void texture_into(double v, const AmbientSpectra& ambient, std::span<double> out) {
  if (!(v >= 0.0 && v <= 1.0)) throw invalid_argument("view factor must lie in [0, 1]");
  for (std::size_t i = 0; i < ambient.size(); ++i) out[i] = v * ambient.sky[i] + (1.0 - v) * ambient.ground[i];
}

RadianceSpectrum texture_radiance(double v, const AmbientSpectra& ambient) {
  RadianceSpectrum x;
  x.values.resize(ambient.size());
  texture_into(v, ambient, x.values);
  return x;
}

namespace {

void check_truth(const PixelTruth& truth, std::size_t bands) {
  if (!(truth.temperature > 0.0)) throw invalid_argument("pixel temperature must be positive");
  if (!(truth.view_factor >= 0.0 && truth.view_factor <= 1.0))
    throw invalid_argument("pixel view factor must lie in [0, 1]");
  if (truth.emissivity.size() != bands) throw invalid_argument("emissivity length does not match the grid");
  for (double e : truth.emissivity)
    if (!(e >= 0.0 && e <= 1.0)) throw invalid_argument("emissivity must lie in [0, 1]");
}

}  // namespace

RadianceSpectrum render_pixel(const PixelTruth& truth, const AmbientSpectra& ambient, const SpectralGrid& grid) {
  if (ambient.size() != grid.size()) throw invalid_argument("ambient spectra do not match the grid");
  check_truth(truth, grid.size());
  RadianceSpectrum s;
  s.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double b = planck(truth.temperature, grid[i]);
    const double x = truth.view_factor * ambient.sky[i] + (1.0 - truth.view_factor) * ambient.ground[i];
    const double e = truth.emissivity[i];
    s.values[i] = e * b + (1.0 - e) * x;
  }
  return s;
}

Counterfactual counterfactual_emissivity(const PixelTruth& truth, double temperature, double view_factor,
                                         const AmbientSpectra& ambient, const SpectralGrid& grid) {
  if (ambient.size() != grid.size()) throw invalid_argument("ambient spectra do not match the grid");
  check_truth(truth, grid.size());
  if (!(temperature > 0.0)) throw invalid_argument("counterfactual temperature must be positive");
  if (!std::isfinite(view_factor)) throw invalid_argument("counterfactual view factor must be finite");

  Counterfactual out;
  out.emissivity.resize(grid.size());
  out.admissible = true;
  const double dv = truth.view_factor - view_factor;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double contrast = ambient.sky[i] - ambient.ground[i];
    const double b = planck(truth.temperature, grid[i]);
    const double b_new = planck(temperature, grid[i]);
    const double den = b_new - ambient.ground[i] - view_factor * contrast;
    const double scale = std::abs(b_new) + std::abs(ambient.ground[i]) + std::abs(ambient.sky[i]);
    if (std::abs(den) <= 1e-14 * scale)
      throw numerical_error("singular counterfactual at band " + std::to_string(i) + " (" + std::to_string(grid[i]) +
                            " cm^-1): B(T') equals the texture radiance");
    // e' - e = [e (B - B') + (1 - e)(V - V') contrast] / den; this form is
    // exactly e when (T', V') = (T, V).
    const double e0 = truth.emissivity[i];
    const double e = e0 + (e0 * (b - b_new) + (1.0 - e0) * dv * contrast) / den;
    out.emissivity[i] = e;
    if (!(e > 0.0 && e < 1.0)) out.admissible = false;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> parametric_beta(const SplineBasis& basis, double mean, double tilt, double dip,
                                    double dip_center, double dip_width) {
  const int k = basis.size();
  const auto g = basis.greville();
  std::vector<double> beta(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const double s = -1.0 + 2.0 * i / (k - 1);
    const double z = (g[i] - dip_center) / dip_width;
    beta[i] = mean + tilt * s - dip * std::exp(-0.5 * z * z);
  }
  return beta;
}

std::span<const double> SyntheticScene::pixel_beta(std::size_t p) const {
  const auto k = static_cast<std::size_t>(basis.size());
  return {beta.data() + p * k, k};
}

std::vector<double> SyntheticScene::pixel_emissivity(std::size_t p) const {
  std::vector<double> e(grid.size());
  const auto b = pixel_beta(p);
  for (std::size_t i = 0; i < grid.size(); ++i) e[i] = eval_spline(basis, b, grid[i]);
  return e;
}

PixelTruth SyntheticScene::pixel_truth(std::size_t p) const {
  return PixelTruth{temperature[p], pixel_emissivity(p), view_factor[p]};
}

namespace {

// Uniform in [0, 1) from raw 64-bit engine output; independent of the
// standard library's distribution implementations.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Sum of low-frequency plane waves, rescaled so max |f| = 1 over the image.
std::vector<double> smooth_field(int h, int w, std::mt19937_64& rng, int waves = 4) {
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::vector<Wave> ws;
  for (int m = 0; m < waves; ++m) {
    const double fx = 0.25 + 1.5 * unit(rng);
    const double fy = 0.25 + 1.5 * unit(rng);
    const double phase = 2.0 * std::numbers::pi * unit(rng);
    const double amp = 0.5 + unit(rng);
    ws.push_back({unit(rng) < 0.5 ? fx : -fx, fy, phase, amp});
  }
  std::vector<double> f(static_cast<std::size_t>(h) * w, 0.0);
  double peak = 0.0;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double v = 0.0;
      for (const auto& wave : ws)
        v += wave.amp * std::cos(2.0 * std::numbers::pi * (wave.fx * c / w + wave.fy * r / h) + wave.phase);
      f[static_cast<std::size_t>(r) * w + c] = v;
      peak = std::max(peak, std::abs(v));
    }
  if (peak > 0.0)
    for (double& v : f) v /= peak;
  return f;
}

bool inside_disc(int r, int c, int h, int w) {
  const double cy = 0.5 * (h - 1), cx = 0.5 * (w - 1);
  const double radius = 0.4 * std::min(h, w);
  const double dy = r - cy, dx = c - cx;
  return dx * dx + dy * dy <= radius * radius;
}

}  // namespace

SyntheticScene make_synthetic_scene(const SceneDescriptor& desc) {
  if (desc.height < 8 || desc.width < 8) throw config_error("scene dimensions must be at least 8x8");
  if (desc.regions.empty()) throw config_error("scene needs at least one region");
  if (!(desc.sigma_intra >= 0.0)) throw config_error("sigma_intra must be >= 0");
  if (!(desc.t_min > 0.0 && desc.t_min <= desc.t_max)) throw config_error("temperature range must satisfy 0 < t_min <= t_max");
  if (!(desc.v_min >= 0.0 && desc.v_min <= desc.v_max && desc.v_max <= 1.0))
    throw config_error("view-factor range must satisfy 0 <= v_min <= v_max <= 1");
  const std::size_t needed_regions = desc.layout == RegionLayout::Single ? 1 : 2;
  if (desc.regions.size() < needed_regions)
    throw config_error("region layout needs " + std::to_string(needed_regions) + " regions");

  SyntheticScene scene;
  scene.height = desc.height;
  scene.width = desc.width;
  scene.grid = wavenumber_grid(desc.grid_start, desc.grid_stop, desc.grid_step);
  scene.basis = make_basis(scene.grid, desc.basis_count);
  scene.regions = desc.regions;
  const int k = scene.basis.size();
  for (const auto& region : desc.regions) {
    if (region.base_beta.size() != static_cast<std::size_t>(k))
      throw config_error("region '" + region.name + "' base_beta has " + std::to_string(region.base_beta.size()) +
                         " coefficients, basis has " + std::to_string(k));
    for (double b : region.base_beta)
      if (!(b > 0.0 && b < 1.0)) throw config_error("region '" + region.name + "' base_beta must lie in (0, 1)");
  }

  const int h = desc.height, w = desc.width;
  const std::size_t n = static_cast<std::size_t>(h) * w;
  std::mt19937_64 rng(desc.seed);

  scene.labels.assign(n, 0);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      int label = 0;
      if (desc.layout == RegionLayout::Split) label = c >= w / 2 ? 1 : 0;
      if (desc.layout == RegionLayout::Disc) label = inside_disc(r, c, h, w) ? 1 : 0;
      scene.labels[static_cast<std::size_t>(r) * w + c] = label;
    }

  const auto t_field = smooth_field(h, w, rng);
  scene.temperature.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    scene.temperature[p] = desc.temperature_pattern == TemperaturePattern::Constant
                               ? 0.5 * (desc.t_min + desc.t_max)
                               : desc.t_min + (desc.t_max - desc.t_min) * 0.5 * (1.0 + t_field[p]);
  }

  // View factor from a surface-orientation map: V = mid + half * n_up.
  scene.view_factor.resize(n);
  const double v_mid = 0.5 * (desc.v_min + desc.v_max);
  const double v_half = 0.5 * (desc.v_max - desc.v_min);
  const double cy = 0.5 * (h - 1), cx = 0.5 * (w - 1);
  const double radius = 0.4 * std::min(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double up = 0.0;
      switch (desc.view_pattern) {
        case ViewPattern::Hemisphere: {
          const double dy = (r - cy) / radius, dx = (c - cx) / radius;
          if (dx * dx + dy * dy < 1.0) up = -dy;  // rows grow downward
          break;
        }
        case ViewPattern::Ramp:
          up = h > 1 ? 1.0 - 2.0 * r / (h - 1) : 0.0;
          break;
        case ViewPattern::Constant:
          break;
      }
      if (desc.v_ripple > 0.0) {
        const double omega = 2.0 * std::numbers::pi / desc.ripple_period;
        up += desc.v_ripple * std::sin(omega * r) * std::cos(omega * c);
      }
      scene.view_factor[static_cast<std::size_t>(r) * w + c] = std::clamp(v_mid + v_half * up, desc.v_min, desc.v_max);
    }

  // Emissivity: base curve plus a smooth spatial perturbation with peak
  // coefficient amplitude exactly sigma_intra.
  scene.beta.resize(n * static_cast<std::size_t>(k));
  const auto fa = smooth_field(h, w, rng);
  const auto fb = smooth_field(h, w, rng);
  const auto fc = smooth_field(h, w, rng);
  const bool curved = desc.intra_shape == IntraShape::Curved;
  std::vector<double> tilt(static_cast<std::size_t>(k)), bump(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    tilt[i] = -1.0 + 2.0 * i / (k - 1);
    bump[i] = 1.0 - tilt[i] * tilt[i];
  }
  double peak = 0.0;
  for (std::size_t p = 0; p < n; ++p)
    for (int i = 0; i < k; ++i)
      peak = std::max(peak, std::abs(fa[p] + fb[p] * tilt[i] + (curved ? fc[p] * bump[i] : 0.0)));
  const double gain = peak > 0.0 ? desc.sigma_intra / peak : 0.0;

  std::size_t clipped_pixels = 0;
  for (std::size_t p = 0; p < n; ++p) {
    const auto& base = desc.regions[static_cast<std::size_t>(scene.labels[p])].base_beta;
    bool clipped = false;
    for (int i = 0; i < k; ++i) {
      double b = base[i];
      if (gain > 0.0) b += gain * (fa[p] + fb[p] * tilt[i] + (curved ? fc[p] * bump[i] : 0.0));
      const double c = std::clamp(b, kEmissivityClip, 1.0 - kEmissivityClip);
      clipped = clipped || c != b;
      scene.beta[p * k + i] = c;
    }
    if (clipped) ++clipped_pixels;
  }
  if (clipped_pixels * 10 > n)
    throw config_error("emissivity perturbation too large: " + std::to_string(clipped_pixels) + " of " +
                       std::to_string(n) + " pixels clipped");
  return scene;
}

HyperCube::HyperCube(int h, int w, SpectralGrid g) : height(h), width(w), grid(std::move(g)) {
  if (h <= 0 || w <= 0) throw invalid_argument("cube dimensions must be positive");
  data.assign(pixels() * bands(), 0.0);
}

namespace {

void render_one(const SyntheticScene& scene, const AmbientSpectra& ambient, const BandedBasis& phi, std::size_t p,
                std::span<double> out) {
  const double t = scene.temperature[p];
  const double v = scene.view_factor[p];
  const auto beta = scene.pixel_beta(p);
  for (std::size_t i = 0; i < scene.grid.size(); ++i) {
    const double b = planck(t, scene.grid[i]);
    const double x = v * ambient.sky[i] + (1.0 - v) * ambient.ground[i];
    const double e = phi.dot(i, beta);
    out[i] = e * b + (1.0 - e) * x;
  }
}

}  // namespace

HyperCube render_scene(const SyntheticScene& scene, const AmbientSpectra& ambient, Exec exec) {
  if (ambient.size() != scene.grid.size()) throw invalid_argument("ambient spectra do not match the scene grid");
  HyperCube cube(scene.height, scene.width, scene.grid);
  const BandedBasis phi = eval_basis_banded(scene.basis, scene.grid);
  const auto n = static_cast<std::ptrdiff_t>(scene.pixels());
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t p = 0; p < n; ++p) render_one(scene, ambient, phi, static_cast<std::size_t>(p), cube.pixel(p));
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < n; ++p) render_one(scene, ambient, phi, static_cast<std::size_t>(p), cube.pixel(p));
  }
  return cube;
}

double cube_rms(const HyperCube& cube) {
  double sum = 0.0;
  for (double v : cube.data) sum += v * v;
  return std::sqrt(sum / static_cast<double>(cube.data.size()));
}

std::vector<double> band_average(const HyperCube& cube) {
  std::vector<double> out(cube.pixels());
  for (std::size_t p = 0; p < cube.pixels(); ++p) {
    double s = 0.0;
    for (double v : cube.pixel(p)) s += v;
    out[p] = s / static_cast<double>(cube.bands());
  }
  return out;
}

}  // namespace tag

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tag/bspline.hpp"
#include "tag/parallel.hpp"
#include "tag/spectral.hpp"

namespace tag {

/// Sky and ground radiance, the two sources of the texture term.
struct AmbientSpectra {
  RadianceSpectrum sky;
  RadianceSpectrum ground;

  static AmbientSpectra make(RadianceSpectrum sky, RadianceSpectrum ground);

  std::size_t size() const noexcept { return sky.size(); }
  /// True when sky == ground in every band, i.e. V cannot be identified.
  bool degenerate() const;
};

/// S_sky = 0.98 B(T_sky), S_g = 0.95 B(T_g) + 0.05 S_sky.
AmbientSpectra default_ambient(const SpectralGrid& grid, double sky_temperature = 260.0,
                               double ground_temperature = 290.0);

struct PixelTruth {
  double temperature = 300.0;
  std::vector<double> emissivity;  // one value per band
  double view_factor = 0.5;
};

/// X = V S_sky + (1 - V) S_g. Throws InvalidArgument for V outside [0, 1].
RadianceSpectrum texture_radiance(double view_factor, const AmbientSpectra& ambient);
void texture_into(double view_factor, const AmbientSpectra& ambient, std::span<double> out);

/// S = e B(T) + (1 - e) X. The closed interval 0 <= e <= 1 is accepted here so
/// the blackbody and mirror limits can be rendered.
RadianceSpectrum render_pixel(const PixelTruth& truth, const AmbientSpectra& ambient, const SpectralGrid& grid);

struct Counterfactual {
  std::vector<double> emissivity;
  bool admissible = false;  // 0 < e' < 1 in every band
};

/// Emissivity e' that reproduces the truth's spectrum at (T', V').
/// Throws NumericalError naming the band when the denominator vanishes.
Counterfactual counterfactual_emissivity(const PixelTruth& truth, double temperature, double view_factor,
                                         const AmbientSpectra& ambient, const SpectralGrid& grid);

// ---------------------------------------------------------------------------
// Synthetic scenes

enum class TemperaturePattern { Smooth, Constant };
enum class ViewPattern { Hemisphere, Ramp, Constant };
enum class RegionLayout { Single, Split, Disc };
enum class IntraShape { Affine, Curved };

struct RegionSpec {
  std::string name;
  std::vector<double> base_beta;  // K coefficients
};

struct SceneDescriptor {
  int height = 64;
  int width = 64;
  std::uint64_t seed = 1;
  double grid_start = 870.0;
  double grid_stop = 1269.0;
  double grid_step = 6.0;
  int basis_count = 12;

  TemperaturePattern temperature_pattern = TemperaturePattern::Smooth;
  double t_min = 295.0;
  double t_max = 310.0;

  ViewPattern view_pattern = ViewPattern::Hemisphere;
  double v_min = 0.05;
  double v_max = 0.95;
  double v_ripple = 0.0;      // amplitude of fine geometric relief
  double ripple_period = 8.0; // pixels

  RegionLayout layout = RegionLayout::Single;
  std::vector<RegionSpec> regions;
  double sigma_intra = 0.0;
  IntraShape intra_shape = IntraShape::Affine;
};

/// K coefficients: mean + tilt * s_k - dip * exp(-((g_k - center)/width)^2 / 2),
/// s_k running linearly from -1 to 1 and g_k the Greville abscissae.
std::vector<double> parametric_beta(const SplineBasis& basis, double mean, double tilt, double dip = 0.0,
                                    double dip_center = 1050.0, double dip_width = 60.0);

struct SyntheticScene {
  int height = 0;
  int width = 0;
  SpectralGrid grid;
  SplineBasis basis;
  std::vector<double> temperature;  // H*W
  std::vector<double> view_factor;  // H*W
  std::vector<double> beta;         // H*W*K
  std::vector<int> labels;          // H*W
  std::vector<RegionSpec> regions;

  std::size_t pixels() const noexcept { return temperature.size(); }
  std::span<const double> pixel_beta(std::size_t p) const;
  std::vector<double> pixel_emissivity(std::size_t p) const;
  PixelTruth pixel_truth(std::size_t p) const;
};

constexpr double kEmissivityClip = 1e-3;

/// Throws Config error for undersized scenes, out-of-range base curves, or
/// when clipping to (eps, 1-eps) touches more than 10% of pixels.
SyntheticScene make_synthetic_scene(const SceneDescriptor& desc);

// ---------------------------------------------------------------------------
// Cubes

struct Provenance {
  bool noisy = false;
  std::uint64_t seed = 0;
  double snr_db = std::numeric_limits<double>::infinity();
  std::string generator = "tag";

  bool operator==(const Provenance&) const = default;
};

/// H x W x N radiance cube, pixel-interleaved in memory.
struct HyperCube {
  int height = 0;
  int width = 0;
  SpectralGrid grid;
  std::vector<double> data;
  Provenance provenance;

  HyperCube() = default;
  HyperCube(int h, int w, SpectralGrid g);

  std::size_t bands() const noexcept { return grid.size(); }
  std::size_t pixels() const noexcept { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
  std::span<double> pixel(std::size_t p) { return {data.data() + p * bands(), bands()}; }
  std::span<const double> pixel(std::size_t p) const { return {data.data() + p * bands(), bands()}; }
  double at(int row, int col, std::size_t band) const {
    return data[(static_cast<std::size_t>(row) * width + col) * bands() + band];
  }
};

HyperCube render_scene(const SyntheticScene& scene, const AmbientSpectra& ambient, Exec exec = Exec::Parallel);

/// Additive zero-mean Gaussian noise with sigma = rms(cube) / 10^(snr/20).
/// Each sample's draw is derived from (seed, row, col, band), so serial and
/// parallel runs agree bit for bit. snr_db = +inf returns the cube unchanged.
HyperCube add_noise(const HyperCube& cube, double snr_db, std::uint64_t seed, Exec exec = Exec::Parallel);

/// Standard normal draw for one (seed, row, col, band) counter.
double counter_normal(std::uint64_t seed, std::uint64_t row, std::uint64_t col, std::uint64_t band);

double cube_rms(const HyperCube& cube);

/// Mean over bands per pixel, the panchromatic image.
std::vector<double> band_average(const HyperCube& cube);

}  // namespace tag

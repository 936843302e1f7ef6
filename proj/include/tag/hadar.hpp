#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tag/forward_model.hpp"

namespace tag {

struct MaterialEntry {
  std::string name;
  std::vector<double> emissivity;  // on the working grid, each value in (0, 1)
};

struct MaterialLibrary {
  std::vector<MaterialEntry> entries;
  bool resampled = false;  // set when curves were interpolated onto the working grid

  std::size_t size() const noexcept { return entries.size(); }
  void validate(std::size_t bands) const;
};

struct HadarConfig {
  // Fixed range when set; otherwise brightness temperature +- t_halfwidth.
  std::optional<double> t_lo;
  std::optional<double> t_hi;
  double t_halfwidth = 20.0;
  double t_step = 1.0;
  double t_tolerance = 1e-7;  // golden-section bracket width, kelvin
};

struct MaterialFit {
  double temperature = 0.0;
  double view_factor = 0.0;
  double residual = 0.0;  // 1/2 sum r^2
  bool v_identifiable = true;
};

/// Fit (T, V) for a fixed emissivity curve. V has a closed form for each T;
/// T is searched on a grid and refined by golden section.
MaterialFit fit_material(std::span<const double> spectrum, std::span<const double> emissivity,
                         const AmbientSpectra& ambient, const SpectralGrid& grid, const HadarConfig& config = {});

/// Residual at fixed (T, V) for a fixed curve.
double material_residual(std::span<const double> spectrum, std::span<const double> emissivity,
                         const AmbientSpectra& ambient, const SpectralGrid& grid, double temperature,
                         double view_factor);

struct Classification {
  int index = 0;
  MaterialFit fit;
};

/// Minimum-residual library entry; ties go to the lower index.
Classification classify_pixel(std::span<const double> spectrum, const MaterialLibrary& library,
                              const AmbientSpectra& ambient, const SpectralGrid& grid, const HadarConfig& config = {});

struct LibraryEstimate {
  std::vector<double> emissivity;  // bandwise median over the mask
  std::vector<double> iqr;         // bandwise inter-quartile range over the mask
  std::vector<int> excluded_bands; // bands refilled from a spline fit
};

struct TesConfig {
  double max_emissivity = 1.0;  // NEM assumption for the brightest band
  double v_step = 0.05;
  double clip_lo = 0.01;
  double clip_hi = 0.999;
  int basis_count = 12;         // spline used to refill excluded bands
};

/// TES-style region estimate: per pixel, T from the normalized-emissivity
/// method, V from a coarse smoothness fit, then e = (S - X)/(B - X); the
/// region curve is the bandwise median.
LibraryEstimate estimate_library_emissivity(const HyperCube& cube, std::span<const unsigned char> mask,
                                            const AmbientSpectra& ambient, const TesConfig& config = {});

struct HadarResult {
  int height = 0;
  int width = 0;
  std::vector<int> material;
  std::vector<double> temperature;
  std::vector<double> view_factor;
  std::vector<double> residual;
};

HadarResult decompose_cube_hadar(const HyperCube& cube, const MaterialLibrary& library, const AmbientSpectra& ambient,
                                 const HadarConfig& config = {}, Exec exec = Exec::Parallel);

}  // namespace tag

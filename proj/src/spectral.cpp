#include "tag/spectral.hpp"

#include <cmath>
#include <string>

#include "tag/error.hpp"

namespace tag {

namespace {
constexpr double kExpLimit = 700.0;
}

SpectralGrid::SpectralGrid(std::vector<double> wavenumbers) : values_(std::move(wavenumbers)) {
  if (values_.size() < 2) throw invalid_argument("spectral grid needs at least 2 samples");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]) || values_[i] <= 0.0)
      throw invalid_argument("spectral grid value " + std::to_string(i) + " is not a positive number");
    if (i > 0 && values_[i] <= values_[i - 1])
      throw invalid_argument("spectral grid is not strictly increasing at index " + std::to_string(i));
  }
}

SpectralGrid wavenumber_grid(double start, double stop, double step) {
  if (!(step > 0.0)) throw invalid_argument("wavenumber step must be positive");
  if (!(start > 0.0) || !(start < stop)) throw invalid_argument("wavenumber range requires 0 < start < stop");
  // Index-based generation avoids accumulating rounding error in the samples.
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step * (1.0 + 1e-12))) + 1;
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) values[i] = start + static_cast<double>(i) * step;
  return SpectralGrid(std::move(values));
}

double planck(double temperature, double wavenumber) {
  if (!(temperature > 0.0)) throw invalid_argument("temperature must be positive");
  const double x = kC2 * wavenumber / temperature;
  if (x > kExpLimit) return 0.0;
  return kC1 * wavenumber * wavenumber * wavenumber / std::expm1(x);
}

double planck_dT(double temperature, double wavenumber) {
  if (!(temperature > 0.0)) throw invalid_argument("temperature must be positive");
  const double x = kC2 * wavenumber / temperature;
  if (x > kExpLimit) return 0.0;
  const double em1 = std::expm1(x);
  const double nu2 = wavenumber * wavenumber;
  return kC1 * kC2 * nu2 * nu2 / (temperature * temperature) * (em1 + 1.0) / (em1 * em1);
}

void planck_into(double temperature, std::span<const double> wavenumbers, std::span<double> out) {
  if (!(temperature > 0.0)) throw invalid_argument("temperature must be positive");
  for (std::size_t i = 0; i < wavenumbers.size(); ++i) {
    const double nu = wavenumbers[i];
    const double x = kC2 * nu / temperature;
    out[i] = x > kExpLimit ? 0.0 : kC1 * nu * nu * nu / std::expm1(x);
  }
}

RadianceSpectrum planck_radiance(double temperature, const SpectralGrid& grid) {
  RadianceSpectrum out;
  out.values.resize(grid.size());
  planck_into(temperature, grid.values(), out.values);
  return out;
}

double brightness_temperature(double radiance, double wavenumber) {
  if (!(radiance > 0.0)) throw domain_error("brightness temperature is undefined for radiance <= 0");
  return kC2 * wavenumber / std::log1p(kC1 * wavenumber * wavenumber * wavenumber / radiance);
}

}  // namespace tag

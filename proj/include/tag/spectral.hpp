#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tag {

// CODATA-2018 exact SI values.
namespace codata {
inline constexpr double planck = 6.62607015e-34;       // J s
inline constexpr double light_speed = 299792458.0;     // m / s
inline constexpr double boltzmann = 1.380649e-23;      // J / K
}  // namespace codata

// Radiation constants for spectral radiance per unit wavenumber,
// B in W m^-2 sr^-1 (cm^-1)^-1 with wavenumber in cm^-1.
inline constexpr double kC1 = 2.0 * codata::planck * codata::light_speed * codata::light_speed * 1e8;
inline constexpr double kC2 = codata::planck * codata::light_speed / codata::boltzmann * 1e2;

/// Strictly increasing, positive wavenumber axis (cm^-1) with at least two samples.
class SpectralGrid {
 public:
  SpectralGrid() = default;
  explicit SpectralGrid(std::vector<double> wavenumbers);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double front() const { return values_.front(); }
  double back() const { return values_.back(); }
  std::span<const double> values() const noexcept { return values_; }

  bool operator==(const SpectralGrid&) const = default;

 private:
  std::vector<double> values_;
};

/// Radiance samples on a grid. `measured` spectra may dip below zero (noise).
struct RadianceSpectrum {
  std::vector<double> values;
  bool measured = false;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

/// {a, a+step, ...} truncated at b. Throws InvalidArgument for a non-positive
/// step, a >= b, or fewer than two resulting samples.
SpectralGrid wavenumber_grid(double start, double stop, double step);

/// Planck radiance at one wavenumber. Returns 0 once c2*nu/T exceeds 700.
double planck(double temperature, double wavenumber);

/// dB/dT at one wavenumber.
double planck_dT(double temperature, double wavenumber);

RadianceSpectrum planck_radiance(double temperature, const SpectralGrid& grid);

/// Writes B(T, nu_i) into `out` (size must match the grid). Allocation-free
/// variant used by the solver kernels.
void planck_into(double temperature, std::span<const double> wavenumbers, std::span<double> out);

/// Inverse of planck() in T. Throws DomainError for radiance <= 0.
double brightness_temperature(double radiance, double wavenumber);

}  // namespace tag

#include <cmath>
#include <numbers>

#include "tag/error.hpp"
#include "tag/forward_model.hpp"

namespace tag {

namespace {

// splitmix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double to_unit_open(std::uint64_t bits) {
  // (0, 1): never exactly zero so log() stays finite.
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

double counter_normal(std::uint64_t seed, std::uint64_t row, std::uint64_t col, std::uint64_t band) {
  const std::uint64_t key = mix(mix(mix(mix(seed) ^ row) ^ col) ^ band);
  const double u1 = to_unit_open(mix(key ^ 0x1ULL));
  const double u2 = to_unit_open(mix(key ^ 0x2ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

HyperCube add_noise(const HyperCube& cube, double snr_db, std::uint64_t seed, Exec exec) {
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity())
    throw invalid_argument("snr_db must be finite or +inf");
  HyperCube out = cube;
  if (snr_db == std::numeric_limits<double>::infinity()) return out;

  const double sigma = cube_rms(cube) / std::pow(10.0, snr_db / 20.0);
  const std::size_t bands = cube.bands();
  const auto w = static_cast<std::size_t>(cube.width);
  const auto n = static_cast<std::ptrdiff_t>(cube.pixels());
  auto kernel = [&](std::ptrdiff_t p) {
    const auto up = static_cast<std::size_t>(p);
    auto px = out.pixel(up);
    for (std::size_t b = 0; b < bands; ++b) px[b] += sigma * counter_normal(seed, up / w, up % w, b);
  };
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t p = 0; p < n; ++p) kernel(p);
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < n; ++p) kernel(p);
  }
  out.provenance.noisy = true;
  out.provenance.seed = seed;
  out.provenance.snr_db = snr_db;
  return out;
}

}  // namespace tag

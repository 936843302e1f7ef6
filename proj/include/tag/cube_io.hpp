#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tag/forward_model.hpp"

namespace tag {

inline constexpr const char* kCubeMagic = "SLOTCUBE/1";
inline constexpr const char* kCubeLayout = "BSQ-LE-F32";
inline constexpr const char* kMapMagic = "SLOTMAP/1";
inline constexpr const char* kMapLayout = "LE-F64";

/// Header at `<base>.json`, samples at `<base>.bin` as little-endian float32,
/// band-sequential. Samples are rounded to float32 on write, so reading back a
/// written cube reproduces it exactly whenever its samples are float32 values.
void write_cube(const HyperCube& cube, const std::filesystem::path& base);
HyperCube read_cube(const std::filesystem::path& base);

/// Round every sample to float32 (what a write/read cycle does).
void quantize_f32(HyperCube& cube);

/// Scalar H x W map: `<base>.json` header and `<base>.bin` float64 row-major.
struct MapData {
  int height = 0;
  int width = 0;
  std::string name;
  std::string units;
  std::vector<double> values;
};
void write_map(const MapData& map, const std::filesystem::path& base);
MapData read_map(const std::filesystem::path& base);

struct AmbientFile {
  SpectralGrid grid;
  AmbientSpectra ambient;
};

/// CSV with header `wavenumber_cm1,s_sky,s_g` and strictly increasing rows.
AmbientFile read_ambient_csv(const std::filesystem::path& path);
void write_ambient_csv(const AmbientFile& file, const std::filesystem::path& path);

struct ResampledAmbient {
  AmbientSpectra ambient;
  bool resampled = false;
};

/// Linear interpolation onto `target`; identity (resampled = false) when the
/// grids already agree. Throws Domain error if target leaves the file range.
ResampledAmbient resample_ambient(const AmbientFile& file, const SpectralGrid& target);

/// Linear interpolation of y(x) at each target point; x strictly increasing.
std::vector<double> interpolate_linear(std::span<const double> x, std::span<const double> y,
                                       std::span<const double> target);

struct StretchInfo {
  double p_lo = 2.0;
  double p_hi = 98.0;
  double lo = 0.0;  // value mapped to 0
  double hi = 0.0;  // value mapped to 65535
  bool constant = false;
};

/// 16-bit grayscale PNG with a linear percentile stretch; the stretch bounds
/// go to `<path>.stretch.json`. A constant map becomes mid-gray (32768) and
/// StretchInfo::constant is set so the caller can warn.
StretchInfo write_map_png(const std::vector<double>& values, int height, int width, const std::filesystem::path& path,
                          double p_lo = 2.0, double p_hi = 98.0);

/// Raw 16-bit samples of a grayscale PNG.
std::vector<unsigned short> read_png16(const std::filesystem::path& path, int& height, int& width);

/// Inverts the stretch using the sidecar file.
MapData read_map_png(const std::filesystem::path& path);

/// Linear-interpolated percentile (0..100) of the values.
double percentile(std::vector<double> values, double pct);

}  // namespace tag

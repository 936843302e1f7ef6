#pragma once

#include <string>
#include <vector>

namespace tag {

/// H x W scalar image with an optional mask (empty = every pixel).
struct GrayImage {
  int height = 0;
  int width = 0;
  std::vector<double> values;
  std::vector<unsigned char> mask;

  GrayImage() = default;
  GrayImage(int h, int w, std::vector<double> v, std::vector<unsigned char> m = {});

  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }
  bool in_mask(int r, int c) const { return mask.empty() || mask[static_cast<std::size_t>(r) * width + c] != 0; }
  std::size_t masked_count() const;
};

/// Shannon entropy (bits) of the 256-level min-max quantized masked values.
double entropy(const GrayImage& img);

/// Mean of sqrt((dx^2 + dy^2) / 2) with forward differences, over masked
/// pixels whose right and lower neighbours are also masked.
double average_gradient(const GrayImage& img);

/// sqrt(RF^2 + CF^2) from masked horizontal and vertical neighbour pairs.
double spatial_frequency(const GrayImage& img);

/// Population standard deviation over the mask.
double std_dev(const GrayImage& img);

/// Linear min-max map of the masked values onto [lo, hi] (display range).
GrayImage stretch(const GrayImage& img, double lo = 0.0, double hi = 255.0);

struct MetricsRow {
  std::string name;
  double en = 0.0;
  double ag = 0.0;
  double sf = 0.0;
  double sd = 0.0;
};

struct NamedImage {
  std::string name;
  GrayImage image;
};

/// One row per image; the mask (may be empty) is applied to every image.
std::vector<MetricsRow> metrics_report(const std::vector<NamedImage>& images, const std::vector<unsigned char>& mask);

/// name,EN,AG,SF,SD with 6 significant digits.
std::string metrics_csv(const std::vector<MetricsRow>& rows);
std::string metrics_table(const std::vector<MetricsRow>& rows);

}  // namespace tag

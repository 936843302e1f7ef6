#include "tag/quality_metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "tag/error.hpp"

namespace tag {

GrayImage::GrayImage(int h, int w, std::vector<double> v, std::vector<unsigned char> m)
    : height(h), width(w), values(std::move(v)), mask(std::move(m)) {
  if (h <= 0 || w <= 0) throw invalid_argument("image dimensions must be positive");
  if (values.size() != static_cast<std::size_t>(h) * w) throw invalid_argument("image value count != H*W");
  if (!mask.empty() && mask.size() != values.size()) throw invalid_argument("mask shape does not match the image");
  for (double x : values)
    if (!std::isfinite(x)) throw invalid_argument("image contains a non-finite value");
  if (!mask.empty() && masked_count() == 0) throw invalid_argument("mask selects no pixel");
}

std::size_t GrayImage::masked_count() const {
  if (mask.empty()) return values.size();
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](unsigned char m) { return m != 0; }));
}

namespace {

void need_pixels(const GrayImage& img, const char* metric) {
  if (img.masked_count() < 2) throw domain_error(std::string(metric) + " needs at least 2 masked pixels");
}

std::pair<double, double> masked_range(const GrayImage& img) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t p = 0; p < img.values.size(); ++p) {
    if (!img.mask.empty() && !img.mask[p]) continue;
    lo = std::min(lo, img.values[p]);
    hi = std::max(hi, img.values[p]);
  }
  return {lo, hi};
}

}  // namespace

double entropy(const GrayImage& img) {
  need_pixels(img, "entropy");
  const auto [lo, hi] = masked_range(img);
  if (!(hi > lo)) return 0.0;
  std::array<std::size_t, 256> hist{};
  std::size_t total = 0;
  for (std::size_t p = 0; p < img.values.size(); ++p) {
    if (!img.mask.empty() && !img.mask[p]) continue;
    const auto level = static_cast<int>(std::lround((img.values[p] - lo) / (hi - lo) * 255.0));
    ++hist[static_cast<std::size_t>(std::clamp(level, 0, 255))];
    ++total;
  }
  double en = 0.0;
  for (std::size_t count : hist) {
    if (count == 0) continue;
    const double prob = static_cast<double>(count) / static_cast<double>(total);
    en -= prob * std::log2(prob);
  }
  return en;
}

double average_gradient(const GrayImage& img) {
  if (img.height < 2 || img.width < 2) throw domain_error("average gradient needs H, W >= 2");
  double sum = 0.0;
  std::size_t count = 0;
  for (int r = 0; r + 1 < img.height; ++r)
    for (int c = 0; c + 1 < img.width; ++c) {
      if (!img.in_mask(r, c) || !img.in_mask(r, c + 1) || !img.in_mask(r + 1, c)) continue;
      const double dx = img.at(r, c + 1) - img.at(r, c);
      const double dy = img.at(r + 1, c) - img.at(r, c);
      sum += std::sqrt(0.5 * (dx * dx + dy * dy));
      ++count;
    }
  if (count == 0) throw domain_error("average gradient is undefined: no interior masked pixel");
  return sum / static_cast<double>(count);
}

double spatial_frequency(const GrayImage& img) {
  if (img.height < 2 || img.width < 2) throw domain_error("spatial frequency needs H, W >= 2");
  double row_sum = 0.0, col_sum = 0.0;
  std::size_t row_pairs = 0, col_pairs = 0;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      if (!img.in_mask(r, c)) continue;
      if (c > 0 && img.in_mask(r, c - 1)) {
        const double d = img.at(r, c) - img.at(r, c - 1);
        row_sum += d * d;
        ++row_pairs;
      }
      if (r > 0 && img.in_mask(r - 1, c)) {
        const double d = img.at(r, c) - img.at(r - 1, c);
        col_sum += d * d;
        ++col_pairs;
      }
    }
  if (row_pairs == 0 && col_pairs == 0) throw domain_error("spatial frequency is undefined: no masked neighbour pair");
  const double rf2 = row_pairs ? row_sum / static_cast<double>(row_pairs) : 0.0;
  const double cf2 = col_pairs ? col_sum / static_cast<double>(col_pairs) : 0.0;
  return std::sqrt(rf2 + cf2);
}

double std_dev(const GrayImage& img) {
  need_pixels(img, "standard deviation");
  double mean = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < img.values.size(); ++p) {
    if (!img.mask.empty() && !img.mask[p]) continue;
    mean += img.values[p];
    ++count;
  }
  mean /= static_cast<double>(count);
  double var = 0.0;
  for (std::size_t p = 0; p < img.values.size(); ++p) {
    if (!img.mask.empty() && !img.mask[p]) continue;
    var += (img.values[p] - mean) * (img.values[p] - mean);
  }
  return std::sqrt(var / static_cast<double>(count));
}

GrayImage stretch(const GrayImage& img, double lo, double hi) {
  const auto [mn, mx] = masked_range(img);
  GrayImage out = img;
  for (double& v : out.values) v = mx > mn ? lo + (hi - lo) * (v - mn) / (mx - mn) : 0.5 * (lo + hi);
  return out;
}

std::vector<MetricsRow> metrics_report(const std::vector<NamedImage>& images, const std::vector<unsigned char>& mask) {
  std::vector<MetricsRow> rows;
  for (const auto& named : images) {
    if (!mask.empty() && mask.size() != named.image.values.size())
      throw invalid_argument("image '" + named.name + "' does not match the mask shape");
    if (!images.empty() && (named.image.height != images.front().image.height ||
                            named.image.width != images.front().image.width))
      throw invalid_argument("image '" + named.name + "' differs in shape from '" + images.front().name + "'");
    GrayImage img = named.image;
    if (!mask.empty()) img = GrayImage(img.height, img.width, img.values, mask);
    rows.push_back({named.name, entropy(img), average_gradient(img), spatial_frequency(img), std_dev(img)});
  }
  return rows;
}

namespace {
std::string sig6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}
}  // namespace

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  os << "name,EN,AG,SF,SD\n";
  for (const auto& r : rows) os << r.name << ',' << sig6(r.en) << ',' << sig6(r.ag) << ',' << sig6(r.sf) << ',' << sig6(r.sd) << '\n';
  return os.str();
}

std::string metrics_table(const std::vector<MetricsRow>& rows) {
  std::size_t width = 4;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-*s %12s %12s %12s %12s\n", static_cast<int>(width), "name", "EN", "AG", "SF", "SD");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-*s %12.6g %12.6g %12.6g %12.6g\n", static_cast<int>(width), r.name.c_str(), r.en,
                  r.ag, r.sf, r.sd);
    os << buf;
  }
  return os.str();
}

}  // namespace tag

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>

#include <json.hpp>

#include "tag/cube_io.hpp"
#include "tag/error.hpp"

namespace tag {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

fs::path sidecar_path(const fs::path& png) {
  fs::path p = png;
  p += ".stretch.json";
  return p;
}

void write_png16(const std::vector<unsigned short>& pixels, int height, int width, const fs::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw io_error("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw io_error("libpng: cannot create write struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw io_error("libpng: cannot create info struct");
  }
  // Rows are converted to big-endian bytes here, so no png_set_swap is needed.
  std::vector<png_byte> rows(static_cast<std::size_t>(height) * width * 2);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    rows[2 * i] = static_cast<png_byte>(pixels[i] >> 8);
    rows[2 * i + 1] = static_cast<png_byte>(pixels[i] & 0xff);
  }
  std::vector<png_bytep> row_ptrs(height);
  for (int r = 0; r < height; ++r) row_ptrs[r] = rows.data() + static_cast<std::size_t>(r) * width * 2;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw io_error("libpng: failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

StretchInfo write_map_png(const std::vector<double>& values, int height, int width, const fs::path& path,
                          double p_lo, double p_hi) {
  if (height <= 0 || width <= 0 || values.size() != static_cast<std::size_t>(height) * width)
    throw invalid_argument("map value count does not match its dimensions");
  if (!(p_lo >= 0.0 && p_lo < p_hi && p_hi <= 100.0)) throw invalid_argument("stretch percentiles must satisfy 0 <= lo < hi <= 100");
  for (double v : values)
    if (!std::isfinite(v)) throw invalid_argument("map contains non-finite values");

  StretchInfo info;
  info.p_lo = p_lo;
  info.p_hi = p_hi;
  info.lo = percentile(values, p_lo);
  info.hi = percentile(values, p_hi);
  std::vector<unsigned short> pixels(values.size(), 32768);
  if (!(info.hi > info.lo)) {
    info.constant = true;
  } else {
    const double scale = 65535.0 / (info.hi - info.lo);
    for (std::size_t i = 0; i < values.size(); ++i)
      pixels[i] = static_cast<unsigned short>(std::lround(std::clamp((values[i] - info.lo) * scale, 0.0, 65535.0)));
  }
  write_png16(pixels, height, width, path);

  nlohmann::json side;
  side["p_lo"] = info.p_lo;
  side["p_hi"] = info.p_hi;
  side["lo"] = info.lo;
  side["hi"] = info.hi;
  side["constant"] = info.constant;
  std::ofstream out(sidecar_path(path));
  if (!out) throw io_error("cannot write " + sidecar_path(path).string());
  out << side.dump(2) << "\n";
  return info;
}

std::vector<unsigned short> read_png16(const fs::path& path, int& height, int& width) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw io_error("cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8))
    throw format_error(path.string() + ": not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw io_error("libpng: cannot create read struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw io_error("libpng: cannot create info struct");
  }
  std::vector<png_byte> rows;
  std::vector<png_bytep> row_ptrs;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw format_error(path.string() + ": corrupt PNG");
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  if (png_get_bit_depth(png, info) != 16 || png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw format_error(path.string() + ": expected 16-bit grayscale");
  }
  rows.resize(static_cast<std::size_t>(h) * w * 2);
  row_ptrs.resize(h);
  for (int r = 0; r < h; ++r) row_ptrs[r] = rows.data() + static_cast<std::size_t>(r) * w * 2;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  height = h;
  width = w;
  std::vector<unsigned short> out(static_cast<std::size_t>(h) * w);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<unsigned short>((rows[2 * i] << 8) | rows[2 * i + 1]);
  return out;
}

MapData read_map_png(const fs::path& path) {
  std::ifstream in(sidecar_path(path));
  if (!in) throw io_error("missing stretch sidecar " + sidecar_path(path).string());
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw format_error(sidecar_path(path).string() + ": malformed JSON: " + e.what());
  }
  double lo = 0.0, hi = 0.0;
  try {
    lo = side.at("lo").get<double>();
    hi = side.at("hi").get<double>();
  } catch (const nlohmann::json::exception&) {
    throw format_error(sidecar_path(path).string() + ": fields 'lo' and 'hi' are required numbers");
  }
  MapData map;
  const auto raw = read_png16(path, map.height, map.width);
  map.values.resize(raw.size());
  const bool constant = side.value("constant", false) || !(hi > lo);
  for (std::size_t i = 0; i < raw.size(); ++i)
    map.values[i] = constant ? lo : lo + static_cast<double>(raw[i]) / 65535.0 * (hi - lo);
  return map;
}

}  // namespace tag

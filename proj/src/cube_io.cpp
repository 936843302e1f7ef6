#include "tag/cube_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "tag/error.hpp"

namespace tag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path with_suffix(const fs::path& base, const char* suffix) {
  fs::path p = base;
  p += suffix;
  return p;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw format_error(path.string() + ": malformed JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path.string());
  out << text;
  if (!out) throw io_error("failed writing " + path.string());
}

template <class T>
T field(const json& j, const char* key, const fs::path& file) {
  if (!j.contains(key)) throw format_error(file.string() + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw format_error(file.string() + ": field '" + key + "' has the wrong type");
  }
}

template <class T>
void put_le(std::vector<char>& buf, T value) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = std::bit_cast<U>(value);
  for (std::size_t b = 0; b < sizeof(U); ++b) buf.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

template <class T>
T get_le(const char* p) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) bits |= static_cast<U>(static_cast<unsigned char>(p[b])) << (8 * b);
  return std::bit_cast<T>(bits);
}

std::vector<char> read_binary(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

void quantize_f32(HyperCube& cube) {
  for (double& v : cube.data) v = static_cast<double>(static_cast<float>(v));
}

void write_cube(const HyperCube& cube, const fs::path& base) {
  json header;
  header["magic"] = kCubeMagic;
  header["width"] = cube.width;
  header["height"] = cube.height;
  header["bands"] = cube.bands();
  header["wavenumbers"] = std::vector<double>(cube.grid.values().begin(), cube.grid.values().end());
  header["layout"] = kCubeLayout;
  json prov;
  prov["kind"] = cube.provenance.noisy ? "noisy" : "clean";
  prov["seed"] = cube.provenance.seed;
  if (std::isfinite(cube.provenance.snr_db)) prov["snr_db"] = cube.provenance.snr_db;
  else prov["snr_db"] = nullptr;
  prov["generator"] = cube.provenance.generator;
  header["provenance"] = prov;

  std::vector<char> buf;
  buf.reserve(cube.data.size() * 4);
  const std::size_t bands = cube.bands();
  for (std::size_t b = 0; b < bands; ++b)
    for (std::size_t p = 0; p < cube.pixels(); ++p) put_le(buf, static_cast<float>(cube.data[p * bands + b]));

  write_text(with_suffix(base, ".json"), header.dump(2) + "\n");
  std::ofstream out(with_suffix(base, ".bin"), std::ios::binary);
  if (!out) throw io_error("cannot write " + with_suffix(base, ".bin").string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw io_error("failed writing " + with_suffix(base, ".bin").string());
}

HyperCube read_cube(const fs::path& base) {
  const fs::path hpath = with_suffix(base, ".json");
  const fs::path bpath = with_suffix(base, ".bin");
  const json header = read_json_file(hpath);
  if (field<std::string>(header, "magic", hpath) != kCubeMagic)
    throw format_error(hpath.string() + ": field 'magic' is not " + kCubeMagic);
  if (field<std::string>(header, "layout", hpath) != kCubeLayout)
    throw format_error(hpath.string() + ": field 'layout' is not " + kCubeLayout);
  const int width = field<int>(header, "width", hpath);
  const int height = field<int>(header, "height", hpath);
  const auto bands = field<std::size_t>(header, "bands", hpath);
  auto wavenumbers = field<std::vector<double>>(header, "wavenumbers", hpath);
  if (width <= 0 || height <= 0) throw format_error(hpath.string() + ": fields 'width'/'height' must be positive");
  if (wavenumbers.size() != bands)
    throw format_error(hpath.string() + ": field 'bands' (" + std::to_string(bands) + ") disagrees with 'wavenumbers' length (" +
                       std::to_string(wavenumbers.size()) + ")");
  SpectralGrid grid;
  try {
    grid = SpectralGrid(std::move(wavenumbers));
  } catch (const Error& e) {
    throw format_error(hpath.string() + ": field 'wavenumbers': " + e.what());
  }

  HyperCube cube(height, width, grid);
  if (header.contains("provenance")) {
    const json& prov = header["provenance"];
    cube.provenance.noisy = field<std::string>(prov, "kind", hpath) == "noisy";
    cube.provenance.seed = field<std::uint64_t>(prov, "seed", hpath);
    cube.provenance.snr_db =
        prov.contains("snr_db") && !prov["snr_db"].is_null() ? field<double>(prov, "snr_db", hpath)
                                                             : std::numeric_limits<double>::infinity();
    cube.provenance.generator = field<std::string>(prov, "generator", hpath);
  }

  const auto payload = read_binary(bpath);
  const std::size_t expected = cube.pixels() * bands * 4;
  if (payload.size() < expected)
    throw format_error(bpath.string() + ": truncated payload: " + std::to_string(payload.size()) + " bytes, header needs " +
                       std::to_string(expected));
  if (payload.size() != expected)
    throw format_error(bpath.string() + ": payload size " + std::to_string(payload.size()) +
                       " disagrees with header (width*height*bands*4 = " + std::to_string(expected) + ")");
  const char* p = payload.data();
  for (std::size_t b = 0; b < bands; ++b)
    for (std::size_t px = 0; px < cube.pixels(); ++px, p += 4) {
      const float v = get_le<float>(p);
      if (!std::isfinite(v)) throw format_error(bpath.string() + ": non-finite sample");
      cube.data[px * bands + b] = static_cast<double>(v);
    }
  return cube;
}

void write_map(const MapData& map, const fs::path& base) {
  if (map.values.size() != static_cast<std::size_t>(map.height) * map.width)
    throw invalid_argument("map value count does not match its dimensions");
  json header;
  header["magic"] = kMapMagic;
  header["width"] = map.width;
  header["height"] = map.height;
  header["layout"] = kMapLayout;
  header["name"] = map.name;
  header["units"] = map.units;
  std::vector<char> buf;
  buf.reserve(map.values.size() * 8);
  for (double v : map.values) put_le(buf, v);
  write_text(with_suffix(base, ".json"), header.dump(2) + "\n");
  std::ofstream out(with_suffix(base, ".bin"), std::ios::binary);
  if (!out) throw io_error("cannot write " + with_suffix(base, ".bin").string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

MapData read_map(const fs::path& base) {
  const fs::path hpath = with_suffix(base, ".json");
  const fs::path bpath = with_suffix(base, ".bin");
  const json header = read_json_file(hpath);
  if (field<std::string>(header, "magic", hpath) != kMapMagic)
    throw format_error(hpath.string() + ": field 'magic' is not " + kMapMagic);
  if (field<std::string>(header, "layout", hpath) != kMapLayout)
    throw format_error(hpath.string() + ": field 'layout' is not " + kMapLayout);
  MapData map;
  map.width = field<int>(header, "width", hpath);
  map.height = field<int>(header, "height", hpath);
  if (map.width <= 0 || map.height <= 0) throw format_error(hpath.string() + ": fields 'width'/'height' must be positive");
  map.name = header.value("name", "");
  map.units = header.value("units", "");
  const auto payload = read_binary(bpath);
  const std::size_t count = static_cast<std::size_t>(map.width) * map.height;
  if (payload.size() != count * 8)
    throw format_error(bpath.string() + ": payload size " + std::to_string(payload.size()) + " != width*height*8 (" +
                       std::to_string(count * 8) + ")");
  map.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) map.values[i] = get_le<double>(payload.data() + 8 * i);
  return map;
}

AmbientFile read_ambient_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    return s.substr(i);
  };
  if (!std::getline(in, line)) throw format_error(path.string() + ":1: empty file, expected header");
  ++lineno;
  {
    std::stringstream hs(trim(line));
    std::vector<std::string> cols;
    std::string col;
    while (std::getline(hs, col, ',')) cols.push_back(trim(col));
    const std::vector<std::string> expected{"wavenumber_cm1", "s_sky", "s_g"};
    for (std::size_t c = 0; c < expected.size(); ++c)
      if (c >= cols.size() || cols[c] != expected[c])
        throw format_error(path.string() + ":1: missing column '" + expected[c] + "' in header");
  }
  std::vector<double> nu, sky, ground;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    double vals[3];
    int c = 0;
    while (std::getline(ls, cell, ',')) {
      if (c >= 3) throw format_error(path.string() + ":" + std::to_string(lineno) + ": too many columns");
      try {
        std::size_t used = 0;
        vals[c] = std::stod(trim(cell), &used);
        if (used != trim(cell).size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw format_error(path.string() + ":" + std::to_string(lineno) + ": column " + std::to_string(c + 1) +
                           " is not a number");
      }
      if (!std::isfinite(vals[c]))
        throw format_error(path.string() + ":" + std::to_string(lineno) + ": non-finite value");
      ++c;
    }
    if (c != 3) throw format_error(path.string() + ":" + std::to_string(lineno) + ": expected 3 columns");
    if (!nu.empty() && vals[0] <= nu.back())
      throw format_error(path.string() + ":" + std::to_string(lineno) + ": wavenumber " + std::to_string(vals[0]) +
                         " is not strictly increasing");
    nu.push_back(vals[0]);
    sky.push_back(vals[1]);
    ground.push_back(vals[2]);
  }
  if (nu.size() < 2) throw format_error(path.string() + ": needs at least 2 data rows");
  if (nu.front() <= 0.0) throw format_error(path.string() + ":2: wavenumbers must be positive");
  RadianceSpectrum s_sky{std::move(sky), true}, s_g{std::move(ground), true};
  return AmbientFile{SpectralGrid(std::move(nu)), AmbientSpectra::make(std::move(s_sky), std::move(s_g))};
}

void write_ambient_csv(const AmbientFile& file, const fs::path& path) {
  std::ostringstream os;
  os << "wavenumber_cm1,s_sky,s_g\n";
  char buf[128];
  for (std::size_t i = 0; i < file.grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", file.grid[i], file.ambient.sky[i], file.ambient.ground[i]);
    os << buf;
  }
  write_text(path, os.str());
}

std::vector<double> interpolate_linear(std::span<const double> x, std::span<const double> y,
                                       std::span<const double> target) {
  std::vector<double> out(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double t = target[i];
    const double tol = 1e-9 * (x.back() - x.front());
    if (t < x.front() - tol || t > x.back() + tol)
      throw domain_error("interpolation target " + std::to_string(t) + " outside [" + std::to_string(x.front()) + ", " +
                         std::to_string(x.back()) + "]");
    auto it = std::upper_bound(x.begin(), x.end(), t);
    std::size_t hi = std::clamp<std::size_t>(static_cast<std::size_t>(it - x.begin()), 1, x.size() - 1);
    const std::size_t lo = hi - 1;
    const double f = std::clamp((t - x[lo]) / (x[hi] - x[lo]), 0.0, 1.0);
    out[i] = y[lo] + f * (y[hi] - y[lo]);
  }
  return out;
}

ResampledAmbient resample_ambient(const AmbientFile& file, const SpectralGrid& target) {
  if (file.grid == target) return {file.ambient, false};
  RadianceSpectrum sky{interpolate_linear(file.grid.values(), file.ambient.sky.values, target.values()), true};
  RadianceSpectrum ground{interpolate_linear(file.grid.values(), file.ambient.ground.values, target.values()), true};
  return {AmbientSpectra::make(std::move(sky), std::move(ground)), true};
}

double percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw invalid_argument("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(pct, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace tag

#include "tag/schema_io.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <set>

#include "tag/cube_io.hpp"
#include "tag/error.hpp"

namespace tag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Typed access to one JSON object; every error names the field path, and
// finish() rejects keys nobody asked for.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw config_error(where() + ": expected an object");
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  double number(const char* key) {
    const json& v = get(key);
    if (!v.is_number()) throw config_error(name(key) + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw config_error(name(key) + ": must be finite");
    return d;
  }
  double number(const char* key, double fallback) { return has(key) ? number(key) : mark(key, fallback); }

  long long integer(const char* key) {
    const json& v = get(key);
    if (!v.is_number_integer()) throw config_error(name(key) + ": expected an integer");
    return v.get<long long>();
  }
  int integer(const char* key, int fallback) {
    if (!has(key)) return mark(key, fallback);
    const long long v = integer(key);
    if (v < -(1LL << 31) || v >= (1LL << 31)) throw config_error(name(key) + ": out of range");
    return static_cast<int>(v);
  }

  std::uint64_t unsigned_integer(const char* key, std::uint64_t fallback) {
    if (!has(key)) return mark(key, fallback);
    const json& v = get(key);
    if (!v.is_number_unsigned()) throw config_error(name(key) + ": expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const char* key, bool fallback) {
    if (!has(key)) return mark(key, fallback);
    const json& v = get(key);
    if (!v.is_boolean()) throw config_error(name(key) + ": expected true or false");
    return v.get<bool>();
  }

  std::string string(const char* key) {
    const json& v = get(key);
    if (!v.is_string()) throw config_error(name(key) + ": expected a string");
    return v.get<std::string>();
  }
  std::string string(const char* key, const std::string& fallback) { return has(key) ? string(key) : mark(key, fallback); }

  std::vector<double> numbers(const char* key) {
    const json& v = get(key);
    if (!v.is_array()) throw config_error(name(key) + ": expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw config_error(name(key) + "[" + std::to_string(i) + "]: expected a number");
      out.push_back(v[i].get<double>());
      if (!std::isfinite(out.back())) throw config_error(name(key) + "[" + std::to_string(i) + "]: must be finite");
    }
    return out;
  }

  const json& object(const char* key) {
    const json& v = get(key);
    if (!v.is_object()) throw config_error(name(key) + ": expected an object");
    return v;
  }
  const json& array(const char* key) {
    const json& v = get(key);
    if (!v.is_array()) throw config_error(name(key) + ": expected an array");
    return v;
  }

  template <class E, std::size_t N>
  E choice(const char* key, E fallback, const std::pair<const char*, E> (&options)[N]) {
    if (!has(key)) return mark(key, fallback);
    const std::string s = string(key);
    std::string allowed;
    for (const auto& [label, value] : options) {
      if (s == label) return value;
      allowed += (allowed.empty() ? "" : ", ") + std::string(label);
    }
    throw config_error(name(key) + ": unknown value '" + s + "' (expected one of " + allowed + ")");
  }

  std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw config_error(name(it.key().c_str()) + ": unknown field");
  }

 private:
  const json& get(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw config_error(name(key) + ": missing required field");
    return j_.at(key);
  }
  template <class T>
  T mark(const char* key, T value) {
    seen_.insert(key);
    return value;
  }
  std::string where() const { return path_.empty() ? "document" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

SpectralGrid grid_from(Fields& f) {
  if (f.has("wavenumbers")) {
    try {
      return SpectralGrid(f.numbers("wavenumbers"));
    } catch (const Error& e) {
      throw config_error(f.name("wavenumbers") + ": " + e.what());
    }
  }
  if (!f.has("grid")) return wavenumber_grid(870.0, 1269.0, 6.0);
  Fields g(f.object("grid"), f.name("grid"));
  const double start = g.number("start"), stop = g.number("stop"), step = g.number("step");
  g.finish();
  try {
    return wavenumber_grid(start, stop, step);
  } catch (const Error& e) {
    throw config_error(f.name("grid") + ": " + e.what());
  }
}

const std::pair<const char*, TemperaturePattern> kTemperaturePatterns[] = {
    {"smooth", TemperaturePattern::Smooth}, {"constant", TemperaturePattern::Constant}};
const std::pair<const char*, ViewPattern> kViewPatterns[] = {
    {"hemisphere", ViewPattern::Hemisphere}, {"ramp", ViewPattern::Ramp}, {"constant", ViewPattern::Constant}};
const std::pair<const char*, RegionLayout> kLayouts[] = {
    {"single", RegionLayout::Single}, {"split", RegionLayout::Split}, {"disc", RegionLayout::Disc}};
const std::pair<const char*, IntraShape> kShapes[] = {{"affine", IntraShape::Affine}, {"curved", IntraShape::Curved}};

template <class E, std::size_t N>
std::string label_of(E value, const std::pair<const char*, E> (&options)[N]) {
  for (const auto& [label, v] : options)
    if (v == value) return label;
  return "?";
}

}  // namespace

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw config_error(path.string() + ": malformed JSON: " + e.what());
  }
}

SceneDescriptor scene_descriptor_from_json(const json& j) {
  Fields f(j, "");
  SceneDescriptor d;
  d.height = f.integer("height", d.height);
  d.width = f.integer("width", d.width);
  d.seed = f.unsigned_integer("seed", d.seed);
  if (f.has("grid")) {
    Fields g(f.object("grid"), "grid");
    d.grid_start = g.number("start");
    d.grid_stop = g.number("stop");
    d.grid_step = g.number("step");
    g.finish();
  }
  d.basis_count = f.integer("basis_count", d.basis_count);
  if (d.basis_count < 4) throw config_error("basis_count: must be >= 4");
  if (f.has("temperature")) {
    Fields t(f.object("temperature"), "temperature");
    d.temperature_pattern = t.choice("pattern", d.temperature_pattern, kTemperaturePatterns);
    d.t_min = t.number("min", d.t_min);
    d.t_max = t.number("max", d.t_max);
    t.finish();
  }
  if (f.has("view_factor")) {
    Fields v(f.object("view_factor"), "view_factor");
    d.view_pattern = v.choice("pattern", d.view_pattern, kViewPatterns);
    d.v_min = v.number("min", d.v_min);
    d.v_max = v.number("max", d.v_max);
    d.v_ripple = v.number("ripple", d.v_ripple);
    d.ripple_period = v.number("ripple_period", d.ripple_period);
    if (!(d.ripple_period > 0.0)) throw config_error("view_factor.ripple_period: must be positive");
    v.finish();
  }
  d.layout = f.choice("layout", d.layout, kLayouts);
  d.sigma_intra = f.number("sigma_intra", d.sigma_intra);
  d.intra_shape = f.choice("intra_shape", d.intra_shape, kShapes);

  SplineBasis basis;
  try {
    basis = make_basis(wavenumber_grid(d.grid_start, d.grid_stop, d.grid_step), d.basis_count);
  } catch (const Error& e) {
    throw config_error(std::string("grid: ") + e.what());
  }
  const json& regions = f.array("regions");
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const std::string path = "regions[" + std::to_string(i) + "]";
    Fields r(regions[i], path);
    RegionSpec spec;
    spec.name = r.string("name", "region" + std::to_string(i));
    if (r.has("beta")) {
      spec.base_beta = r.numbers("beta");
      if (spec.base_beta.size() != static_cast<std::size_t>(d.basis_count))
        throw config_error(path + ".beta: has " + std::to_string(spec.base_beta.size()) + " entries, basis_count is " +
                           std::to_string(d.basis_count));
    } else {
      const double mean = r.number("mean");
      const double tilt = r.number("tilt", 0.0);
      const double dip = r.number("dip", 0.0);
      const double center = r.number("dip_center", 1050.0);
      const double width = r.number("dip_width", 60.0);
      if (!(width > 0.0)) throw config_error(path + ".dip_width: must be positive");
      spec.base_beta = parametric_beta(basis, mean, tilt, dip, center, width);
    }
    for (double b : spec.base_beta)
      if (!(b > 0.0 && b < 1.0)) throw config_error(path + ": emissivity coefficients must lie in (0, 1)");
    r.finish();
    d.regions.push_back(std::move(spec));
  }
  f.finish();
  return d;
}

json to_json(const SceneDescriptor& d) {
  json j;
  j["height"] = d.height;
  j["width"] = d.width;
  j["seed"] = d.seed;
  j["grid"] = {{"start", d.grid_start}, {"stop", d.grid_stop}, {"step", d.grid_step}};
  j["basis_count"] = d.basis_count;
  j["temperature"] = {{"pattern", label_of(d.temperature_pattern, kTemperaturePatterns)}, {"min", d.t_min}, {"max", d.t_max}};
  j["view_factor"] = {{"pattern", label_of(d.view_pattern, kViewPatterns)},
                      {"min", d.v_min},
                      {"max", d.v_max},
                      {"ripple", d.v_ripple},
                      {"ripple_period", d.ripple_period}};
  j["layout"] = label_of(d.layout, kLayouts);
  j["sigma_intra"] = d.sigma_intra;
  j["intra_shape"] = label_of(d.intra_shape, kShapes);
  j["regions"] = json::array();
  for (const auto& r : d.regions) j["regions"].push_back({{"name", r.name}, {"beta", r.base_beta}});
  return j;
}

namespace {

void read_slot_fields(Fields& f, SlotConfig& c) {
  c.lambda = f.number("lambda", c.lambda);
  c.basis_count = f.integer("basis_count", c.basis_count);
  if (f.has("t_range")) {
    const auto range = f.numbers("t_range");
    if (range.size() != 2) throw config_error(f.name("t_range") + ": expected [lo, hi]");
    c.t_lo = range[0];
    c.t_hi = range[1];
  }
  c.t_halfwidth = f.number("t_halfwidth", c.t_halfwidth);
  c.t_step = f.number("t_step", c.t_step);
  c.v_step = f.number("v_step", c.v_step);
  c.refine_tolerance = f.number("refine_tolerance", c.refine_tolerance);
  c.max_refine_iterations = f.integer("max_refine_iterations", c.max_refine_iterations);
  if (f.has("band_weights")) c.band_weights = f.numbers("band_weights");
  c.v_sensitivity_threshold = f.number("v_sensitivity_threshold", c.v_sensitivity_threshold);
}

void check(const std::function<void()>& validate) {
  try {
    validate();
  } catch (const Error& e) {
    throw config_error(e.what());
  }
}

}  // namespace

SlotConfig slot_config_from_json(const json& j) {
  Fields f(j, "");
  SlotConfig c;
  read_slot_fields(f, c);
  f.finish();
  // Band-count agreement is checked later against the cube.
  check([&] { c.validate(c.band_weights.size()); });
  return c;
}

json to_json(const SlotConfig& c) {
  json j;
  j["lambda"] = c.lambda;
  j["basis_count"] = c.basis_count;
  if (c.t_lo && c.t_hi) j["t_range"] = {*c.t_lo, *c.t_hi};
  j["t_halfwidth"] = c.t_halfwidth;
  j["t_step"] = c.t_step;
  j["v_step"] = c.v_step;
  j["refine_tolerance"] = c.refine_tolerance;
  j["max_refine_iterations"] = c.max_refine_iterations;
  if (!c.band_weights.empty()) j["band_weights"] = c.band_weights;
  j["v_sensitivity_threshold"] = c.v_sensitivity_threshold;
  return j;
}

HadarConfig hadar_config_from_json(const json& j) {
  Fields f(j, "hadar");
  HadarConfig c;
  if (f.has("t_range")) {
    const auto range = f.numbers("t_range");
    if (range.size() != 2 || !(range[0] > 0.0 && range[0] < range[1]))
      throw config_error("hadar.t_range: expected [lo, hi] with 0 < lo < hi");
    c.t_lo = range[0];
    c.t_hi = range[1];
  }
  c.t_halfwidth = f.number("t_halfwidth", c.t_halfwidth);
  c.t_step = f.number("t_step", c.t_step);
  c.t_tolerance = f.number("t_tolerance", c.t_tolerance);
  if (!(c.t_halfwidth > 0.0)) throw config_error("hadar.t_halfwidth: must be positive");
  if (!(c.t_step > 0.0)) throw config_error("hadar.t_step: must be positive");
  if (!(c.t_tolerance > 0.0)) throw config_error("hadar.t_tolerance: must be positive");
  f.finish();
  return c;
}

json to_json(const HadarConfig& c) {
  json j;
  if (c.t_lo && c.t_hi) j["t_range"] = {*c.t_lo, *c.t_hi};
  j["t_halfwidth"] = c.t_halfwidth;
  j["t_step"] = c.t_step;
  j["t_tolerance"] = c.t_tolerance;
  return j;
}

TesConfig tes_config_from_json(const json& j) {
  Fields f(j, "tes");
  TesConfig c;
  c.max_emissivity = f.number("max_emissivity", c.max_emissivity);
  c.v_step = f.number("v_step", c.v_step);
  c.clip_lo = f.number("clip_lo", c.clip_lo);
  c.clip_hi = f.number("clip_hi", c.clip_hi);
  c.basis_count = f.integer("basis_count", c.basis_count);
  if (!(c.max_emissivity > 0.0 && c.max_emissivity <= 1.0)) throw config_error("tes.max_emissivity: must lie in (0, 1]");
  if (!(c.v_step > 0.0 && c.v_step <= 1.0)) throw config_error("tes.v_step: must lie in (0, 1]");
  if (!(c.clip_lo > 0.0 && c.clip_lo < c.clip_hi && c.clip_hi < 1.0))
    throw config_error("tes.clip_lo/clip_hi: must satisfy 0 < lo < hi < 1");
  if (c.basis_count < 4) throw config_error("tes.basis_count: must be >= 4");
  f.finish();
  return c;
}

json to_json(const TesConfig& c) {
  return {{"max_emissivity", c.max_emissivity},
          {"v_step", c.v_step},
          {"clip_lo", c.clip_lo},
          {"clip_hi", c.clip_hi},
          {"basis_count", c.basis_count}};
}

RunConfig run_config_from_json(const json& j) {
  Fields f(j, "");
  RunConfig c;
  read_slot_fields(f, c.slot);
  if (f.has("hadar")) c.hadar = hadar_config_from_json(f.object("hadar"));
  if (f.has("tes")) c.tes = tes_config_from_json(f.object("tes"));
  f.finish();
  check([&] { c.slot.validate(c.slot.band_weights.size()); });
  return c;
}

json to_json(const RunConfig& c) {
  json j = to_json(c.slot);
  j["hadar"] = to_json(c.hadar);
  j["tes"] = to_json(c.tes);
  return j;
}

MaterialLibrary library_from_json(const json& j, const SpectralGrid& grid) {
  const json* list = &j;
  if (j.is_object()) {
    Fields f(j, "");
    list = &f.array("materials");
    f.finish();
  }
  if (!list->is_array()) throw config_error("library: expected an array of materials");
  if (list->empty()) throw config_error("materials: library is empty");
  MaterialLibrary lib;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const std::string path = "materials[" + std::to_string(i) + "]";
    Fields f((*list)[i], path);
    MaterialEntry entry;
    entry.name = f.string("name");
    auto e = f.numbers("emissivity");
    std::vector<double> nu = f.has("wavenumbers") ? f.numbers("wavenumbers")
                                                   : std::vector<double>(grid.values().begin(), grid.values().end());
    f.finish();
    if (nu.size() != e.size())
      throw config_error(path + ".emissivity: length " + std::to_string(e.size()) + " differs from wavenumbers length " +
                         std::to_string(nu.size()));
    SpectralGrid source;
    try {
      source = SpectralGrid(nu);
    } catch (const Error& err) {
      throw config_error(path + ".wavenumbers: " + err.what());
    }
    if (source == grid) {
      entry.emissivity = std::move(e);
    } else {
      try {
        entry.emissivity = interpolate_linear(source.values(), e, grid.values());
      } catch (const Error& err) {
        throw config_error(path + ".wavenumbers: " + err.what());
      }
      lib.resampled = true;
    }
    for (double v : entry.emissivity)
      if (!(v > 0.0 && v < 1.0)) throw config_error(path + ".emissivity: values must lie in (0, 1)");
    lib.entries.push_back(std::move(entry));
  }
  return lib;
}

json to_json(const MaterialLibrary& library, const SpectralGrid& grid) {
  json list = json::array();
  for (const auto& entry : library.entries)
    list.push_back({{"name", entry.name},
                    {"wavenumbers", std::vector<double>(grid.values().begin(), grid.values().end())},
                    {"emissivity", entry.emissivity}});
  return {{"materials", list}};
}

TruthSpec truth_from_json(const json& j) {
  Fields f(j, "");
  TruthSpec spec;
  spec.grid = grid_from(f);
  spec.truth.temperature = f.number("temperature");
  spec.truth.view_factor = f.number("view_factor");
  const std::size_t n = spec.grid.size();
  int sources = 0;
  if (f.has("emissivity")) {
    spec.truth.emissivity = f.numbers("emissivity");
    if (spec.truth.emissivity.size() != n)
      throw config_error("emissivity: has " + std::to_string(spec.truth.emissivity.size()) + " entries, grid has " +
                         std::to_string(n));
    ++sources;
  }
  if (f.has("beta")) {
    const auto beta = f.numbers("beta");
    if (beta.size() < 4) throw config_error("beta: needs at least 4 coefficients");
    spec.truth.emissivity = eval_spline(eval_basis_banded(make_basis(spec.grid, static_cast<int>(beta.size())), spec.grid), beta);
    ++sources;
  }
  if (f.has("constant")) {
    spec.truth.emissivity.assign(n, f.number("constant"));
    ++sources;
  }
  if (sources != 1) throw config_error("emissivity: give exactly one of 'emissivity', 'beta', 'constant'");
  f.finish();
  if (!(spec.truth.temperature > 0.0)) throw config_error("temperature: must be positive");
  if (!(spec.truth.view_factor >= 0.0 && spec.truth.view_factor <= 1.0))
    throw config_error("view_factor: must lie in [0, 1]");
  for (double e : spec.truth.emissivity)
    if (!(e > 0.0 && e < 1.0)) throw config_error("emissivity: values must lie in (0, 1)");
  return spec;
}

void write_scene(const SyntheticScene& scene, const SceneDescriptor& desc, const fs::path& path) {
  json j;
  j["magic"] = kSceneMagic;
  j["descriptor"] = to_json(desc);
  j["height"] = scene.height;
  j["width"] = scene.width;
  j["wavenumbers"] = std::vector<double>(scene.grid.values().begin(), scene.grid.values().end());
  j["basis"] = {{"lower", scene.basis.lower()}, {"upper", scene.basis.upper()}, {"count", scene.basis.size()}};
  j["temperature"] = scene.temperature;
  j["view_factor"] = scene.view_factor;
  j["labels"] = scene.labels;
  j["beta"] = scene.beta;
  j["regions"] = json::array();
  for (const auto& r : scene.regions) j["regions"].push_back({{"name", r.name}, {"beta", r.base_beta}});
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path.string());
  out << j.dump() << "\n";
  if (!out) throw io_error("failed writing " + path.string());
}

SyntheticScene read_scene(const fs::path& path) {
  json j;
  {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path.string());
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw format_error(path.string() + ": malformed JSON: " + e.what());
    }
  }
  try {
    Fields f(j, "");
    if (f.string("magic") != kSceneMagic) throw config_error(std::string("magic: expected ") + kSceneMagic);
    f.object("descriptor");
    SyntheticScene s;
    s.height = static_cast<int>(f.integer("height"));
    s.width = static_cast<int>(f.integer("width"));
    s.grid = SpectralGrid(f.numbers("wavenumbers"));
    Fields b(f.object("basis"), "basis");
    s.basis = make_basis(b.number("lower"), b.number("upper"), static_cast<int>(b.integer("count")));
    b.finish();
    s.temperature = f.numbers("temperature");
    s.view_factor = f.numbers("view_factor");
    for (const auto& v : f.array("labels")) {
      if (!v.is_number_integer()) throw config_error("labels: expected integers");
      s.labels.push_back(v.get<int>());
    }
    s.beta = f.numbers("beta");
    const json& regions = f.array("regions");
    for (std::size_t i = 0; i < regions.size(); ++i) {
      Fields r(regions[i], "regions[" + std::to_string(i) + "]");
      s.regions.push_back({r.string("name"), r.numbers("beta")});
      r.finish();
    }
    f.finish();
    const std::size_t n = static_cast<std::size_t>(s.height) * s.width;
    if (s.height <= 0 || s.width <= 0) throw config_error("height/width: must be positive");
    if (s.temperature.size() != n) throw config_error("temperature: expected height*width entries");
    if (s.view_factor.size() != n) throw config_error("view_factor: expected height*width entries");
    if (s.labels.size() != n) throw config_error("labels: expected height*width entries");
    if (s.beta.size() != n * static_cast<std::size_t>(s.basis.size()))
      throw config_error("beta: expected height*width*count entries");
    return s;
  } catch (const Error& e) {
    throw format_error(path.string() + ": " + e.what());
  }
}

}  // namespace tag

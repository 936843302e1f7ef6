// Command-line front end. Standard output carries machine-readable JSON or
// CSV; progress and warnings go to standard error.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "manifest.hpp"
#include "tag/cube_io.hpp"
#include "tag/error.hpp"
#include "tag/hadar.hpp"
#include "tag/parallel.hpp"
#include "tag/quality_metrics.hpp"
#include "tag/schema_io.hpp"
#include "tag/slot_solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using tagcli::Manifest;

namespace {

void progress(const std::string& msg) { std::cerr << "[tag] " << msg << std::endl; }
void warn(const std::string& msg) { std::cerr << "[tag] warning: " << msg << std::endl; }

fs::path with_suffix(const fs::path& base, const char* suffix) {
  fs::path p = base;
  p += suffix;
  return p;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw tag::io_error("cannot create directory " + dir.string() + ": " + ec.message());
}

void require_file(const fs::path& path) {
  if (!fs::exists(path)) throw tag::io_error("missing input file " + path.string());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

tag::AmbientSpectra load_ambient(const fs::path& path, const tag::SpectralGrid& grid, Manifest& manifest) {
  require_file(path);
  manifest.input(path);
  const auto file = tag::read_ambient_csv(path);
  const auto res = tag::resample_ambient(file, grid);
  manifest.config()["ambient_resampled"] = res.resampled;
  if (res.resampled) warn("ambient spectra resampled linearly onto the cube grid");
  if (res.ambient.degenerate()) warn("sky and ground spectra coincide; the view factor is not identifiable");
  return res.ambient;
}

tag::HyperCube load_cube(const fs::path& base, Manifest& manifest) {
  require_file(with_suffix(base, ".json"));
  auto cube = tag::read_cube(base);
  manifest.input(with_suffix(base, ".json"));
  manifest.input(with_suffix(base, ".bin"));
  return cube;
}

// Scalar map as SLOTMAP plus a 16-bit PNG preview.
void emit_map(const fs::path& dir, const std::string& name, const std::string& units, int h, int w,
              const std::vector<double>& values, Manifest& manifest, bool png = true) {
  tag::MapData map{h, w, name, units, values};
  tag::write_map(map, dir / name);
  manifest.output_pair(dir / name);
  if (png) {
    const fs::path png_path = dir / (name + ".png");
    const auto info = tag::write_map_png(values, h, w, png_path);
    if (info.constant) warn("map '" + name + "' is constant; PNG written as mid-gray");
    manifest.output(png_path);
    manifest.output(with_suffix(png_path, ".stretch.json"));
  }
}

template <class T>
std::vector<double> as_double(const std::vector<T>& v) {
  return {v.begin(), v.end()};
}

double rmse(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw tag::io_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

tag::RunConfig load_config(const std::optional<fs::path>& path, Manifest& manifest) {
  if (!path) return {};
  require_file(*path);
  manifest.input(*path);
  return tag::run_config_from_json(tag::load_json(*path));
}

// --- subcommands ---------------------------------------------------------

struct AmbientArgs {
  double start = 870.0, stop = 1269.0, step = 6.0;
  double sky = 260.0, ground = 290.0;
  fs::path out;
};

void cmd_ambient(const AmbientArgs& a) {
  Manifest manifest("ambient");
  const auto grid = tag::wavenumber_grid(a.start, a.stop, a.step);
  tag::write_ambient_csv({grid, tag::default_ambient(grid, a.sky, a.ground)}, a.out);
  manifest.config() = {{"grid", {{"start", a.start}, {"stop", a.stop}, {"step", a.step}}},
                       {"sky_temperature", a.sky},
                       {"ground_temperature", a.ground}};
  manifest.output(a.out);
  manifest.write(with_suffix(a.out, ".manifest.json"));
  std::cout << json{{"ambient", a.out.string()}, {"bands", grid.size()}}.dump() << std::endl;
}

struct SynthArgs {
  fs::path spec, out;
};

void cmd_synth(const SynthArgs& a) {
  Manifest manifest("synth");
  require_file(a.spec);
  manifest.input(a.spec);
  const auto desc = tag::scene_descriptor_from_json(tag::load_json(a.spec));
  manifest.config() = tag::to_json(desc);
  progress("generating " + std::to_string(desc.height) + "x" + std::to_string(desc.width) + " scene");
  const auto scene = tag::make_synthetic_scene(desc);
  ensure_dir(a.out);

  const fs::path scene_path = a.out / "scene.json";
  tag::write_scene(scene, desc, scene_path);
  manifest.output(scene_path);
  emit_map(a.out, "truth_T", "K", scene.height, scene.width, scene.temperature, manifest);
  emit_map(a.out, "truth_V", "1", scene.height, scene.width, scene.view_factor, manifest);
  emit_map(a.out, "labels", "index", scene.height, scene.width, as_double(scene.labels), manifest, false);

  tag::HyperCube e(scene.height, scene.width, scene.grid);
  e.provenance.generator = tagcli::kVersion;
  for (std::size_t p = 0; p < scene.pixels(); ++p) {
    const auto ep = scene.pixel_emissivity(p);
    std::copy(ep.begin(), ep.end(), e.pixel(p).begin());
  }
  tag::write_cube(e, a.out / "truth_emissivity");
  manifest.output_pair(a.out / "truth_emissivity");
  manifest.write(a.out / "manifest.json");
  std::cout << json{{"scene", scene_path.string()}, {"pixels", scene.pixels()}, {"regions", scene.regions.size()}}.dump()
            << std::endl;
}

struct RenderArgs {
  fs::path scene, ambient, out;
  std::optional<double> snr;
  std::uint64_t seed = 0;
};

void cmd_render(const RenderArgs& a) {
  Manifest manifest("render");
  require_file(a.scene);
  manifest.input(a.scene);
  const auto scene = tag::read_scene(a.scene);
  const auto ambient = load_ambient(a.ambient, scene.grid, manifest);
  progress("rendering " + std::to_string(scene.pixels()) + " pixels");
  auto cube = tag::render_scene(scene, ambient);
  cube.provenance.generator = tagcli::kVersion;
  if (a.snr) cube = tag::add_noise(cube, *a.snr, a.seed);
  manifest.config() = {{"snr_db", a.snr ? json(*a.snr) : json(nullptr)}, {"seed", a.seed}};
  if (a.out.has_parent_path()) ensure_dir(a.out.parent_path());
  tag::write_cube(cube, a.out);
  manifest.output_pair(a.out);
  manifest.write(with_suffix(a.out, ".manifest.json"));
  std::cout << json{{"cube", a.out.string()}, {"noisy", cube.provenance.noisy}, {"rms", tag::cube_rms(cube)}}.dump()
            << std::endl;
}

struct DecomposeArgs {
  fs::path cube, ambient, out;
  std::optional<fs::path> config;
  std::optional<double> lambda;
};

void cmd_decompose(const DecomposeArgs& a) {
  Manifest manifest("decompose");
  auto config = load_config(a.config, manifest);
  if (a.lambda) config.slot.lambda = *a.lambda;
  const auto cube = load_cube(a.cube, manifest);
  const auto ambient = load_ambient(a.ambient, cube.grid, manifest);
  config.slot.validate(cube.bands());
  manifest.config()["slot"] = tag::to_json(config.slot);

  progress("decomposing " + std::to_string(cube.pixels()) + " pixels on " + std::to_string(tag::max_threads()) +
           " thread(s)");
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = tag::decompose_cube(cube, ambient, config.slot);
  const double secs = seconds_since(t0);
  progress("done in " + std::to_string(secs) + " s");

  ensure_dir(a.out);
  const int h = cube.height, w = cube.width;
  emit_map(a.out, "T", "K", h, w, res.temperature, manifest);
  emit_map(a.out, "V", "1", h, w, res.view_factor, manifest);
  emit_map(a.out, "residual", "W m-2 sr-1 (cm-1)-1", h, w, res.residual_norm, manifest);
  emit_map(a.out, "objective", "", h, w, res.objective, manifest, false);
  emit_map(a.out, "v_identifiable", "flag", h, w, as_double(res.v_identifiable), manifest, false);
  emit_map(a.out, "emissivity_at_bound", "flag", h, w, as_double(res.emissivity_at_bound), manifest, false);

  const auto basis = tag::make_basis(cube.grid, config.slot.basis_count);
  tag::HyperCube beta(h, w, tag::SpectralGrid(basis.greville()));
  beta.data = res.beta;
  beta.provenance.generator = tagcli::kVersion;
  tag::write_cube(beta, a.out / "beta");
  manifest.output_pair(a.out / "beta");

  const auto phi = tag::eval_basis_banded(basis, cube.grid);
  tag::HyperCube e(h, w, cube.grid);
  e.provenance.generator = tagcli::kVersion;
  for (std::size_t p = 0; p < res.pixels(); ++p) {
    const auto ep = tag::eval_spline(phi, res.pixel_beta(p));
    std::copy(ep.begin(), ep.end(), e.pixel(p).begin());
  }
  tag::write_cube(e, a.out / "emissivity");
  manifest.output_pair(a.out / "emissivity");
  manifest.write(a.out / "manifest.json");

  std::size_t unidentifiable = 0, at_bound = 0;
  for (std::size_t p = 0; p < res.pixels(); ++p) {
    unidentifiable += res.v_identifiable[p] == 0;
    at_bound += res.emissivity_at_bound[p] != 0;
  }
  if (unidentifiable > 0) warn(std::to_string(unidentifiable) + " pixel(s) with unidentifiable view factor");
  std::cout << json{{"pixels", res.pixels()},
                    {"seconds", secs},
                    {"v_unidentifiable", unidentifiable},
                    {"emissivity_at_bound", at_bound}}
                   .dump()
            << std::endl;
}

struct HadarArgs {
  fs::path cube, ambient, library, out;
  std::optional<fs::path> config;
};

void cmd_hadar(const HadarArgs& a) {
  Manifest manifest("hadar");
  const auto config = load_config(a.config, manifest);
  const auto cube = load_cube(a.cube, manifest);
  const auto ambient = load_ambient(a.ambient, cube.grid, manifest);
  require_file(a.library);
  manifest.input(a.library);
  const auto library = tag::library_from_json(tag::load_json(a.library), cube.grid);
  if (library.resampled) warn("library curves resampled linearly onto the cube grid");
  manifest.config()["hadar"] = tag::to_json(config.hadar);
  manifest.config()["library_resampled"] = library.resampled;

  progress("classifying " + std::to_string(cube.pixels()) + " pixels against " + std::to_string(library.size()) +
           " material(s)");
  const auto res = tag::decompose_cube_hadar(cube, library, ambient, config.hadar);
  ensure_dir(a.out);
  const int h = cube.height, w = cube.width;
  emit_map(a.out, "material", "index", h, w, as_double(res.material), manifest, false);
  emit_map(a.out, "T", "K", h, w, res.temperature, manifest);
  emit_map(a.out, "V", "1", h, w, res.view_factor, manifest);
  emit_map(a.out, "residual", "", h, w, res.residual, manifest, false);
  manifest.write(a.out / "manifest.json");

  std::vector<std::size_t> counts(library.size(), 0);
  for (int m : res.material) ++counts[static_cast<std::size_t>(m)];
  json summary{{"pixels", cube.pixels()}, {"library_resampled", library.resampled}, {"materials", json::object()}};
  for (std::size_t i = 0; i < library.size(); ++i) summary["materials"][library.entries[i].name] = counts[i];
  std::cout << summary.dump() << std::endl;
}

struct LibraryArgs {
  fs::path cube, ambient, labels, out;
  std::optional<fs::path> config;
};

void cmd_library(const LibraryArgs& a) {
  Manifest manifest("library");
  const auto config = load_config(a.config, manifest);
  const auto cube = load_cube(a.cube, manifest);
  const auto ambient = load_ambient(a.ambient, cube.grid, manifest);
  require_file(with_suffix(a.labels, ".json"));
  const auto labels = tag::read_map(a.labels);
  manifest.input(with_suffix(a.labels, ".json"));
  manifest.input(with_suffix(a.labels, ".bin"));
  if (labels.height != cube.height || labels.width != cube.width)
    throw tag::format_error(a.labels.string() + ": label map shape differs from the cube");
  manifest.config()["tes"] = tag::to_json(config.tes);

  std::map<int, std::vector<unsigned char>> masks;
  for (std::size_t p = 0; p < labels.values.size(); ++p) {
    const int label = static_cast<int>(std::lround(labels.values[p]));
    auto& m = masks[label];
    if (m.empty()) m.assign(labels.values.size(), 0);
    m[p] = 1;
  }
  tag::MaterialLibrary lib;
  json details = json::array();
  for (const auto& [label, mask] : masks) {
    progress("estimating region " + std::to_string(label));
    const auto est = tag::estimate_library_emissivity(cube, mask, ambient, config.tes);
    lib.entries.push_back({"region" + std::to_string(label), est.emissivity});
    details.push_back({{"name", "region" + std::to_string(label)}, {"iqr", est.iqr}, {"excluded_bands", est.excluded_bands}});
  }
  if (a.out.has_parent_path()) ensure_dir(a.out.parent_path());
  write_json(a.out, tag::to_json(lib, cube.grid));
  manifest.output(a.out);
  manifest.config()["regions"] = details;
  manifest.write(with_suffix(a.out, ".manifest.json"));
  std::cout << json{{"library", a.out.string()}, {"materials", lib.size()}}.dump() << std::endl;
}

struct DegeneracyArgs {
  fs::path truth;
  std::optional<fs::path> ambient, out;
  double temperature = 0.0, view_factor = 0.0;
};

void cmd_degeneracy(const DegeneracyArgs& a) {
  Manifest manifest("degeneracy");
  require_file(a.truth);
  manifest.input(a.truth);
  const auto spec = tag::truth_from_json(tag::load_json(a.truth));
  const auto ambient = a.ambient ? load_ambient(*a.ambient, spec.grid, manifest) : tag::default_ambient(spec.grid);
  const auto cf = tag::counterfactual_emissivity(spec.truth, a.temperature, a.view_factor, ambient, spec.grid);

  // Forward render of both triplets; computed directly so that inadmissible
  // curves (outside [0, 1]) can still be checked.
  const auto s = tag::render_pixel(spec.truth, ambient, spec.grid);
  const auto x2 = tag::texture_radiance(a.view_factor, ambient);
  double worst = 0.0;
  for (std::size_t i = 0; i < spec.grid.size(); ++i) {
    const double b2 = tag::planck(a.temperature, spec.grid[i]);
    const double s2 = cf.emissivity[i] * b2 + (1.0 - cf.emissivity[i]) * x2[i];
    worst = std::max(worst, std::abs(s2 - s[i]) / std::abs(s[i]));
  }
  json report{{"temperature", a.temperature},
              {"view_factor", a.view_factor},
              {"wavenumbers", std::vector<double>(spec.grid.values().begin(), spec.grid.values().end())},
              {"emissivity", cf.emissivity},
              {"admissible", cf.admissible},
              {"max_relative_discrepancy", worst}};
  if (a.out) {
    write_json(*a.out, report);
    manifest.output(*a.out);
    manifest.config() = {{"temperature", a.temperature}, {"view_factor", a.view_factor}};
    manifest.write(with_suffix(*a.out, ".manifest.json"));
  }
  std::cout << report.dump() << std::endl;
}

tag::GrayImage load_image(const fs::path& path, Manifest& manifest) {
  if (path.extension() == ".png") {
    require_file(path);
    manifest.input(path);
    const auto map = tag::read_map_png(path);
    return tag::GrayImage(map.height, map.width, map.values);
  }
  require_file(with_suffix(path, ".json"));
  manifest.input(with_suffix(path, ".json"));
  manifest.input(with_suffix(path, ".bin"));
  const auto map = tag::read_map(path);
  return tag::GrayImage(map.height, map.width, map.values);
}

struct MetricsArgs {
  std::vector<fs::path> images;
  std::optional<fs::path> mask, out;
  bool raw = false;
};

void cmd_metrics(const MetricsArgs& a) {
  Manifest manifest("metrics");
  std::vector<unsigned char> mask;
  if (a.mask) {
    const auto m = load_image(*a.mask, manifest);
    for (double v : m.values) mask.push_back(v != 0.0);
  }
  std::vector<tag::NamedImage> images;
  for (const auto& p : a.images) {
    auto img = load_image(p, manifest);
    if (!mask.empty()) img = tag::GrayImage(img.height, img.width, img.values, mask);
    images.push_back({p.stem().string(), a.raw ? img : tag::stretch(img)});
  }
  manifest.config() = {{"stretch", a.raw ? "none" : "min-max to [0, 255]"}};
  const auto rows = tag::metrics_report(images, mask);
  const auto csv = tag::metrics_csv(rows);
  if (a.out) {
    std::ofstream out(*a.out);
    if (!out) throw tag::io_error("cannot write " + a.out->string());
    out << csv;
    out.close();
    manifest.output(*a.out);
    manifest.write(with_suffix(*a.out, ".manifest.json"));
  }
  std::cerr << tag::metrics_table(rows);
  std::cout << csv;
}

struct CompareArgs {
  fs::path scene, ambient, library, out;
  std::optional<fs::path> config;
  std::optional<double> snr;
  std::uint64_t seed = 0;
};

void cmd_compare(const CompareArgs& a) {
  Manifest manifest("compare");
  const auto config = load_config(a.config, manifest);
  require_file(a.scene);
  manifest.input(a.scene);
  const auto scene = tag::read_scene(a.scene);
  const auto ambient = load_ambient(a.ambient, scene.grid, manifest);
  require_file(a.library);
  manifest.input(a.library);
  const auto library = tag::library_from_json(tag::load_json(a.library), scene.grid);
  if (library.resampled) warn("library curves resampled linearly onto the scene grid");
  manifest.config() = tag::to_json(config);
  manifest.config()["snr_db"] = a.snr ? json(*a.snr) : json(nullptr);
  manifest.config()["seed"] = a.seed;
  manifest.config()["library_resampled"] = library.resampled;

  auto cube = tag::render_scene(scene, ambient);
  if (a.snr) cube = tag::add_noise(cube, *a.snr, a.seed);
  progress("SLOT on " + std::to_string(cube.pixels()) + " pixels");
  const auto slot = tag::decompose_cube(cube, ambient, config.slot);
  progress("HADAR on " + std::to_string(cube.pixels()) + " pixels");
  const auto hadar = tag::decompose_cube_hadar(cube, library, ambient, config.hadar);

  std::size_t wrong = 0;
  for (std::size_t p = 0; p < scene.pixels(); ++p) wrong += hadar.material[p] != scene.labels[p];
  const double mis = static_cast<double>(wrong) / static_cast<double>(scene.pixels());

  const int h = scene.height, w = scene.width;
  const auto ir = tag::band_average(cube);
  const auto rows = tag::metrics_report({{"SLOT-V", tag::stretch(tag::GrayImage(h, w, slot.view_factor))},
                                         {"HADAR-V", tag::stretch(tag::GrayImage(h, w, hadar.view_factor))},
                                         {"IR", tag::stretch(tag::GrayImage(h, w, ir))}},
                                        {});
  json report{{"slot", {{"v_rmse", rmse(slot.view_factor, scene.view_factor)}, {"t_rmse", rmse(slot.temperature, scene.temperature)}}},
              {"hadar",
               {{"v_rmse", rmse(hadar.view_factor, scene.view_factor)},
                {"t_rmse", rmse(hadar.temperature, scene.temperature)},
                {"misclassification", mis}}},
              {"metrics", json::array()}};
  for (const auto& r : rows) report["metrics"].push_back({{"name", r.name}, {"EN", r.en}, {"AG", r.ag}, {"SF", r.sf}, {"SD", r.sd}});

  ensure_dir(a.out);
  emit_map(a.out, "slot_V", "1", h, w, slot.view_factor, manifest);
  emit_map(a.out, "hadar_V", "1", h, w, hadar.view_factor, manifest);
  emit_map(a.out, "hadar_material", "index", h, w, as_double(hadar.material), manifest, false);
  emit_map(a.out, "ir", "W m^-2 sr^-1 (cm^-1)^-1", h, w, ir, manifest);
  write_json(a.out / "report.json", report);
  manifest.output(a.out / "report.json");
  {
    std::ofstream out(a.out / "metrics.csv");
    out << tag::metrics_csv(rows);
  }
  manifest.output(a.out / "metrics.csv");
  manifest.write(a.out / "manifest.json");
  std::cerr << tag::metrics_table(rows);
  std::cout << report.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temperature, emissivity and texture decomposition of thermal hyperspectral cubes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tagcli::kVersion);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads for per-pixel kernels (default: all cores)")
      ->check(CLI::NonNegativeNumber);

  AmbientArgs amb;
  auto* c_amb = app.add_subcommand("ambient", "Write the default two-source ambient spectra as CSV");
  c_amb->add_option("--start", amb.start, "First wavenumber, cm^-1")->capture_default_str();
  c_amb->add_option("--stop", amb.stop, "Last wavenumber, cm^-1")->capture_default_str();
  c_amb->add_option("--step", amb.step, "Grid step, cm^-1")->capture_default_str();
  c_amb->add_option("--sky-temperature", amb.sky, "Sky temperature, K (night: 240)")->capture_default_str();
  c_amb->add_option("--ground-temperature", amb.ground, "Ground temperature, K")->capture_default_str();
  c_amb->add_option("--out", amb.out, "Output CSV")->required();

  SynthArgs syn;
  auto* c_syn = app.add_subcommand("synth", "Generate a synthetic ground-truth scene");
  c_syn->add_option("--spec", syn.spec, "Scene descriptor JSON")->required();
  c_syn->add_option("--out", syn.out, "Output directory")->required();

  RenderArgs ren;
  auto* c_ren = app.add_subcommand("render", "Render a scene to a radiance cube");
  c_ren->add_option("--scene", ren.scene, "scene.json written by synth")->required();
  c_ren->add_option("--ambient", ren.ambient, "Ambient CSV")->required();
  c_ren->add_option("--snr", ren.snr, "Add Gaussian noise at this SNR in dB");
  c_ren->add_option("--seed", ren.seed, "Noise seed")->capture_default_str();
  c_ren->add_option("--out", ren.out, "Output cube base path")->required();

  DecomposeArgs dec;
  auto* c_dec = app.add_subcommand("decompose", "SLOT decomposition of a cube");
  c_dec->add_option("--cube", dec.cube, "Cube base path")->required();
  c_dec->add_option("--ambient", dec.ambient, "Ambient CSV")->required();
  c_dec->add_option("--config", dec.config, "Config JSON");
  c_dec->add_option("--lambda", dec.lambda, "Override the smoothness weight");
  c_dec->add_option("--out", dec.out, "Output directory")->required();

  HadarArgs had;
  auto* c_had = app.add_subcommand("hadar", "Library-based decomposition of a cube");
  c_had->add_option("--cube", had.cube, "Cube base path")->required();
  c_had->add_option("--ambient", had.ambient, "Ambient CSV")->required();
  c_had->add_option("--library", had.library, "Material library JSON")->required();
  c_had->add_option("--config", had.config, "Config JSON");
  c_had->add_option("--out", had.out, "Output directory")->required();

  LibraryArgs lib;
  auto* c_lib = app.add_subcommand("library", "Estimate a material library from labelled regions");
  c_lib->add_option("--cube", lib.cube, "Cube base path")->required();
  c_lib->add_option("--ambient", lib.ambient, "Ambient CSV")->required();
  c_lib->add_option("--labels", lib.labels, "Label map base path")->required();
  c_lib->add_option("--config", lib.config, "Config JSON");
  c_lib->add_option("--out", lib.out, "Output library JSON")->required();

  DegeneracyArgs deg;
  auto* c_deg = app.add_subcommand("degeneracy", "Counterfactual emissivity for a shifted (T, V)");
  c_deg->add_option("--truth", deg.truth, "Pixel truth JSON")->required();
  c_deg->add_option("--temperature", deg.temperature, "Counterfactual temperature, K")->required();
  c_deg->add_option("--view-factor", deg.view_factor, "Counterfactual view factor")->required();
  c_deg->add_option("--ambient", deg.ambient, "Ambient CSV (default: built-in ambient)");
  c_deg->add_option("--out", deg.out, "Report JSON");

  MetricsArgs met;
  auto* c_met = app.add_subcommand("metrics", "EN/AG/SF/SD table for maps");
  c_met->add_option("--image", met.images, "Map base path or 16-bit PNG (repeatable)")->required();
  c_met->add_option("--mask", met.mask, "Mask map (nonzero = inside)");
  c_met->add_option("--out", met.out, "Output CSV");
  c_met->add_flag("--raw", met.raw, "Use values as-is instead of stretching to [0, 255]");

  CompareArgs cmp;
  auto* c_cmp = app.add_subcommand("compare", "SLOT and HADAR side by side on a rendered scene");
  c_cmp->add_option("--scene", cmp.scene, "scene.json written by synth")->required();
  c_cmp->add_option("--ambient", cmp.ambient, "Ambient CSV")->required();
  c_cmp->add_option("--library", cmp.library, "Material library JSON")->required();
  c_cmp->add_option("--config", cmp.config, "Config JSON");
  c_cmp->add_option("--snr", cmp.snr, "Add noise at this SNR in dB");
  c_cmp->add_option("--seed", cmp.seed, "Noise seed")->capture_default_str();
  c_cmp->add_option("--out", cmp.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    tag::set_threads(threads);
    if (*c_amb) cmd_ambient(amb);
    if (*c_syn) cmd_synth(syn);
    if (*c_ren) cmd_render(ren);
    if (*c_dec) cmd_decompose(dec);
    if (*c_had) cmd_hadar(had);
    if (*c_lib) cmd_library(lib);
    if (*c_deg) cmd_degeneracy(deg);
    if (*c_met) cmd_metrics(met);
    if (*c_cmp) cmd_compare(cmp);
  } catch (const tag::Error& e) {
    std::cerr << "[tag] error: " << e.what() << std::endl;
    return tag::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "[tag] error: " << e.what() << std::endl;
    return 3;
  }
  return 0;
}

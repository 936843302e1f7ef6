#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "scenes.hpp"
#include "tag/error.hpp"
#include "tag/schema_io.hpp"

using namespace tag;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string config_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    return e.what();
  }
  FAIL("expected a config error");
  return {};
}

fs::path examples() { return fs::path(TAG_DOCS_DIR); }

}  // namespace

TEST_CASE("scene descriptor round trip") {
  auto d = scenes::two_material(0.1, 0.02, 16);
  d.view_pattern = ViewPattern::Ramp;
  d.intra_shape = IntraShape::Curved;
  d.v_ripple = 0.1;
  const auto back = scene_descriptor_from_json(to_json(d));
  CHECK(back.height == d.height);
  CHECK(back.seed == d.seed);
  CHECK(back.layout == RegionLayout::Disc);
  CHECK(back.view_pattern == ViewPattern::Ramp);
  CHECK(back.intra_shape == IntraShape::Curved);
  CHECK(back.v_ripple == d.v_ripple);
  CHECK(back.sigma_intra == d.sigma_intra);
  REQUIRE(back.regions.size() == 2);
  CHECK(back.regions[1].name == "object");
  CHECK(back.regions[1].base_beta == d.regions[1].base_beta);
}

TEST_CASE("parametric regions expand to the same coefficients as parametric_beta") {
  const json j = {{"height", 16}, {"width", 16},
                  {"regions", {{{"name", "panel"}, {"mean", 0.9}, {"tilt", 0.03}, {"dip", 0.04}}}}};
  const auto d = scene_descriptor_from_json(j);
  CHECK(d.regions[0].base_beta == parametric_beta(scenes::default_basis(), 0.9, 0.03, 0.04));
}

TEST_CASE("descriptor errors name the field") {
  CHECK(config_message([] { scene_descriptor_from_json(json{{"heigth", 8}, {"regions", json::array()}}); }).find("heigth") !=
        std::string::npos);
  CHECK(config_message([] {
          scene_descriptor_from_json(json{{"regions", {{{"name", "x"}, {"mean", "high"}}}}});
        }).find("regions[0].mean") != std::string::npos);
  CHECK(config_message([] {
          scene_descriptor_from_json(json{{"layout", "spiral"}, {"regions", {{{"mean", 0.9}}}}});
        }).find("layout") != std::string::npos);
  CHECK(config_message([] {
          scene_descriptor_from_json(json{{"view_factor", {{"pattern", "ramp"}, {"slope", 2}}}, {"regions", {{{"mean", 0.9}}}}});
        }).find("view_factor.slope") != std::string::npos);
}

TEST_CASE("run configuration round trip and defaults") {
  const auto defaults = run_config_from_json(json::object());
  CHECK(defaults.slot.lambda == SlotConfig{}.lambda);
  CHECK(defaults.tes.max_emissivity == 1.0);

  RunConfig c;
  c.slot.lambda = 1e-3;
  c.slot.t_lo = 280.0;
  c.slot.t_hi = 330.0;
  c.slot.band_weights.assign(67, 2.0);
  c.hadar.t_step = 0.5;
  c.tes.max_emissivity = 0.97;
  const auto back = run_config_from_json(to_json(c));
  CHECK(back.slot.lambda == 1e-3);
  CHECK(*back.slot.t_lo == 280.0);
  CHECK(*back.slot.t_hi == 330.0);
  CHECK(back.slot.band_weights == c.slot.band_weights);
  CHECK(back.hadar.t_step == 0.5);
  CHECK(back.tes.max_emissivity == 0.97);
}

TEST_CASE("configuration errors") {
  CHECK(config_message([] { run_config_from_json(json{{"lamda", 0.1}}); }).find("lamda") != std::string::npos);
  CHECK(config_message([] { run_config_from_json(json{{"lambda", -0.1}}); }).find("lambda") != std::string::npos);
  CHECK(config_message([] { run_config_from_json(json{{"t_range", {300.0}}}); }).find("t_range") != std::string::npos);
  CHECK(config_message([] { run_config_from_json(json{{"hadar", {{"t_stp", 1.0}}}}); }).find("hadar.t_stp") !=
        std::string::npos);
  CHECK(config_message([] { run_config_from_json(json{{"tes", {{"max_emissivity", "one"}}}}); }).find("tes.max_emissivity") !=
        std::string::npos);
}

TEST_CASE("material library parsing") {
  const auto grid = wavenumber_grid(900.0, 1000.0, 50.0);  // 900, 950, 1000
  SUBCASE("same grid is taken as is") {
    const auto lib = library_from_json(json{{"materials", {{{"name", "a"}, {"emissivity", {0.9, 0.8, 0.7}}}}}}, grid);
    CHECK_FALSE(lib.resampled);
    CHECK(lib.entries[0].emissivity == std::vector<double>{0.9, 0.8, 0.7});
  }
  SUBCASE("another grid is resampled and flagged") {
    const json j = json::array({{{"name", "a"}, {"wavenumbers", {800.0, 1100.0}}, {"emissivity", {0.6, 0.9}}}});
    const auto lib = library_from_json(j, grid);
    CHECK(lib.resampled);
    CHECK(lib.entries[0].emissivity[0] == doctest::Approx(0.7));
    CHECK(lib.entries[0].emissivity[2] == doctest::Approx(0.8));
  }
  SUBCASE("round trip") {
    MaterialLibrary lib{{{"a", {0.9, 0.8, 0.7}}, {"b", {0.5, 0.5, 0.5}}}};
    const auto back = library_from_json(to_json(lib, grid), grid);
    REQUIRE(back.size() == 2);
    CHECK(back.entries[1].name == "b");
    CHECK(back.entries[1].emissivity == lib.entries[1].emissivity);
  }
  SUBCASE("errors") {
    CHECK(config_message([&] { library_from_json(json::array(), grid); }).find("empty") != std::string::npos);
    CHECK(config_message([&] {
            library_from_json(json::array({{{"name", "a"}, {"emissivity", {0.9, 1.2, 0.7}}}}), grid);
          }).find("materials[0].emissivity") != std::string::npos);
    CHECK(config_message([&] {
            library_from_json(json::array({{{"name", "a"}, {"wavenumbers", {950.0, 1000.0}}, {"emissivity", {0.9, 0.8}}}}), grid);
          }).find("materials[0].wavenumbers") != std::string::npos);
    CHECK(config_message([&] {
            library_from_json(json::array({{{"name", "a"}, {"emissivity", {0.9, 0.8}}}}), grid);
          }).find("length") != std::string::npos);
  }
}

TEST_CASE("pixel truth parsing") {
  const auto spec = truth_from_json(json{{"temperature", 305.0}, {"view_factor", 0.4}, {"constant", 0.9}});
  CHECK(spec.grid.size() == 67);
  CHECK(spec.truth.emissivity == std::vector<double>(67, 0.9));
  const auto wn = truth_from_json(json{{"wavenumbers", {900.0, 1000.0}}, {"temperature", 300.0}, {"view_factor", 0.0},
                                       {"emissivity", {0.5, 0.6}}});
  CHECK(wn.grid.size() == 2);
  CHECK(config_message([] {
          truth_from_json(json{{"temperature", 300.0}, {"view_factor", 0.5}, {"constant", 0.9}, {"beta", {0.9, 0.9, 0.9, 0.9}}});
        }).find("exactly one") != std::string::npos);
  CHECK(config_message([] { truth_from_json(json{{"temperature", 300.0}, {"view_factor", 1.5}, {"constant", 0.9}}); })
            .find("view_factor") != std::string::npos);
}

TEST_CASE("scene files keep every field at full precision") {
  const auto d = scenes::round_trip(12);
  const auto scene = make_synthetic_scene(d);
  const auto path = fs::temp_directory_path() / ("tag_scene_" + std::to_string(std::random_device{}()) + ".json");
  write_scene(scene, d, path);
  const auto back = read_scene(path);
  fs::remove(path);
  CHECK(back.height == scene.height);
  CHECK(back.grid == scene.grid);
  CHECK(back.basis.size() == scene.basis.size());
  CHECK(back.temperature == scene.temperature);
  CHECK(back.view_factor == scene.view_factor);
  CHECK(back.beta == scene.beta);
  CHECK(back.labels == scene.labels);
}

TEST_CASE("worked examples parse") {
  for (const char* name : {"scene_round_trip.json", "scene_uniform_material.json", "scene_uniform_regime.json",
                           "scene_boundary_regime.json"}) {
    CAPTURE(name);
    const auto d = scene_descriptor_from_json(load_json(examples() / name));
    CHECK_NOTHROW(make_synthetic_scene(d));
  }
  CHECK_NOTHROW(run_config_from_json(load_json(examples() / "config_default.json")));
  CHECK_NOTHROW(truth_from_json(load_json(examples() / "truth_pixel.json")));
  const auto grid = wavenumber_grid(870.0, 1269.0, 6.0);
  CHECK(library_from_json(load_json(examples() / "library_uniform_regime.json"), grid).size() == 2);
}

TEST_CASE("malformed JSON is a config error") {
  const auto path = fs::temp_directory_path() / ("tag_bad_" + std::to_string(std::random_device{}()) + ".json");
  std::ofstream(path) << "{\"lambda\": ";
  CHECK_FALSE(config_message([&] { load_json(path); }).empty());
  fs::remove(path);
}

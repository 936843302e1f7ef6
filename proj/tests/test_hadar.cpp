#include <doctest.h>

#include <cmath>
#include <random>

#include "scenes.hpp"
#include "tag/error.hpp"
#include "tag/hadar.hpp"

using namespace tag;

namespace {

struct Fixture {
  SpectralGrid grid = wavenumber_grid(870.0, 1269.0, 6.0);
  AmbientSpectra ambient = default_ambient(grid);

  std::vector<double> curve(double mean, double slope, double dip = 0.0) const {
    std::vector<double> e;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double s = (grid[i] - 1068.0) / 198.0;
      const double z = (grid[i] - 1050.0) / 50.0;
      e.push_back(mean + slope * s - dip * std::exp(-0.5 * z * z));
    }
    return e;
  }
  std::vector<double> render(double t, double v, const std::vector<double>& e) const {
    return render_pixel(PixelTruth{t, e, v}, ambient, grid).values;
  }
};

MaterialLibrary library_from_scene(const SyntheticScene& scene) {
  MaterialLibrary lib;
  for (const auto& region : scene.regions) {
    MaterialEntry entry{region.name, {}};
    for (std::size_t i = 0; i < scene.grid.size(); ++i) entry.emissivity.push_back(eval_spline(scene.basis, region.base_beta, scene.grid[i]));
    lib.entries.push_back(entry);
  }
  return lib;
}

}  // namespace

TEST_CASE("fit with the true curve recovers temperature and view factor") {
  Fixture f;
  const auto e = f.curve(0.9, 0.03, 0.05);
  for (auto [t, v] : {std::pair{305.0, 0.4}, std::pair{297.3, 0.85}, std::pair{309.9, 0.1}}) {
    const auto fit = fit_material(f.render(t, v, e), e, f.ambient, f.grid);
    CHECK(fit.temperature == doctest::Approx(t).epsilon(1e-8));
    CHECK(std::abs(fit.view_factor - v) < 1e-6);
    CHECK(fit.residual < 1e-16);
    CHECK(fit.v_identifiable);
  }
}

TEST_CASE("a wrong curve leaves a larger residual than the true one") {
  Fixture f;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const auto truth = f.curve(0.8 + 0.15 * u(rng), 0.05 * (u(rng) - 0.5), 0.06 * u(rng));
    const auto wrong = f.curve(0.8 + 0.15 * u(rng), 0.05 * (u(rng) - 0.5), 0.06 * u(rng) + 0.02);
    const auto s = f.render(296.0 + 12.0 * u(rng), u(rng), truth);
    const auto a = fit_material(s, truth, f.ambient, f.grid);
    const auto b = fit_material(s, wrong, f.ambient, f.grid);
    CHECK(b.residual > a.residual);
  }
}

TEST_CASE("material_residual agrees with fit_material at the fitted point") {
  Fixture f;
  const auto e = f.curve(0.9, 0.02);
  const auto s = f.render(301.0, 0.3, f.curve(0.88, 0.0, 0.03));
  const auto fit = fit_material(s, e, f.ambient, f.grid);
  CHECK(material_residual(s, e, f.ambient, f.grid, fit.temperature, fit.view_factor) ==
        doctest::Approx(fit.residual).epsilon(1e-12));
  CHECK(fit.view_factor >= 0.0);
  CHECK(fit.view_factor <= 1.0);
}

TEST_CASE("classification picks the minimum residual and breaks ties low") {
  Fixture f;
  const auto a = f.curve(0.95, 0.0);
  const auto b = f.curve(0.85, 0.02, 0.05);
  const auto s = f.render(303.0, 0.5, b);
  MaterialLibrary lib{{{"a", a}, {"b", b}}};
  CHECK(classify_pixel(s, lib, f.ambient, f.grid).index == 1);
  MaterialLibrary twins{{{"first", b}, {"second", b}}};
  CHECK(classify_pixel(s, twins, f.ambient, f.grid).index == 0);
}

TEST_CASE("library validation") {
  MaterialLibrary empty;
  CHECK_THROWS_AS(empty.validate(67), Error);
  MaterialLibrary short_entry{{{"x", std::vector<double>(5, 0.9)}}};
  CHECK_THROWS_AS(short_entry.validate(67), Error);
  MaterialLibrary out_of_range{{{"x", std::vector<double>(67, 1.0)}}};
  CHECK_THROWS_AS(out_of_range.validate(67), Error);
  MaterialLibrary ok{{{"x", std::vector<double>(67, 0.9)}}};
  CHECK_NOTHROW(ok.validate(67));
}

TEST_CASE("two materials with small intra-class variation classify cleanly") {
  const auto scene = make_synthetic_scene(scenes::two_material(0.10, 0.002));
  const auto amb = default_ambient(scene.grid);
  const auto cube = render_scene(scene, amb);
  const auto result = decompose_cube_hadar(cube, library_from_scene(scene), amb);
  std::size_t wrong = 0;
  for (std::size_t p = 0; p < cube.pixels(); ++p) wrong += result.material[p] != scene.labels[p];
  CHECK(static_cast<double>(wrong) / static_cast<double>(cube.pixels()) < 0.01);
}

TEST_CASE("hadar cube decomposition is identical serially and in parallel") {
  const auto scene = make_synthetic_scene(scenes::two_material(0.10, 0.02, 12));
  const auto amb = default_ambient(scene.grid);
  const auto cube = add_noise(render_scene(scene, amb), 40.0, 8);
  const auto lib = library_from_scene(scene);
  const auto a = decompose_cube_hadar(cube, lib, amb, {}, Exec::Serial);
  const auto b = decompose_cube_hadar(cube, lib, amb, {}, Exec::Parallel);
  CHECK(a.material == b.material);
  CHECK(a.temperature == b.temperature);
  CHECK(a.view_factor == b.view_factor);
  CHECK(a.residual == b.residual);
}

namespace {

double tes_worst_error(double peak, double max_emissivity) {
  auto d = scenes::round_trip(16);
  d.sigma_intra = 0.0;
  d.regions[0].base_beta = parametric_beta(scenes::default_basis(), peak - 0.03, 0.03);
  const auto scene = make_synthetic_scene(d);
  const auto amb = default_ambient(scene.grid);
  const auto cube = render_scene(scene, amb);
  TesConfig config;
  config.max_emissivity = max_emissivity;
  const auto est = estimate_library_emissivity(cube, std::vector<unsigned char>(cube.pixels(), 1), amb, config);
  const auto truth = scene.pixel_emissivity(0);
  double worst = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) worst = std::max(worst, std::abs(est.emissivity[i] - truth[i]));
  return worst;
}

}  // namespace

// Known limitation: the brightest-band temperature and the roughness-based V
// choice leave an error floor of about 0.02 even when the peak emissivity is
// 0.999, and 0.08 for a 0.93-peak material. Kept as an expected failure.
TEST_CASE("TES estimate of a uniform region is within 0.02 of the truth" * doctest::should_fail()) {
  CHECK(tes_worst_error(0.93, 1.0) < 0.02);
}

TEST_CASE("TES error floor does not regress") {
  CHECK(tes_worst_error(0.93, 1.0) < 0.09);
  CHECK(tes_worst_error(0.93, 0.93) < 0.025);
  CHECK(tes_worst_error(0.999, 1.0) < 0.021);
}

TEST_CASE("TES on a near-blackbody region returns the clip ceiling") {
  auto d = scenes::round_trip(16);
  d.sigma_intra = 0.0;
  d.regions[0].base_beta.assign(12, 0.998);
  const auto scene = make_synthetic_scene(d);
  const auto amb = default_ambient(scene.grid);
  const auto cube = render_scene(scene, amb);
  const auto est = estimate_library_emissivity(cube, std::vector<unsigned char>(cube.pixels(), 1), amb);
  for (double e : est.emissivity) CHECK(e == doctest::Approx(0.999).epsilon(1e-3));
}

TEST_CASE("TES spread grows with intra-class variation") {
  auto mean_iqr = [](double sigma) {
    auto d = scenes::round_trip(16);
    d.sigma_intra = sigma;
    const auto scene = make_synthetic_scene(d);
    const auto amb = default_ambient(scene.grid);
    const auto cube = render_scene(scene, amb);
    const auto est = estimate_library_emissivity(cube, std::vector<unsigned char>(cube.pixels(), 1), amb);
    double sum = 0.0;
    for (double q : est.iqr) {
      CHECK(q >= 0.0);
      sum += q;
    }
    return sum / static_cast<double>(est.iqr.size());
  };
  CHECK(mean_iqr(0.05) > 1.5 * mean_iqr(0.0));
}

TEST_CASE("TES validation") {
  const auto scene = make_synthetic_scene(scenes::round_trip(8));
  const auto amb = default_ambient(scene.grid);
  const auto cube = render_scene(scene, amb);
  CHECK_THROWS_AS(estimate_library_emissivity(cube, std::vector<unsigned char>(3, 1), amb), Error);
  CHECK_THROWS_AS(estimate_library_emissivity(cube, std::vector<unsigned char>(cube.pixels(), 0), amb), Error);
  TesConfig bad;
  bad.max_emissivity = 1.5;
  CHECK_THROWS_AS(estimate_library_emissivity(cube, std::vector<unsigned char>(cube.pixels(), 1), amb, bad), Error);
}

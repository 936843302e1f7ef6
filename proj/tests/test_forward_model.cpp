#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "scenes.hpp"
#include "tag/error.hpp"
#include "tag/forward_model.hpp"

using namespace tag;

namespace {

SpectralGrid working_grid() { return wavenumber_grid(870.0, 1269.0, 6.0); }

PixelTruth smooth_truth(const SpectralGrid& grid, double t, double v) {
  PixelTruth truth{t, {}, v};
  for (std::size_t i = 0; i < grid.size(); ++i) truth.emissivity.push_back(0.9 + 0.05 * std::sin(grid[i] / 90.0));
  return truth;
}

}  // namespace

TEST_CASE("default ambient is the graybody sky and ground pair") {
  const auto grid = working_grid();
  const auto amb = default_ambient(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double sky = 0.98 * oracle::planck_ld(260.0, grid[i]);
    CHECK(amb.sky[i] == doctest::Approx(sky).epsilon(1e-13));
    CHECK(amb.ground[i] == doctest::Approx(0.95 * oracle::planck_ld(290.0, grid[i]) + 0.05 * sky).epsilon(1e-13));
  }
  CHECK_FALSE(amb.degenerate());
  CHECK(AmbientSpectra::make(amb.sky, amb.sky).degenerate());
  CHECK_THROWS_AS(AmbientSpectra::make(amb.sky, RadianceSpectrum{{1.0, 2.0}}), Error);
}

TEST_CASE("render_pixel matches the mixing formula band by band") {
  const auto grid = working_grid();
  const auto amb = default_ambient(grid);
  const auto truth = smooth_truth(grid, 305.0, 0.4);
  const auto s = render_pixel(truth, amb, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = 0.4 * amb.sky[i] + 0.6 * amb.ground[i];
    const double e = truth.emissivity[i];
    CHECK(s[i] == doctest::Approx(e * oracle::planck_ld(305.0, grid[i]) + (1.0 - e) * x).epsilon(1e-13));
  }
}

TEST_CASE("blackbody and mirror limits") {
  const auto grid = working_grid();
  const auto amb = default_ambient(grid);
  PixelTruth black{300.0, std::vector<double>(grid.size(), 1.0), 0.7};
  PixelTruth mirror{300.0, std::vector<double>(grid.size(), 0.0), 0.7};
  const auto sb = render_pixel(black, amb, grid);
  const auto sm = render_pixel(mirror, amb, grid);
  const auto x = texture_radiance(0.7, amb);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(sb[i] == doctest::Approx(planck(300.0, grid[i])).epsilon(1e-15));
    CHECK(sm[i] == doctest::Approx(x[i]).epsilon(1e-15));
  }
}

TEST_CASE("render_pixel validation") {
  const auto grid = working_grid();
  const auto amb = default_ambient(grid);
  auto truth = smooth_truth(grid, 300.0, 0.5);
  truth.view_factor = 1.2;
  CHECK_THROWS_AS(render_pixel(truth, amb, grid), Error);
  truth.view_factor = 0.5;
  truth.emissivity[3] = 1.01;
  CHECK_THROWS_AS(render_pixel(truth, amb, grid), Error);
  truth.emissivity.pop_back();
  CHECK_THROWS_AS(render_pixel(truth, amb, grid), Error);
  CHECK_THROWS_AS(texture_radiance(-0.1, amb), Error);
}

TEST_CASE("counterfactual emissivity reproduces the spectrum") {
  const auto grid = working_grid();
  const auto amb = default_ambient(grid);
  const auto truth = smooth_truth(grid, 305.0, 0.4);
  const auto s = render_pixel(truth, amb, grid);

  SUBCASE("identity") {
    const auto cf = counterfactual_emissivity(truth, 305.0, 0.4, amb, grid);
    CHECK(cf.admissible);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(cf.emissivity[i] == truth.emissivity[i]);
  }
  SUBCASE("shifted temperature and view factor") {
    const auto cf = counterfactual_emissivity(truth, 306.5, 0.25, amb, grid);
    REQUIRE(cf.admissible);
    PixelTruth alt{306.5, cf.emissivity, 0.25};
    const auto s2 = render_pixel(alt, amb, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(s2[i] - s[i]) / s[i] < 1e-10);
  }
  SUBCASE("large shifts are flagged inadmissible") {
    const auto cf = counterfactual_emissivity(truth, 280.0, 0.4, amb, grid);
    CHECK_FALSE(cf.admissible);
  }
}

TEST_CASE("singular counterfactual names the band") {
  // Sky equals ground and equals B(T') in band 0: the denominator vanishes there.
  const SpectralGrid grid({900.0, 1000.0});
  RadianceSpectrum flat{{planck(300.0, 900.0), 0.5 * planck(300.0, 1000.0)}};
  const auto amb = AmbientSpectra::make(flat, flat);
  PixelTruth truth{310.0, {0.9, 0.9}, 0.5};
  try {
    counterfactual_emissivity(truth, 300.0, 0.5, amb, grid);
    FAIL("expected a numerical error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numerical);
    CHECK(std::string(e.what()).find("band 0") != std::string::npos);
  }
}

TEST_CASE("parametric_beta shapes") {
  const auto basis = scenes::default_basis();
  const auto flat = parametric_beta(basis, 0.9, 0.0);
  for (double b : flat) CHECK(b == 0.9);
  const auto tilted = parametric_beta(basis, 0.9, 0.03);
  CHECK(tilted.front() == doctest::Approx(0.87));
  CHECK(tilted.back() == doctest::Approx(0.93));
  const auto dipped = parametric_beta(basis, 0.9, 0.0, 0.04);
  CHECK(*std::min_element(dipped.begin(), dipped.end()) < 0.9 - 0.03);
}

TEST_CASE("synthetic scene generation") {
  SUBCASE("deterministic for a seed and different across seeds") {
    auto d = scenes::round_trip(16);
    const auto a = make_synthetic_scene(d);
    const auto b = make_synthetic_scene(d);
    CHECK(a.temperature == b.temperature);
    CHECK(a.view_factor == b.view_factor);
    CHECK(a.beta == b.beta);
    d.seed = 99;
    CHECK(make_synthetic_scene(d).temperature != a.temperature);
  }
  SUBCASE("fields respect their ranges") {
    const auto s = make_synthetic_scene(scenes::round_trip(24));
    REQUIRE(s.pixels() == 24u * 24u);
    for (std::size_t p = 0; p < s.pixels(); ++p) {
      CHECK(s.temperature[p] >= 295.0 - 1e-12);
      CHECK(s.temperature[p] <= 310.0 + 1e-12);
      CHECK(s.view_factor[p] >= 0.05);
      CHECK(s.view_factor[p] <= 0.95);
    }
    for (double b : s.beta) {
      CHECK(b > 0.0);
      CHECK(b < 1.0);
    }
  }
  SUBCASE("uniform and boundary regimes have the requested structure") {
    for (const auto& [desc, inter, intra] :
         {std::tuple{scenes::uniform_regime(), 0.10, 0.02}, std::tuple{scenes::boundary_regime(), 0.02, 0.10}}) {
      const auto s = make_synthetic_scene(desc);
      const auto k = static_cast<std::size_t>(s.basis.size());
      double mean[2] = {0.0, 0.0};
      std::size_t count[2] = {0, 0};
      double max_dev = 0.0;
      for (std::size_t p = 0; p < s.pixels(); ++p) {
        const int label = s.labels[p];
        const auto& base = s.regions[static_cast<std::size_t>(label)].base_beta;
        for (std::size_t i = 0; i < k; ++i) max_dev = std::max(max_dev, std::abs(s.beta[p * k + i] - base[i]));
        double m = 0.0;
        for (std::size_t i = 0; i < k; ++i) m += s.beta[p * k + i];
        mean[label] += m / static_cast<double>(k);
        ++count[label];
      }
      REQUIRE(count[0] > 0);
      REQUIRE(count[1] > 0);
      // region base curves differ by exactly the inter-material offset
      const auto& b0 = s.regions[0].base_beta;
      const auto& b1 = s.regions[1].base_beta;
      for (std::size_t i = 0; i < k; ++i) CHECK(b1[i] - b0[i] == doctest::Approx(inter));
      CHECK(max_dev == doctest::Approx(intra).epsilon(1e-9));
      CHECK(std::abs(mean[1] / count[1] - mean[0] / count[0] - inter) < intra + 1e-12);
    }
  }
  SUBCASE("configuration errors") {
    auto d = scenes::round_trip(16);
    d.height = 4;
    CHECK_THROWS_AS(make_synthetic_scene(d), Error);
    d = scenes::round_trip(16);
    d.regions.clear();
    CHECK_THROWS_AS(make_synthetic_scene(d), Error);
    d = scenes::round_trip(16);
    d.regions[0].base_beta.pop_back();
    CHECK_THROWS_AS(make_synthetic_scene(d), Error);
    d = scenes::round_trip(16);
    d.layout = RegionLayout::Disc;
    CHECK_THROWS_AS(make_synthetic_scene(d), Error);
    d = scenes::round_trip(16);
    d.regions[0].base_beta = parametric_beta(scenes::default_basis(), 0.97, 0.0);
    d.sigma_intra = 0.2;
    try {
      make_synthetic_scene(d);
      FAIL("expected clipping to be rejected");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Config);
    }
  }
}

TEST_CASE("render_scene") {
  const auto scene = make_synthetic_scene(scenes::round_trip(16));
  const auto amb = default_ambient(scene.grid);
  const auto cube = render_scene(scene, amb);
  REQUIRE(cube.pixels() == scene.pixels());
  REQUIRE(cube.bands() == scene.grid.size());

  SUBCASE("each pixel equals render_pixel") {
    for (std::size_t p = 0; p < scene.pixels(); p += 7) {
      const auto s = render_pixel(scene.pixel_truth(p), amb, scene.grid);
      for (std::size_t i = 0; i < cube.bands(); ++i) CHECK(cube.pixel(p)[i] == s[i]);
    }
  }
  SUBCASE("serial and parallel agree exactly") {
    CHECK(render_scene(scene, amb, Exec::Serial).data == cube.data);
  }
  SUBCASE("a constant scene renders a constant cube") {
    auto d = scenes::round_trip(8);
    d.temperature_pattern = TemperaturePattern::Constant;
    d.view_pattern = ViewPattern::Constant;
    d.v_ripple = 0.0;
    d.sigma_intra = 0.0;
    const auto flat = render_scene(make_synthetic_scene(d), amb);
    for (std::size_t p = 1; p < flat.pixels(); ++p)
      for (std::size_t i = 0; i < flat.bands(); ++i) CHECK(flat.pixel(p)[i] == flat.pixel(0)[i]);
  }
  SUBCASE("mismatched ambient is rejected") {
    const auto other = default_ambient(wavenumber_grid(870.0, 1269.0, 12.0));
    CHECK_THROWS_AS(render_scene(scene, other), Error);
  }
}

TEST_CASE("a 64x64 scene renders quickly") {
  const auto scene = make_synthetic_scene(scenes::round_trip(64));
  const auto amb = default_ambient(scene.grid);
  const auto t0 = std::chrono::steady_clock::now();
  const auto cube = render_scene(scene, amb);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(cube.pixels() == 4096);
  CHECK(secs < 1.0);
}

TEST_CASE("noise model") {
  const auto scene = make_synthetic_scene(scenes::round_trip(32));
  const auto cube = render_scene(scene, default_ambient(scene.grid));

  SUBCASE("infinite SNR leaves the cube untouched") {
    const auto same = add_noise(cube, std::numeric_limits<double>::infinity(), 3);
    CHECK(same.data == cube.data);
    CHECK_FALSE(same.provenance.noisy);
  }
  SUBCASE("noise level follows the requested SNR") {
    const auto noisy = add_noise(cube, 30.0, 11);
    CHECK(noisy.provenance.noisy);
    CHECK(noisy.provenance.seed == 11);
    CHECK(noisy.provenance.snr_db == 30.0);
    double ss = 0.0;
    for (std::size_t j = 0; j < cube.data.size(); ++j) ss += (noisy.data[j] - cube.data[j]) * (noisy.data[j] - cube.data[j]);
    const double sigma = std::sqrt(ss / static_cast<double>(cube.data.size()));
    const double expect = cube_rms(cube) / std::pow(10.0, 30.0 / 20.0);
    CHECK(sigma == doctest::Approx(expect).epsilon(0.02));
  }
  SUBCASE("same seed reproduces, different seed differs, serial matches parallel") {
    const auto a = add_noise(cube, 40.0, 5);
    CHECK(add_noise(cube, 40.0, 5).data == a.data);
    CHECK(add_noise(cube, 40.0, 5, Exec::Serial).data == a.data);
    CHECK(add_noise(cube, 40.0, 6).data != a.data);
  }
  SUBCASE("counter-based normals have unit variance") {
    double sum = 0.0, sum2 = 0.0;
    const int n = 200000;
    for (int j = 0; j < n; ++j) {
      const double z = counter_normal(17, static_cast<std::uint64_t>(j / 1000), static_cast<std::uint64_t>(j % 1000), 0);
      sum += z;
      sum2 += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sum2 / n - 1.0) < 0.02);
    CHECK(counter_normal(1, 2, 3, 4) == counter_normal(1, 2, 3, 4));
  }
}

TEST_CASE("band average is the per-pixel spectral mean") {
  HyperCube cube(1, 2, SpectralGrid({900.0, 1000.0, 1100.0}));
  cube.data = {1.0, 2.0, 3.0, 4.0, 4.0, 7.0};
  const auto avg = band_average(cube);
  REQUIRE(avg.size() == 2);
  CHECK(avg[0] == doctest::Approx(2.0));
  CHECK(avg[1] == doctest::Approx(5.0));
  CHECK(cube_rms(cube) == doctest::Approx(std::sqrt((1 + 4 + 9 + 16 + 16 + 49) / 6.0)));
}

#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "scenes.hpp"
#include "tag/error.hpp"
#include "tag/slot_solver.hpp"

using namespace tag;

namespace {

struct Fixture {
  SpectralGrid grid = wavenumber_grid(870.0, 1269.0, 6.0);
  AmbientSpectra ambient = default_ambient(grid);
  SplineBasis basis = make_basis(grid, 12);

  std::vector<double> spectrum(double t, double v, const std::vector<double>& beta) const {
    return model_spectrum(t, v, beta, ambient, basis, grid).values;
  }
};

std::vector<double> curved_beta() {
  return parametric_beta(scenes::default_basis(), 0.88, 0.04, 0.05);
}

std::vector<double> affine_beta() { return parametric_beta(scenes::default_basis(), 0.90, 0.03); }

}  // namespace

TEST_CASE("config validation") {
  SlotConfig c;
  CHECK_NOTHROW(c.validate(67));
  auto bad = [](auto mutate) {
    SlotConfig x;
    mutate(x);
    try {
      x.validate(67);
    } catch (const Error& e) {
      return e.kind() == ErrorKind::Config;
    }
    return false;
  };
  CHECK(bad([](SlotConfig& x) { x.lambda = -1.0; }));
  CHECK(bad([](SlotConfig& x) { x.basis_count = 3; }));
  CHECK(bad([](SlotConfig& x) { x.t_lo = 300.0; }));
  CHECK(bad([](SlotConfig& x) { x.t_lo = 310.0; x.t_hi = 300.0; }));
  CHECK(bad([](SlotConfig& x) { x.t_step = 0.0; }));
  CHECK(bad([](SlotConfig& x) { x.v_step = 1.5; }));
  CHECK(bad([](SlotConfig& x) { x.refine_tolerance = 0.0; }));
  CHECK(bad([](SlotConfig& x) { x.max_refine_iterations = -1; }));
  CHECK(bad([](SlotConfig& x) { x.band_weights = {1.0, 2.0}; }));
  CHECK(bad([](SlotConfig& x) { x.band_weights.assign(67, 1.0); x.band_weights[4] = -1.0; }));
}

TEST_CASE("model spectrum equals render_pixel with the spline emissivity") {
  Fixture f;
  const auto beta = curved_beta();
  const auto m = f.spectrum(303.0, 0.35, beta);
  PixelTruth truth{303.0, {}, 0.35};
  for (std::size_t i = 0; i < f.grid.size(); ++i) truth.emissivity.push_back(eval_spline(f.basis, beta, f.grid[i]));
  const auto s = render_pixel(truth, f.ambient, f.grid);
  for (std::size_t i = 0; i < f.grid.size(); ++i) CHECK(m[i] == doctest::Approx(s[i]).epsilon(1e-14));
}

TEST_CASE("beta subproblem recovers interior coefficients exactly at lambda 0") {
  Fixture f;
  SlotConfig c;
  c.lambda = 0.0;
  const auto beta = curved_beta();
  const auto s = f.spectrum(305.0, 0.4, beta);
  const auto sol = solve_beta_subproblem(305.0, 0.4, s, f.ambient, f.grid, c);
  for (std::size_t k = 0; k < beta.size(); ++k) CHECK(std::abs(sol.beta[k] - beta[k]) < 1e-8);
  CHECK(sol.active_bounds == 0);
  CHECK(sol.data_term < 1e-20);
}

TEST_CASE("objective splits into data and penalty terms") {
  Fixture f;
  SlotConfig c;
  c.lambda = 0.5;
  const auto s = f.spectrum(305.0, 0.4, curved_beta());
  const SlotProblem problem(f.grid, f.ambient, c);
  const auto sol = problem.solve_beta(304.0, 0.6, s);
  const auto m = problem.model_spectrum(304.0, 0.6, sol.beta);
  double data = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) data += 0.5 * (s[i] - m[i]) * (s[i] - m[i]);
  const double penalty = 0.5 * c.lambda * second_difference_norm2(sol.beta);
  CHECK(sol.data_term == doctest::Approx(data).epsilon(1e-12));
  CHECK(sol.penalty == doctest::Approx(penalty).epsilon(1e-12));
  CHECK(std::abs(sol.objective - (data + penalty)) <= 1e-12 * sol.objective);
  CHECK(problem.profiled_objective(304.0, 0.6, s) == doctest::Approx(sol.objective).epsilon(1e-14));
}

TEST_CASE("subproblem solution satisfies the box KKT conditions") {
  Fixture f;
  SlotConfig c;
  c.lambda = 1e-3;
  const auto s = f.spectrum(305.0, 0.4, curved_beta());
  const SlotProblem problem(f.grid, f.ambient, c);
  for (double t : {296.0, 301.0, 312.0}) {
    Eigen::MatrixXd h;
    Eigen::VectorXd g;
    problem.normal_equations(t, 0.4, s, h, g);
    const auto sol = problem.solve_beta(t, 0.4, s);
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(sol.beta.data(), 12);
    CHECK(projected_gradient_norm(h, g, 0.0, 1.0, x) <= 1e-12 * g.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("heavy smoothing drives the coefficients toward an affine curve") {
  Fixture f;
  SlotConfig c;
  c.lambda = 1e9;
  const auto s = f.spectrum(305.0, 0.4, curved_beta());
  const auto sol = solve_beta_subproblem(305.0, 0.4, s, f.ambient, f.grid, c);
  CHECK(second_difference_norm2(sol.beta) < 1e-12);
}

TEST_CASE("a rank-deficient unregularized subproblem is reported") {
  const SpectralGrid grid({900.0, 1000.0, 1100.0, 1200.0, 1250.0});
  const auto amb = default_ambient(grid);
  SlotConfig c;
  c.lambda = 0.0;
  c.basis_count = 12;
  std::vector<double> s(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) s[i] = 0.9 * planck(300.0, grid[i]);
  try {
    solve_beta_subproblem(300.0, 0.5, s, amb, grid, c);
    FAIL("expected a numerical error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numerical);
    CHECK(std::string(e.what()).find("lambda") != std::string::npos);
  }
}

TEST_CASE("profiled dJ/dT matches a finite difference away from active-set changes") {
  Fixture f;
  SlotConfig c;
  c.lambda = 1e-3;
  const auto s = f.spectrum(305.0, 0.4, curved_beta());
  const SlotProblem problem(f.grid, f.ambient, c);
  for (double t : {302.5, 307.0}) {
    const double fd =
        oracle::derivative([&](double x) { return problem.profiled_objective(x, 0.4, s); }, t, 1e-3);
    const double d = problem.profiled_dT(t, 0.4, s);
    CHECK(std::abs(d - fd) <= 1e-6 * std::max(1.0, std::abs(d)));
  }
}

TEST_CASE("single-pixel decomposition recovers temperature and view factor") {
  Fixture f;
  SlotConfig c;
  c.lambda = 1e-3;
  const auto beta = affine_beta();
  const auto s = f.spectrum(305.0, 0.4, beta);
  const auto sol = outer_search(s, f.ambient, f.grid, c);
  CHECK(std::abs(sol.temperature - 305.0) < 0.1);
  CHECK(std::abs(sol.view_factor - 0.4) < 0.005);
  double worst = 0.0;
  for (std::size_t i = 0; i < f.grid.size(); ++i)
    worst = std::max(worst, std::abs(eval_spline(f.basis, sol.beta, f.grid[i]) - eval_spline(f.basis, beta, f.grid[i])));
  CHECK(worst < 0.01);
  CHECK(sol.v_identifiable);
  CHECK(sol.view_factor >= 0.0);
  CHECK(sol.view_factor <= 1.0);
}

TEST_CASE("refinement improves on the coarse grid") {
  Fixture f;
  const auto s = f.spectrum(304.37, 0.437, affine_beta());
  SlotConfig coarse;
  coarse.lambda = 1e-3;
  coarse.max_refine_iterations = 0;
  SlotConfig fine = coarse;
  fine.max_refine_iterations = 200;
  const auto a = outer_search(s, f.ambient, f.grid, coarse);
  const auto b = outer_search(s, f.ambient, f.grid, fine);
  const double err_a = std::hypot(a.temperature - 304.37, 10.0 * (a.view_factor - 0.437));
  const double err_b = std::hypot(b.temperature - 304.37, 10.0 * (b.view_factor - 0.437));
  CHECK(err_a > 0.0);
  CHECK(err_b <= 0.5 * err_a);
  CHECK(b.objective <= a.objective);
}

TEST_CASE("objective history is non-increasing") {
  Fixture f;
  SlotConfig c;
  c.lambda = 0.22;
  c.record_history = true;
  const auto s = f.spectrum(301.0, 0.7, curved_beta());
  const auto sol = outer_search(s, f.ambient, f.grid, c);
  REQUIRE(!sol.objective_history.empty());
  for (std::size_t j = 1; j < sol.objective_history.size(); ++j)
    CHECK(sol.objective_history[j] <= sol.objective_history[j - 1]);
}

TEST_CASE("degenerate ambient flags the view factor as unidentifiable") {
  Fixture f;
  const auto amb = AmbientSpectra::make(f.ambient.sky, f.ambient.sky);
  std::vector<double> s = model_spectrum(300.0, 0.5, affine_beta(), amb, f.basis, f.grid).values;
  const auto sol = outer_search(s, amb, f.grid, SlotConfig{});
  CHECK_FALSE(sol.v_identifiable);
}

TEST_CASE("bad spectra are rejected") {
  Fixture f;
  std::vector<double> s = f.spectrum(300.0, 0.5, affine_beta());
  s[7] = std::nan("");
  CHECK_THROWS_AS(outer_search(s, f.ambient, f.grid, SlotConfig{}), Error);
  s.pop_back();
  CHECK_THROWS_AS(outer_search(s, f.ambient, f.grid, SlotConfig{}), Error);
  std::vector<double> dark(f.grid.size(), -1.0);
  CHECK_THROWS_AS(outer_search(dark, f.ambient, f.grid, SlotConfig{}), Error);
}

TEST_CASE("cube decomposition is identical serially and in parallel") {
  auto d = scenes::round_trip(8);
  const auto scene = make_synthetic_scene(d);
  const auto amb = default_ambient(scene.grid);
  const auto cube = add_noise(render_scene(scene, amb), 50.0, 4);
  SlotConfig c;
  const auto a = decompose_cube(cube, amb, c, Exec::Serial);
  const auto b = decompose_cube(cube, amb, c, Exec::Parallel);
  CHECK(a.temperature == b.temperature);
  CHECK(a.view_factor == b.view_factor);
  CHECK(a.beta == b.beta);
  CHECK(a.objective == b.objective);
  CHECK(a.pixels() == 64);
  CHECK(a.basis_count == 12);
}

TEST_CASE("lambda sweep") {
  auto d = scenes::round_trip(8);
  const auto scene = make_synthetic_scene(d);
  const auto amb = default_ambient(scene.grid);
  const auto cube = render_scene(scene, amb);
  const std::vector<double> lambdas{1e-3, 1.0};
  const auto runs = lambda_sweep(cube, amb, SlotConfig{}, lambdas);
  REQUIRE(runs.size() == 2);
  CHECK(runs[0].config.lambda == 1e-3);
  CHECK(runs[1].config.lambda == 1.0);
  CHECK_THROWS_AS(lambda_sweep(cube, amb, SlotConfig{}, std::vector<double>{}), Error);
}

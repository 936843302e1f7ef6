// Serial reference loops against the OpenMP kernels on the same inputs.

#include <benchmark/benchmark.h>

#include <map>

#include "scenes.hpp"
#include "tag/hadar.hpp"
#include "tag/slot_solver.hpp"

namespace {

using tag::Exec;

struct Inputs {
  tag::SyntheticScene scene;
  tag::AmbientSpectra ambient;
  tag::HyperCube cube;
  tag::MaterialLibrary library;
};

const Inputs& inputs(int size) {
  static std::map<int, Inputs> cache;
  auto it = cache.find(size);
  if (it == cache.end()) {
    Inputs in;
    in.scene = tag::make_synthetic_scene(scenes::two_material(0.10, 0.02, size));
    in.ambient = tag::default_ambient(in.scene.grid);
    in.cube = tag::add_noise(tag::render_scene(in.scene, in.ambient), 40.0, 1);
    const auto phi = tag::eval_basis_banded(in.scene.basis, in.scene.grid);
    for (const auto& r : in.scene.regions) in.library.entries.push_back({r.name, tag::eval_spline(phi, r.base_beta)});
    it = cache.emplace(size, std::move(in)).first;
  }
  return it->second;
}

Exec exec_of(const benchmark::State& state) { return state.range(1) ? Exec::Parallel : Exec::Serial; }

void label(benchmark::State& state, std::size_t pixels) {
  state.SetLabel(state.range(1) ? "openmp" : "serial");
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * static_cast<std::int64_t>(pixels));
}

void BM_RenderScene(benchmark::State& state) {
  const auto& in = inputs(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(tag::render_scene(in.scene, in.ambient, exec_of(state)));
  label(state, in.scene.pixels());
}

void BM_AddNoise(benchmark::State& state) {
  const auto& in = inputs(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(tag::add_noise(in.cube, 30.0, 7, exec_of(state)));
  label(state, in.cube.pixels());
}

void BM_DecomposeCube(benchmark::State& state) {
  const auto& in = inputs(static_cast<int>(state.range(0)));
  const tag::SlotConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(tag::decompose_cube(in.cube, in.ambient, config, exec_of(state)));
  label(state, in.cube.pixels());
}

void BM_DecomposeHadar(benchmark::State& state) {
  const auto& in = inputs(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(tag::decompose_cube_hadar(in.cube, in.library, in.ambient, {}, exec_of(state)));
  label(state, in.cube.pixels());
}

}  // namespace

BENCHMARK(BM_RenderScene)->ArgsProduct({{64, 256}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AddNoise)->ArgsProduct({{64, 256}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DecomposeCube)->ArgsProduct({{16}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DecomposeHadar)->ArgsProduct({{32}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

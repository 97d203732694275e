#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "pinchlab/geometry.hpp"
#include "pinchlab/inradius.hpp"

using namespace pinchlab;

namespace {

Surface ellipse(std::size_t n) {
  std::vector<Vec2> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    v[i] = {2.0 * std::cos(t), std::sin(t)};
  }
  return Surface::curve(std::move(v));
}

Surface dumbbell_profile(std::size_t n) {
  // r^2 = (Z^2 - z^2)(alpha + beta z^2): two bells joined by a neck.
  const double beta = 0.01 / (1.0 - 0.09);
  const double z2 = (0.2 + std::sqrt(0.04 + 4 * beta * 0.09)) / (2 * beta);
  const double alpha = 0.09 / z2;
  const double zmax = std::sqrt(z2);
  std::vector<Vec2> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double th = std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1);
    const double z = -zmax * std::cos(th);
    const double g = (z2 - z * z) * (alpha + beta * z * z);
    v[i] = {std::sqrt(std::max(g, 0.0)), z};
  }
  v.front().x = 0.0;
  v.back().x = 0.0;
  return Surface::from_trusted(SurfaceKind::AxiSym, std::move(v));
}

void BM_MuBruteEllipse(benchmark::State& state) {
  const Surface s = ellipse(static_cast<std::size_t>(state.range(0)));
  const GeometryData g = build_geometry(s);
  for (auto _ : state) benchmark::DoNotOptimize(mu_brute(s, g));
}

void BM_MuFastEllipse(benchmark::State& state) {
  const Surface s = ellipse(static_cast<std::size_t>(state.range(0)));
  const GeometryData g = build_geometry(s);
  for (auto _ : state) benchmark::DoNotOptimize(mu_fast(s, g));
}

void BM_MuBruteDumbbell(benchmark::State& state) {
  const Surface s = dumbbell_profile(static_cast<std::size_t>(state.range(0)));
  const GeometryData g = build_geometry(s, {.require_mean_convex = false});
  for (auto _ : state) benchmark::DoNotOptimize(mu_brute(s, g));
}

void BM_MuFastDumbbell(benchmark::State& state) {
  const Surface s = dumbbell_profile(static_cast<std::size_t>(state.range(0)));
  const GeometryData g = build_geometry(s, {.require_mean_convex = false});
  for (auto _ : state) benchmark::DoNotOptimize(mu_fast(s, g));
}

}  // namespace

BENCHMARK(BM_MuBruteEllipse)->Arg(1024)->Arg(8192)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MuFastEllipse)->Arg(1024)->Arg(8192)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MuBruteDumbbell)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MuFastDumbbell)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

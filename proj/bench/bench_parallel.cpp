// Serial reference vs OpenMP kernels. Thread count follows OMP_NUM_THREADS.

#include "charflow/applications.hpp"
#include "charflow/cauchy.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace charflow;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

// Non-quadratic index so every RK4 stage pays for finite-difference gradients.
Hamiltonian lens() {
  return Hamiltonian::finite_difference(
      2,
      [](const JetPoint& p) {
        const double idx = 1.0 + 0.2 * std::sin(p.x(0)) * std::cos(p.x(1));
        return 0.5 * p.y.squaredNorm() / (idx * idx) - 0.5;
      },
      true);
}

InitialStrip circle_strip(const Hamiltonian& h, int columns) {
  InitialDataManifold m;
  m.n = 2;
  for (int i = 0; i < columns; ++i) m.lambda_grid.push_back(Vec::Constant(1, 2 * std::numbers::pi * i / columns));
  m.x_gamma = [](const Vec& l) { return v2(std::cos(l(0)), std::sin(l(0))); };
  m.phi = [](const Vec&) { return 0.0; };
  return solve_strip(h, m, 0.0, v2(-1.0, 0.0));
}

template <bool Parallel>
void BM_Propagate(benchmark::State& state) {
  const Hamiltonian h = lens();
  const InitialStrip strip = circle_strip(h, static_cast<int>(state.range(0)));
  const IntegratorConfig cfg{1e-3, 100000};
  for (auto _ : state) {
    SolutionSheet sheet = Parallel ? propagate(h, strip, {0.0, 1.0}, cfg) : propagate_serial(h, strip, {0.0, 1.0}, cfg);
    benchmark::DoNotOptimize(sheet.columns.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

std::vector<RayStart> fan(int count) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(0.05, 1.0);
  std::vector<RayStart> starts;
  for (int i = 0; i < count; ++i) {
    const double ang = d(rng) * std::numbers::pi / 2;
    starts.push_back({v2(d(rng), -1.0), std::sqrt(2.0) * v2(std::cos(ang), std::sin(ang))});
  }
  return starts;
}

template <bool Parallel>
void BM_TraceRays(benchmark::State& state) {
  LayeredMedium med;
  med.n = 2;
  for (int k = 0; k < 40; ++k) med.interfaces.push_back(-0.5 + 0.25 * k);
  for (int k = 0; k <= 40; ++k) med.N_values.push_back(k % 2 ? 1.0 : 0.6);
  med.N_values[0] = 1.0;
  const auto starts = fan(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto rays = Parallel ? trace_rays(med, starts, 20.0, {}) : trace_rays_serial(med, starts, 20.0, {});
    benchmark::DoNotOptimize(rays.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_Propagate<false>)->Name("propagate/serial")->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Propagate<true>)->Name("propagate/openmp")->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TraceRays<false>)->Name("trace_rays/serial")->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TraceRays<true>)->Name("trace_rays/openmp")->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

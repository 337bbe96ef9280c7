#include <benchmark/benchmark.h>

#include "rwre/environment.hpp"
#include "rwre/llt.hpp"
#include "rwre/solver.hpp"
#include "rwre/walk.hpp"

namespace {

using namespace rwre;

void BM_SiteKernelDirichlet(benchmark::State& state) {
  auto model = EnvironmentModel::dirichlet(2, {6.0, 1.0, 2.0, 2.0}, 0.005);
  Environment env = build_environment(model, 7);
  std::int64_t i = 0;
  for (auto _ : state) {
    Point x = point_of({i & 1023, (i >> 10) & 1023});
    benchmark::DoNotOptimize(env.site_kernel(x));
    ++i;
  }
}
BENCHMARK(BM_SiteKernelDirichlet);

void BM_SiteKernelTwoPoint(benchmark::State& state) {
  auto model = EnvironmentModel::two_point(2, Kernel::of(2, {0.4, 0.2, 0.2, 0.2}),
                                           Kernel::of(2, {0.2, 0.4, 0.2, 0.2}), 0.5);
  Environment env = build_environment(model, 7);
  std::int64_t i = 0;
  for (auto _ : state) {
    Point x = point_of({i & 1023, (i >> 10) & 1023});
    benchmark::DoNotOptimize(env.site_kernel(x));
    ++i;
  }
}
BENCHMARK(BM_SiteKernelTwoPoint);

void BM_SimulateSlabWalk(benchmark::State& state) {
  auto model = EnvironmentModel::deterministic(2, Kernel::of(2, {0.4, 0.2, 0.2, 0.2}));
  Environment env = build_environment(model, 3);
  Region slab = Region::slab(2, axis_vec(0, 2), 32.0, 32.0, Transversal::Periodic, 32);
  std::uint64_t sid = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate(env, Point{}, slab, 1'000'000, sid++));
  }
}
BENCHMARK(BM_SimulateSlabWalk);

void BM_SolveSlab(benchmark::State& state) {
  auto model = EnvironmentModel::dirichlet(2, {6.0, 1.0, 2.0, 2.0}, 0.01);
  Environment env = build_environment(model, 5);
  const auto L = static_cast<double>(state.range(0));
  Region slab = Region::slab(2, axis_vec(0, 2), L, L, Transversal::Periodic,
                             static_cast<std::int64_t>(2 * L));
  SolveOptions opts;
  opts.exit_distribution = false;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_exit(env, slab, Point{}, opts));
  }
}
BENCHMARK(BM_SolveSlab)->Arg(8)->Arg(16)->Arg(32);

void BM_ConvolvePower(benchmark::State& state) {
  LatticeLaw law = LatticeLaw::srw(1);
  const auto n = static_cast<std::int64_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(convolve_power(law, n));
  }
}
BENCHMARK(BM_ConvolvePower)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();

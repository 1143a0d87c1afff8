#include <benchmark/benchmark.h>

#include "cartanflow/oracles.hpp"
#include "cartanflow/path.hpp"

using namespace cartanflow;
using oracles::InstanceGenerator;
using oracles::SplitMix64;

namespace {

Family family_arg(int which, int n) {
  switch (which) {
    case 0: return real_sym_evd(n);
    case 1: return herm_evd(n);
    case 2: return real_svd(n, n - 1);
    default: return skew_sym_evd(n);
  }
}

void bench_diagonalize(benchmark::State& state) {
  Family f = family_arg(static_cast<int>(state.range(0)),
                        static_cast<int>(state.range(1)));
  SplitMix64 rng(1);
  InstanceGenerator gen{f, 1};
  PElement x = gen.random_p(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(diagonalize_point(x));
  }
}
BENCHMARK(bench_diagonalize)
    ->ArgsProduct({{0, 1, 2, 3}, {8, 32}})
    ->Unit(benchmark::kMicrosecond);

void bench_commutant_projection(benchmark::State& state) {
  Family f = herm_evd(static_cast<int>(state.range(0)));
  SplitMix64 rng(2);
  InstanceGenerator gen{f, 2};
  PElement x = gen.random_p(rng);
  PElement b = gen.random_p(rng);
  EigenStructure es = eigen_structure(x, 1e-8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(commutant_projection(es, b));
  }
}
BENCHMARK(bench_commutant_projection)->Arg(8)->Arg(32)->Unit(benchmark::kMicrosecond);

void bench_ad_inverse(benchmark::State& state) {
  Family f = herm_evd(static_cast<int>(state.range(0)));
  SplitMix64 rng(3);
  InstanceGenerator gen{f, 3};
  PElement x = gen.random_p(rng);
  EigenStructure es = eigen_structure(x, 1e-8);
  PElement c = complement_projection(es, gen.random_p(rng));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ad_inverse(es, c, 1e-8));
  }
}
BENCHMARK(bench_ad_inverse)->Arg(8)->Arg(16)->Unit(benchmark::kMicrosecond);

void bench_match_jet(benchmark::State& state) {
  const int r = static_cast<int>(state.range(0));
  SplitMix64 rng(4);
  Vec pv(r), pd(r), nv(r), nd(r);
  for (int i = 0; i < r; ++i) {
    pv[i] = rng.gauss();
    pd[i] = rng.gauss();
    nv[i] = pv[i] + 1e-3 * rng.gauss();
    nd[i] = pd[i] + 1e-3 * rng.gauss();
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        weyl::match_jet(WeylType::SignedPermB, pv, pd, nv, nd, 1e-3));
  }
}
BENCHMARK(bench_match_jet)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMicrosecond);

void bench_sorted_curve(benchmark::State& state) {
  PathSpec spec = builtin_spec("rellich");
  auto grid = make_grid(-1, 1, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(sorted_curve(spec, grid));
  }
}
BENCHMARK(bench_sorted_curve)->Arg(2001)->Unit(benchmark::kMillisecond);

void bench_flow_step(benchmark::State& state) {
  SplitMix64 rng(5);
  InstanceGenerator gen{herm_evd(static_cast<int>(state.range(0))), 5};
  PathSpec spec = gen.random_trig_path(rng);
  auto grid = make_grid(0, 0.01, 11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(analytic_flow(spec, grid));
  }
}
BENCHMARK(bench_flow_step)->Arg(4)->Arg(8)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include "tl/diagnostics.hpp"
#include "tl/rng.hpp"

namespace {

void BM_CStatistic(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  tl::Rng rng(1);
  Eigen::VectorXd g(n), a(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    g(i) = rng.uniform01();
    a(i) = rng.bernoulli(0.4) ? 1.0 : 0.0;
  }
  a(0) = 1.0;
  a(1) = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tl::c_statistic(g, a));
  }
}
BENCHMARK(BM_CStatistic)->Arg(225)->Arg(10000)->Arg(100000);

void BM_OverlapSummary(benchmark::State& state) {
  tl::Rng rng(2);
  Eigen::VectorXd g(10000), a(10000);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    g(i) = rng.uniform01();
    a(i) = rng.bernoulli(0.4) ? 1.0 : 0.0;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(tl::overlap_summary(g, a));
  }
}
BENCHMARK(BM_OverlapSummary);

}  // namespace

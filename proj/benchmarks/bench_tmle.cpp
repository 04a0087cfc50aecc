#include <benchmark/benchmark.h>

#include "tl/sim.hpp"
#include "tl/tmle.hpp"

namespace {

tl::NuisanceOptions options(int V) {
  tl::NuisanceOptions opt;
  opt.q_library = {tl::LearnerSpec::make(tl::LearnerKind::logistic),
                   tl::LearnerSpec::make(tl::LearnerKind::boosted_stumps, {{"rounds", 50}})};
  opt.g_library = {tl::LearnerSpec::make(tl::LearnerKind::logistic)};
  opt.adjustment = {"w1", "w2", "w3"};
  opt.V = V;
  opt.seed = 1;
  return opt;
}

void BM_FullTmle(benchmark::State& state) {
  tl::Dataset ds = tl::generate(tl::dgp_a(), static_cast<std::size_t>(state.range(0)), 1);
  tl::NuisanceOptions opt = options(5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tl::run_tmle(ds, opt));
  }
}
BENCHMARK(BM_FullTmle)->Arg(225)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_FullTmleV20(benchmark::State& state) {
  tl::Dataset ds = tl::generate(tl::dgp_a(), 1000, 1);
  tl::NuisanceOptions opt = options(20);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tl::run_tmle(ds, opt));
  }
}
BENCHMARK(BM_FullTmleV20)->Unit(benchmark::kMillisecond);

void BM_Generate(benchmark::State& state) {
  tl::DgpSpec dgp = tl::dgp_a();
  for (auto _ : state) {
    benchmark::DoNotOptimize(tl::generate(dgp, 1000, 7));
  }
}
BENCHMARK(BM_Generate);

}  // namespace

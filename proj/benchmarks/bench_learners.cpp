#include <benchmark/benchmark.h>

#include "tl/learners.hpp"
#include "tl/math.hpp"
#include "tl/rng.hpp"

namespace {

struct Problem {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

Problem make_problem(int n, int p, std::uint64_t seed) {
  tl::Rng rng(seed);
  Problem pr;
  pr.X.resize(n, p);
  pr.y.resize(n);
  for (int i = 0; i < n; ++i) {
    double eta = -0.5;
    for (int j = 0; j < p; ++j) {
      pr.X(i, j) = rng.normal();
      eta += 0.3 * pr.X(i, j);
    }
    pr.y(i) = rng.bernoulli(tl::expit(eta)) ? 1.0 : 0.0;
  }
  return pr;
}

void BM_LogisticFit(benchmark::State& state) {
  Problem pr = make_problem(static_cast<int>(state.range(0)), 5, 1);
  auto spec = tl::LearnerSpec::make(tl::LearnerKind::logistic);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tl::fit(spec, pr.X, pr.y));
  }
}
BENCHMARK(BM_LogisticFit)->Arg(225)->Arg(1000)->Arg(5000);

void BM_BoostedStumpsFit(benchmark::State& state) {
  Problem pr = make_problem(1000, 5, 2);
  auto spec = tl::LearnerSpec::make(tl::LearnerKind::boosted_stumps,
                                    {{"rounds", static_cast<double>(state.range(0))}});
  for (auto _ : state) {
    benchmark::DoNotOptimize(tl::fit(spec, pr.X, pr.y));
  }
}
BENCHMARK(BM_BoostedStumpsFit)->Arg(50)->Arg(200);

void BM_LassoPath(benchmark::State& state) {
  Problem pr = make_problem(static_cast<int>(state.range(0)), 10, 3);
  double lmax = tl::lasso_lambda_max(pr.X, pr.y, tl::LossKind::negative_log_likelihood);
  std::vector<double> grid = tl::default_lambda_grid(lmax, 50, 1e-3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        tl::lasso_path(pr.X, pr.y, grid, tl::LossKind::negative_log_likelihood));
  }
}
BENCHMARK(BM_LassoPath)->Arg(225)->Arg(1000);

void BM_SplineLogisticFit(benchmark::State& state) {
  Problem pr = make_problem(1000, 5, 4);
  auto spec = tl::LearnerSpec::make(tl::LearnerKind::spline_logistic);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tl::fit(spec, pr.X, pr.y));
  }
}
BENCHMARK(BM_SplineLogisticFit);

}  // namespace

BENCHMARK_MAIN();

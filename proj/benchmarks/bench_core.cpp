#include <benchmark/benchmark.h>

#include <random>

#include "calibdiag/calibration.hpp"
#include "calibdiag/dgp.hpp"
#include "calibdiag/diagnostic.hpp"
#include "calibdiag/estimators.hpp"
#include "calibdiag/learners.hpp"

using namespace calibdiag;

namespace {

SimulatedSample draw(std::size_t n) {
  DgpParams params;
  params.n = n;
  return sample_dgp(params, DriftSpec{}, 1);
}

void BM_RidgeGcv(benchmark::State& state) {
  const auto s = draw(static_cast<std::size_t>(state.range(0)));
  const Matrix basis = expand_poly2(s.x);
  const auto grid = default_lambda_grid();
  for (auto _ : state) benchmark::DoNotOptimize(fit_ridge_gcv(basis, s.p, grid));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RidgeGcv)->RangeMultiplier(4)->Range(1 << 10, 1 << 16)->Complexity();

void BM_CrossFit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto s = draw(n);
  const auto folds = make_folds(n, 5, 1);
  for (auto _ : state) benchmark::DoNotOptimize(cross_fit_predict(s.x, s.y, folds, LearnerConfig::ridge_gcv()));
}
BENCHMARK(BM_CrossFit)->RangeMultiplier(4)->Range(1 << 10, 1 << 16);

void BM_Pava(benchmark::State& state) {
  const auto n = state.range(0);
  std::mt19937_64 eng(2);
  std::uniform_real_distribution<double> u;
  Vector scores(n), labels(n);
  for (Index i = 0; i < n; ++i) {
    scores[i] = u(eng);
    labels[i] = u(eng) < scores[i] ? 1.0 : 0.0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit_isotonic(scores, labels));
  state.SetComplexityN(n);
}
BENCHMARK(BM_Pava)->RangeMultiplier(4)->Range(1 << 10, 1 << 18)->Complexity();

void BM_SoftEstimator(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto s = draw(n);
  const auto u = s.unlabelled();
  const auto folds = make_folds(n, 5, 3);
  for (auto _ : state) benchmark::DoNotOptimize(soft_estimator(u, folds));
}
BENCHMARK(BM_SoftEstimator)->Arg(3000)->Arg(30000);

void BM_Diagnostic(benchmark::State& state) {
  const auto u = draw(3000);
  for (auto _ : state) benchmark::DoNotOptimize(run_diagnostic(u.unlabelled(), std::nullopt, DiagnosticConfig{}));
}
BENCHMARK(BM_Diagnostic);

}  // namespace
BENCHMARK_MAIN();

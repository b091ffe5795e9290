#include <benchmark/benchmark.h>

#include <random>

#include "mmeval/calibration.hpp"
#include "mmeval/diversity.hpp"
#include "mmeval/statistics.hpp"

using namespace mmeval;

namespace {

std::vector<std::vector<double>> gaussian_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> rows(n, std::vector<double>(d));
  for (auto& r : rows) {
    for (auto& v : r) v = g(rng);
  }
  return rows;
}

void BM_Diversity(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto m = EmbeddingMatrix::from_rows(gaussian_rows(n, 512, 1));
  for (auto _ : state) benchmark::DoNotOptimize(diversity_from_embeddings(m));
}
BENCHMARK(BM_Diversity)->Arg(3)->Arg(10)->Arg(20);

void BM_KendallTauB(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> likert(1, 5);
  std::normal_distribution<double> g;
  std::vector<double> p(m), r(m);
  for (std::size_t i = 0; i < m; ++i) {
    r[i] = likert(rng);
    p[i] = r[i] + g(rng);
  }
  const PairedSeries s(p, r);
  for (auto _ : state) benchmark::DoNotOptimize(kendall_tau_b(s));
  state.SetComplexityN(static_cast<std::int64_t>(m));
}
BENCHMARK(BM_KendallTauB)->Arg(300)->Arg(1500)->Arg(6000)->Complexity();

void BM_BootstrapTau(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<double> p(300), r(300);
  for (std::size_t i = 0; i < 300; ++i) {
    r[i] = g(rng);
    p[i] = r[i] + g(rng);
  }
  const PairedSeries s(p, r);
  for (auto _ : state) benchmark::DoNotOptimize(bootstrap_ci(s, RankStatistic::Tau, 1000, 42));
}
BENCHMARK(BM_BootstrapTau)->Unit(benchmark::kMillisecond);

void BM_RidgeCrossValidation(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  auto rows = gaussian_rows(m, 4, 4);
  std::vector<double> y;
  for (const auto& r : rows) y.push_back(1.0 + 0.5 * r[0] + 0.3 * r[2]);
  const DesignMatrix data(Matrix::from_rows(rows), y, {"a", "b", "c", "d"});
  const std::vector<double> grid{0.01, 0.1, 1.0, 10.0};
  for (auto _ : state) benchmark::DoNotOptimize(cross_validate_alpha(data, grid, 5, 42));
}
BENCHMARK(BM_RidgeCrossValidation)->Arg(1250)->Arg(5000);

void BM_TwoStageCalibration(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u;
  std::normal_distribution<double> g;
  std::vector<CalibrationRow> rows;
  for (int a = 0; a < 142; ++a) {
    for (int s = 0; s < 9; ++s) {
      CalibrationRow r;
      r.key = {"a" + std::to_string(a), "s" + std::to_string(s)};
      r.s_fact = u(rng);
      r.s_rel = u(rng);
      r.s_coh = u(rng);
      r.s_flu = u(rng);
      r.s_relevance = u(rng);
      r.s_diversity = u(rng);
      r.overall = 1.0 + 2.0 * r.s_fact + r.s_coh + 0.3 * g(rng);
      rows.push_back(r);
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(calibrate_two_stage(rows, {}));
}
BENCHMARK(BM_TwoStageCalibration)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

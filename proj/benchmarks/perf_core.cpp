#include "gsax/acquisition.hpp"
#include "gsax/benchmarks.hpp"
#include "gsax/driver.hpp"
#include "gsax/marginal.hpp"
#include "gsax/sobol.hpp"

#include <benchmark/benchmark.h>

#include <map>

namespace {

gsax::TrainingSet ishigami_data(std::size_t n, std::uint64_t seed) {
  const gsax::Benchmark b = gsax::ishigami();
  gsax::TrainingSet data;
  data.bounds = b.bounds;
  data.inputs = gsax::lhs_sample(n, b.bounds, seed);
  data.outputs.resize(data.inputs.rows());
  for (Eigen::Index i = 0; i < data.inputs.rows(); ++i) {
    data.outputs[i] = b.evaluate(data.inputs.row(i).transpose());
  }
  return data;
}

const gsax::GpModel& fitted(std::size_t n) {
  static std::map<std::size_t, gsax::GpModel> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, gsax::fit(ishigami_data(n, 7))).first;
  return it->second;
}

void BM_KernelIntegral1d(benchmark::State& state) {
  double t = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gsax::kernel_integral_1d(3.0, t, 0.0, 1.0));
    t += 1e-9;
  }
}
BENCHMARK(BM_KernelIntegral1d);

void BM_Fit(benchmark::State& state) {
  const auto data = ishigami_data(static_cast<std::size_t>(state.range(0)), 3);
  gsax::FitOptions opt;
  opt.restarts = 2;
  opt.warm_start = gsax::Vector::Constant(3, 1.0);
  for (auto _ : state) {
    try {
      benchmark::DoNotOptimize(gsax::fit(data, opt));
    } catch (const gsax::FitError&) {
    }
  }
}
BENCHMARK(BM_Fit)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_PredictBatch(benchmark::State& state) {
  const auto& model = fitted(static_cast<std::size_t>(state.range(0)));
  gsax::Rng rng(1);
  const gsax::Matrix x = gsax::uniform_sample(5000, model.bounds(), rng);
  for (auto _ : state) benchmark::DoNotOptimize(gsax::predict_batch(model, x));
}
BENCHMARK(BM_PredictBatch)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_MainEffect(benchmark::State& state) {
  const auto& model = fitted(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(gsax::main_effect(model, 0, 128));
}
BENCHMARK(BM_MainEffect)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_MeanPredictorEstimate(benchmark::State& state) {
  const auto& model = fitted(static_cast<std::size_t>(state.range(0)));
  gsax::Rng rng(2);
  const gsax::Matrix x = gsax::uniform_sample(5000, model.bounds(), rng);
  for (auto _ : state) benchmark::DoNotOptimize(gsax::estimate_mean_predictor(model, x));
}
BENCHMARK(BM_MeanPredictorEstimate)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_MusicScores(benchmark::State& state) {
  const auto& model = fitted(static_cast<std::size_t>(state.range(0)));
  gsax::Rng rng(3);
  const gsax::Matrix x = gsax::uniform_sample(5000, model.bounds(), rng);
  const gsax::MarginalCache cache(model, 128);
  const gsax::Vector w = gsax::Vector::Constant(3, 1.0 / 3.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        gsax::score_candidates(model, &cache, x, gsax::StrategyKind::music_vigf_d2, w));
  }
}
BENCHMARK(BM_MusicScores)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

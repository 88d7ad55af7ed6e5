#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "depiabs/calibration.hpp"
#include "depiabs/errors.hpp"
#include "support.hpp"

namespace depiabs {
namespace {

double population_sd(const std::vector<double>& x) {
  const double mu = testing::mean_of(x);
  double ss = 0;
  for (double v : x) ss += (v - mu) * (v - mu);
  return std::sqrt(ss / static_cast<double>(x.size()));
}

TEST(Zscore, LinearSeriesReproducesTarget) {
  const std::vector<double> sim{0, 1, 2}, target{10, 30, 50};
  const auto out = zscore_scale(sim, target);
  ASSERT_EQ(out.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(out[i], target[i], 1e-12);
}

TEST(Zscore, TargetMapsToItself) {
  const std::vector<double> target{3, 8, 1, 9, 4};
  const auto out = zscore_scale(target, target);
  for (std::size_t i = 0; i < target.size(); ++i) EXPECT_NEAR(out[i], target[i], 1e-12);
}

TEST(Zscore, MatchesSpreadAndMinimumOnRandomPairs) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-50, 200);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> sim(20), target(20);
    for (auto& v : sim) v = u(rng);
    for (auto& v : target) v = u(rng);
    const auto out = zscore_scale(sim, target);
    EXPECT_NEAR(population_sd(out), population_sd(target), 1e-9 * population_sd(target));
    EXPECT_NEAR(*std::min_element(out.begin(), out.end()), *std::min_element(target.begin(), target.end()), 1e-9);
  }
}

TEST(Zscore, InvariantToPositiveAffineMaps) {
  const std::vector<double> sim{2, 7, 3, 11, 5}, target{40, 10, 25, 60, 5};
  std::vector<double> moved(sim.size());
  std::transform(sim.begin(), sim.end(), moved.begin(), [](double v) { return 3.5 * v - 12; });
  const auto a = zscore_scale(sim, target), b = zscore_scale(moved, target);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-10);
}

TEST(Zscore, ConstantSimulationIsFlagged) {
  const std::vector<double> sim{4, 4, 4}, target{1, 2, 6};
  const auto stats = scaling_stats(sim, target);
  EXPECT_TRUE(stats.degenerate);
  for (double v : zscore_scale(sim, target)) EXPECT_DOUBLE_EQ(v, 3.0);
}

TEST(Zscore, RejectsShortOrMismatchedSeries) {
  EXPECT_THROW(zscore_scale(std::vector<double>{1}, std::vector<double>{2}), UsageError);
  EXPECT_THROW(zscore_scale(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), UsageError);
}

TEST(Zscore, GradientMatchesFiniteDifferences) {
  const std::vector<double> target{5, 9, 2, 14, 7};
  const std::vector<double> weights{0.3, -1.2, 0.8, 2.0, -0.5};
  testing::expect_gradient_matches(
      [&](const Tensor& x) {
        const Tensor scaled = zscore_scale(x, target).series;
        return sum(scaled * Tensor::from(weights));
      },
      {1.0, 2.5, 0.4, 3.3, 2.0}, 1e-4, 1e-6);
}

TEST(Zscore, ApplyScalingAgreesOnTrainingWindow) {
  const std::vector<double> sim{1, 4, 2, 8}, target{10, 20, 15, 40};
  const auto stats = scaling_stats(sim, target);
  const Tensor applied = apply_scaling(Tensor::from(sim), stats);
  const auto direct = zscore_scale(sim, target);
  for (std::size_t i = 0; i < sim.size(); ++i) EXPECT_NEAR(applied[i], direct[i], 1e-10);
}

TEST(Metrics, HandComputedExample) {
  const std::vector<double> y{1, 2, 3}, yhat{2, 2, 2};
  const auto m = metrics(y, yhat);
  EXPECT_NEAR(m.nd, 2.0 / 6.0, 1e-12);
  EXPECT_NEAR(m.mae, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(m.rmse, std::sqrt(8.0) / 3.0, 1e-12);
  EXPECT_NEAR(m.rmse_standard, std::sqrt(2.0 / 3.0), 1e-12);
}

TEST(Metrics, PerfectForecastScoresZero) {
  const std::vector<double> y{4, 0, 7};
  const auto m = metrics(y, y);
  EXPECT_EQ(m.nd, 0.0);
  EXPECT_EQ(m.rmse, 0.0);
  EXPECT_EQ(m.mae, 0.0);
}

TEST(Metrics, ErrorsOnDegenerateInput) {
  EXPECT_THROW(metrics(std::vector<double>{0, 0}, std::vector<double>{1, 1}), DomainError);
  EXPECT_THROW(metrics(std::vector<double>{1}, std::vector<double>{1, 2}), UsageError);
  EXPECT_THROW(metrics(std::vector<double>{}, std::vector<double>{}), UsageError);
}

TEST(Schedule, DecaysGeometricallyBetweenEndpoints) {
  CalibrationConfig cfg;
  cfg.epochs = 5;
  EXPECT_DOUBLE_EQ(cfg.learning_rate(0), 0.1);
  EXPECT_NEAR(cfg.learning_rate(4), 0.001, 1e-15);
  for (std::size_t e = 1; e < 5; ++e)
    EXPECT_NEAR(cfg.learning_rate(e) / cfg.learning_rate(e - 1), std::pow(0.01, 0.25), 1e-12);
}

TEST(Schedule, ValidationRejectsBadRates) {
  CalibrationConfig cfg;
  cfg.lr_final = 0.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.lr_initial = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.restarts = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

ModelParams small_model() {
  ModelParams p;
  p.population = 60;
  p.a0 = 6;
  p.s0 = 54;
  p.horizon = 20;
  p[Param::beta] = 0.3;
  return p;
}

std::vector<double> synthetic(const ModelParams& p, Observable o, std::uint64_t seed) {
  return run(p, seed).series(o);
}

TEST(Calibrate, ZeroEpochsLeavesParametersUnchanged) {
  const auto p = small_model();
  CalibrationConfig cfg;
  cfg.epochs = 0;
  cfg.observable = Observable::new_infections;
  const auto data = synthetic(p, cfg.observable, 5);
  const auto result = calibrate(p, data, cfg);
  EXPECT_EQ(result.fitted.values, p.values);
  EXPECT_TRUE(result.loss_trace.empty());
  EXPECT_TRUE(std::isfinite(result.best_loss));
}

TEST(Calibrate, TraceIsFiniteAndBestIsTheMinimum) {
  const auto p = small_model();
  CalibrationConfig cfg;
  cfg.epochs = 8;
  cfg.observable = Observable::cumulative_infections;
  cfg.learnable = {Param::beta, Param::m};
  auto truth = p;
  truth[Param::beta] = 0.15;
  const auto data = synthetic(truth, cfg.observable, 9);
  const auto result = calibrate(p, data, cfg);
  ASSERT_EQ(result.loss_trace.size(), 8u);
  for (double v : result.loss_trace) EXPECT_TRUE(std::isfinite(v));
  EXPECT_DOUBLE_EQ(result.best_loss, *std::min_element(result.loss_trace.begin(), result.loss_trace.end()));
  EXPECT_DOUBLE_EQ(result.loss_trace[result.best_epoch], result.best_loss);
  for (std::size_t i = 0; i < kLearnableCount; ++i) {
    const auto q = static_cast<Param>(i);
    if (q != Param::beta && q != Param::m) {
      EXPECT_EQ(result.fitted[q], p[q]);
    }
  }
}

TEST(Calibrate, IsDeterministicForAFixedSeed) {
  const auto p = small_model();
  CalibrationConfig cfg;
  cfg.epochs = 4;
  cfg.observable = Observable::new_infections;
  cfg.learnable = {Param::beta};
  const auto data = synthetic(p, cfg.observable, 2);
  const auto a = calibrate(p, data, cfg), b = calibrate(p, data, cfg);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  EXPECT_EQ(a.fitted.values, b.fitted.values);
}

TEST(Calibrate, RestartsKeepTheBestRun) {
  const auto p = small_model();
  CalibrationConfig cfg;
  cfg.epochs = 3;
  cfg.restarts = 3;
  cfg.observable = Observable::new_infections;
  cfg.learnable = {Param::beta};
  const auto data = synthetic(p, cfg.observable, 2);
  const auto best = calibrate(p, data, cfg);
  for (std::size_t r = 0; r < 3; ++r) {
    auto single = cfg;
    single.restarts = 1;
    single.seed = cfg.seed + r;
    EXPECT_LE(best.best_loss, calibrate(p, data, single).best_loss);
  }
}

TEST(Calibrate, TrainingWindowLongerThanDataIsRejected) {
  const auto p = small_model();
  CalibrationConfig cfg;
  cfg.train_days = 50;
  EXPECT_THROW(calibrate(p, std::vector<double>(10, 1.0), cfg), UsageError);
}

TEST(LossGradient, MatchesFiniteDifferencesOfTheLoss) {
  auto p = small_model();
  p.population = 20;
  p.a0 = 4;
  p.i0 = 4;
  p.s0 = 12;
  p.horizon = 10;
  p[Param::beta] = 0.5;
  p[Param::m] = 0.5;
  CalibrationConfig cfg;
  cfg.observable = Observable::cumulative_infections;
  cfg.learnable = {Param::beta, Param::m, Param::theta};
  auto truth = p;
  truth[Param::beta] = 0.2;
  const auto data = synthetic(truth, cfg.observable, 4);
  const auto g = loss_gradient(p, data, cfg);
  EXPECT_NEAR(g.loss, loss_value(p, data, cfg), 1e-12);
  for (std::size_t i = 0; i < g.params.size(); ++i) {
    const double h = 1e-5;
    auto up = p, down = p;
    up[g.params[i]] += h;
    down[g.params[i]] -= h;
    const double numeric = (loss_value(up, data, cfg) - loss_value(down, data, cfg)) / (2 * h);
    const double scale = std::max({std::abs(g.grad[i]), std::abs(numeric), 1e-6});
    EXPECT_LE(std::abs(g.grad[i] - numeric) / scale, 1e-3) << param_info(g.params[i]).name;
  }
}

TEST(Forecast, ZeroHorizonIsEmpty) {
  const auto p = small_model();
  CalibrationConfig cfg;
  cfg.observable = Observable::new_infections;
  const auto data = synthetic(p, cfg.observable, 3);
  const auto f = forecast(p, data, 0, cfg);
  EXPECT_TRUE(f.forecast.empty());
  EXPECT_EQ(f.scaled.size(), data.size());
}

TEST(Forecast, TrainingPartMatchesScaledFitAndReruns) {
  const auto p = small_model();
  CalibrationConfig cfg;
  cfg.observable = Observable::cumulative_infections;
  const auto full = synthetic(p, cfg.observable, 3);
  const std::vector<double> train(full.begin(), full.begin() + 12);
  const auto a = forecast(p, train, 6, cfg), b = forecast(p, train, 6, cfg);
  EXPECT_EQ(a.forecast, b.forecast);
  ASSERT_EQ(a.forecast.size(), 6u);
  const std::vector<double> head(a.simulated.begin(), a.simulated.begin() + 12);
  const auto direct = zscore_scale(head, train);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(a.scaled[i], direct[i], 1e-9);
}

TEST(Forecast, EvaluationScoresHeldOutWindow) {
  const auto p = small_model();
  CalibrationConfig cfg;
  cfg.epochs = 2;
  cfg.observable = Observable::cumulative_infections;
  cfg.learnable = {Param::beta};
  const auto data = synthetic(p, cfg.observable, 8);
  const auto eval = calibrate_and_forecast(p, data, 14, 6, cfg);
  ASSERT_EQ(eval.held_out.size(), 6u);
  EXPECT_TRUE(std::equal(eval.held_out.begin(), eval.held_out.end(), data.begin() + 14));
  const double train_mean = std::accumulate(data.begin(), data.begin() + 14, 0.0) / 14.0;
  EXPECT_NEAR(eval.baseline.mae, metrics(eval.held_out, std::vector<double>(6, train_mean)).mae, 1e-12);
  EXPECT_NEAR(eval.model.nd, metrics(eval.held_out, eval.forecast.forecast).nd, 1e-12);
  EXPECT_THROW(calibrate_and_forecast(p, data, 15, 6, cfg), UsageError);
}

}  // namespace
}  // namespace depiabs

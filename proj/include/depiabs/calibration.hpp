#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "depiabs/engine.hpp"

namespace depiabs {

struct ScalingStats {
  double sim_mean = 0, sim_sd = 0;
  double target_mean = 0, target_sd = 0, target_min = 0;
  double transformed_min = 0;  // min of the moment-matched series before translation
  bool degenerate = false;     // simulated series had no spread
};

ScalingStats scaling_stats(std::span<const double> sim, std::span<const double> target);

// Moment-match sim to target (population sd), then translate so the minima
// agree. A constant sim maps to the constant target mean and is flagged.
struct Scaled {
  Tensor series;
  ScalingStats stats;
};
Scaled zscore_scale(const Tensor& sim, std::span<const double> target);
std::vector<double> zscore_scale(std::span<const double> sim, std::span<const double> target);

// Applies fixed statistics, e.g. training-window ones to a longer run.
Tensor apply_scaling(const Tensor& sim, const ScalingStats& stats);

struct Metrics {
  double nd = 0;          // sum |y - yhat| / sum |y|
  double rmse = 0;        // (1/T) sqrt(sum |y^2 - yhat^2|)
  double mae = 0;         // (1/T) sum |y - yhat|
  double rmse_standard = 0;  // sqrt(mean (y - yhat)^2), for comparison elsewhere
};

Metrics metrics(std::span<const double> y, std::span<const double> yhat);

enum class Loss { mse, mae };

struct CalibrationConfig {
  std::size_t epochs = 300;
  double lr_initial = 0.1;
  double lr_final = 0.001;
  Loss loss = Loss::mse;
  Observable observable = Observable::new_deaths;
  std::size_t train_days = 0;  // 0: the whole target series
  std::uint64_t seed = 1;
  std::size_t restarts = 1;    // extra restarts use seeds seed+1, seed+2, ...
  std::vector<Param> learnable;  // empty: every learnable parameter

  void validate() const;
  // Geometric decay from lr_initial to lr_final over the epochs.
  double learning_rate(std::size_t epoch) const;
};

struct CalibrationResult {
  ModelParams fitted;
  std::vector<double> loss_trace;
  double best_loss = 0;
  std::size_t best_epoch = 0;
  std::uint64_t seed = 0;
};

CalibrationResult calibrate(const ModelParams& params, std::span<const double> data, const CalibrationConfig& cfg);

// Loss and gradients with respect to each parameter's natural value.
struct LossGradient {
  double loss = 0;
  std::vector<Param> params;
  std::vector<double> grad;
};
LossGradient loss_gradient(const ModelParams& params, std::span<const double> data, const CalibrationConfig& cfg);
double loss_value(const ModelParams& params, std::span<const double> data, const CalibrationConfig& cfg);

struct Forecast {
  std::vector<double> simulated;  // raw model output over train + horizon
  std::vector<double> scaled;     // whole run scaled with training statistics
  std::vector<double> forecast;   // the last `horizon` days of `scaled`
  ScalingStats stats;
};

// Runs the training window plus `horizon` days and scales the whole series
// with the statistics of the training window.
Forecast forecast(const ModelParams& fitted, std::span<const double> train, std::size_t horizon,
                  const CalibrationConfig& cfg);

struct ForecastEvaluation {
  CalibrationResult calibration;
  Forecast forecast;
  std::vector<double> held_out;
  Metrics model;
  Metrics baseline;  // constant training-window mean
};

// Calibrates on data[0, train_days), forecasts the next `horizon` days and
// scores both the model and a constant-mean baseline on the held-out part.
ForecastEvaluation calibrate_and_forecast(const ModelParams& params, std::span<const double> data,
                                          std::size_t train_days, std::size_t horizon, CalibrationConfig cfg);

}  // namespace depiabs

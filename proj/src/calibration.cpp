#include "depiabs/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "depiabs/errors.hpp"
#include "depiabs/parallel.hpp"

namespace depiabs {

namespace {

struct MeanSd {
  double mean, sd;
};

MeanSd mean_sd(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  const double mu = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0;
  for (double v : x) ss += (v - mu) * (v - mu);
  return {mu, std::sqrt(ss / n)};
}

void check_lengths(std::size_t sim, std::size_t target) {
  if (sim < 2 || target < 2) throw UsageError("zscore_scale: series need at least two points");
  if (sim != target) throw UsageError("zscore_scale: series lengths differ");
}

std::vector<Param> selected(const CalibrationConfig& cfg) {
  if (!cfg.learnable.empty()) return cfg.learnable;
  std::vector<Param> all;
  for (const auto& info : learnable_params()) all.push_back(info.id);
  return all;
}

// Keeps a value strictly inside its domain so the unconstrained map is finite.
double interior(Domain d, double v) {
  switch (d) {
    case Domain::positive: return std::max(v, 1e-12);
    case Domain::unit: return std::clamp(v, 1e-9, 1.0 - 1e-9);
    case Domain::real: return v;
  }
  return v;
}

std::span<const double> training_window(std::span<const double> data, const CalibrationConfig& cfg) {
  const std::size_t n = cfg.train_days ? cfg.train_days : data.size();
  if (n > data.size()) throw UsageError("training window is longer than the data");
  if (n < 2) throw UsageError("training window needs at least two days");
  return data.first(n);
}

Tensor loss_of(const Tensor& scaled, std::span<const double> target, Loss loss) {
  const Tensor diff = scaled - Tensor::from(std::vector<double>(target.begin(), target.end()));
  return loss == Loss::mse ? mean(square(diff)) : mean(sqrt(square(diff) + 1e-12));
}

Tensor model_loss(const ModelParams& params, const ParamTensors& values, std::span<const double> target,
                  const CalibrationConfig& cfg, std::uint64_t seed) {
  const SimTrace trace = simulate(params, values, seed, target.size());
  return loss_of(zscore_scale(trace.series(cfg.observable), target).series, target, cfg.loss);
}

std::string describe(const ModelParams& p, const std::vector<Param>& which) {
  std::ostringstream os;
  for (Param q : which) os << ' ' << param_info(q).name << '=' << p[q];
  return os.str();
}

CalibrationResult calibrate_once(const ModelParams& params, std::span<const double> target,
                                 const CalibrationConfig& cfg, std::uint64_t seed) {
  const std::vector<Param> which = selected(cfg);
  std::vector<double> raw(which.size());
  for (std::size_t i = 0; i < which.size(); ++i) {
    const Domain d = param_info(which[i]).domain;
    raw[i] = to_unconstrained(d, interior(d, params[which[i]]));
  }

  CalibrationResult result;
  result.fitted = params;
  result.seed = seed;
  result.best_loss = std::numeric_limits<double>::infinity();
  std::vector<double> m1(which.size(), 0.0), m2(which.size(), 0.0);
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;

  ModelParams current = params;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    ParamTensors values = ParamTensors::constants(current);
    std::vector<Tensor> leaves;
    for (std::size_t i = 0; i < which.size(); ++i) {
      leaves.push_back(Tensor::parameter(raw[i]));
      values[which[i]] = from_unconstrained(param_info(which[i]).domain, leaves.back());
      current[which[i]] = values[which[i]].item();
    }
    const Tensor loss = model_loss(current, values, target, cfg, seed);
    const double lv = loss.item();
    if (!std::isfinite(lv))
      throw DomainError("calibration loss became non-finite at epoch " + std::to_string(epoch) + ";" +
                        describe(current, which));
    result.loss_trace.push_back(lv);
    if (lv < result.best_loss) {
      result.best_loss = lv;
      result.best_epoch = epoch;
      result.fitted = current;
    }
    loss.backward();

    const double lr = cfg.learning_rate(epoch);
    const double t = static_cast<double>(epoch + 1);
    for (std::size_t i = 0; i < which.size(); ++i) {
      double g = leaves[i].grad_item();
      if (!std::isfinite(g)) g = 0.0;
      m1[i] = b1 * m1[i] + (1 - b1) * g;
      m2[i] = b2 * m2[i] + (1 - b2) * g * g;
      const double mh = m1[i] / (1 - std::pow(b1, t)), vh = m2[i] / (1 - std::pow(b2, t));
      raw[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
  }
  if (cfg.epochs == 0) result.best_loss = loss_value(params, target, cfg);
  return result;
}

}  // namespace

ScalingStats scaling_stats(std::span<const double> sim, std::span<const double> target) {
  check_lengths(sim.size(), target.size());
  ScalingStats s;
  const MeanSd a = mean_sd(sim), b = mean_sd(target);
  s.sim_mean = a.mean;
  s.sim_sd = a.sd;
  s.target_mean = b.mean;
  s.target_sd = b.sd;
  s.target_min = *std::min_element(target.begin(), target.end());
  s.degenerate = !(a.sd > 0.0);
  if (s.degenerate) {
    s.transformed_min = b.mean;
  } else {
    double lo = INFINITY;
    for (double v : sim) lo = std::min(lo, (v - a.mean) / a.sd * b.sd + b.mean);
    s.transformed_min = lo;
  }
  return s;
}

Scaled zscore_scale(const Tensor& sim, std::span<const double> target) {
  check_lengths(sim.size(), target.size());
  Scaled out;
  out.stats = scaling_stats(sim.values(), target);
  const ScalingStats& s = out.stats;
  if (s.degenerate) {
    out.series = 0.0 * sim + s.target_mean;
    return out;
  }
  const Tensor mu = mean(sim);
  const Tensor centred = sim - mu;
  const Tensor sd = sqrt(mean(square(centred)));
  const Tensor matched = centred / sd * s.target_sd + s.target_mean;
  out.series = matched - min_element(matched) + s.target_min;
  return out;
}

std::vector<double> zscore_scale(std::span<const double> sim, std::span<const double> target) {
  NoGradGuard guard;
  const Tensor t = zscore_scale(Tensor::from(std::vector<double>(sim.begin(), sim.end())), target).series;
  return {t.values().begin(), t.values().end()};
}

Tensor apply_scaling(const Tensor& sim, const ScalingStats& s) {
  if (s.degenerate) return 0.0 * sim + s.target_mean;
  return (sim - s.sim_mean) / s.sim_sd * s.target_sd + (s.target_mean + s.target_min - s.transformed_min);
}

Metrics metrics(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) throw UsageError("metrics: series lengths differ");
  if (y.empty()) throw UsageError("metrics: empty series");
  double abs_y = 0, abs_err = 0, sq_gap = 0, sq_err = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    abs_y += std::abs(y[i]);
    abs_err += std::abs(y[i] - yhat[i]);
    sq_gap += std::abs(y[i] * y[i] - yhat[i] * yhat[i]);
    sq_err += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  }
  if (abs_y == 0.0) throw DomainError("metrics: ND undefined for an all-zero target");
  const double T = static_cast<double>(y.size());
  Metrics m;
  m.nd = abs_err / abs_y;
  m.rmse = std::sqrt(sq_gap) / T;
  m.mae = abs_err / T;
  m.rmse_standard = std::sqrt(sq_err / T);
  return m;
}

void CalibrationConfig::validate() const {
  if (!(lr_initial > 0.0) || !(lr_final > 0.0)) throw ConfigError("learning rates must be positive");
  if (lr_final > lr_initial) throw ConfigError("learning rate must not increase over epochs");
  if (restarts < 1) throw ConfigError("restarts must be at least 1");
}

double CalibrationConfig::learning_rate(std::size_t epoch) const {
  if (epochs <= 1) return lr_initial;
  const double f = static_cast<double>(epoch) / static_cast<double>(epochs - 1);
  return lr_initial * std::pow(lr_final / lr_initial, f);
}

LossGradient loss_gradient(const ModelParams& params, std::span<const double> data, const CalibrationConfig& cfg) {
  const auto target = training_window(data, cfg);
  LossGradient out;
  out.params = selected(cfg);
  ParamTensors values = ParamTensors::constants(params);
  for (Param p : out.params) values[p] = Tensor::parameter(params[p]);
  const Tensor loss = model_loss(params, values, target, cfg, cfg.seed);
  loss.backward();
  out.loss = loss.item();
  for (Param p : out.params) out.grad.push_back(values[p].grad_item());
  return out;
}

double loss_value(const ModelParams& params, std::span<const double> data, const CalibrationConfig& cfg) {
  NoGradGuard guard;
  const auto target = training_window(data, cfg);
  return model_loss(params, ParamTensors::constants(params), target, cfg, cfg.seed).item();
}

CalibrationResult calibrate(const ModelParams& params, std::span<const double> data, const CalibrationConfig& cfg) {
  cfg.validate();
  params.validate();
  const auto target = training_window(data, cfg);
  std::vector<CalibrationResult> runs(cfg.restarts);
  parallel_for(cfg.restarts, [&](std::size_t r) { runs[r] = calibrate_once(params, target, cfg, cfg.seed + r); });
  return *std::min_element(runs.begin(), runs.end(),
                           [](const auto& a, const auto& b) { return a.best_loss < b.best_loss; });
}

Forecast forecast(const ModelParams& fitted, std::span<const double> train, std::size_t horizon,
                  const CalibrationConfig& cfg) {
  NoGradGuard guard;
  Forecast out;
  if (train.size() < 2) throw UsageError("forecast needs a training window of at least two days");
  const std::size_t total = train.size() + horizon;
  const SimTrace trace = simulate(fitted, ParamTensors::constants(fitted), cfg.seed, total);
  const Tensor sim = trace.series(cfg.observable);
  out.simulated.assign(sim.values().begin(), sim.values().end());
  out.stats = scaling_stats(std::span<const double>(out.simulated).first(train.size()), train);
  const Tensor scaled = apply_scaling(sim, out.stats);
  out.scaled.assign(scaled.values().begin(), scaled.values().end());
  out.forecast.assign(out.scaled.end() - static_cast<std::ptrdiff_t>(horizon), out.scaled.end());
  return out;
}

ForecastEvaluation calibrate_and_forecast(const ModelParams& params, std::span<const double> data,
                                          std::size_t train_days, std::size_t horizon, CalibrationConfig cfg) {
  if (train_days + horizon > data.size()) throw UsageError("data too short for the training and forecast windows");
  cfg.train_days = train_days;
  ForecastEvaluation out;
  const auto train = data.first(train_days);
  out.calibration = calibrate(params, train, cfg);
  out.forecast = forecast(out.calibration.fitted, train, horizon, cfg);
  if (horizon == 0) return out;
  out.held_out.assign(data.begin() + static_cast<std::ptrdiff_t>(train_days),
                      data.begin() + static_cast<std::ptrdiff_t>(train_days + horizon));
  out.model = metrics(out.held_out, out.forecast.forecast);
  const double level = std::accumulate(train.begin(), train.end(), 0.0) / static_cast<double>(train.size());
  out.baseline = metrics(out.held_out, std::vector<double>(horizon, level));
  return out;
}

}  // namespace depiabs

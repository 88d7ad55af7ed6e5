#include "depiabs/bench.hpp"

#include <algorithm>
#include <chrono>
#include <functional>

#include "depiabs/engine.hpp"
#include "depiabs/errors.hpp"
#include "depiabs/oracle.hpp"

namespace depiabs {

namespace {

double median_seconds(std::size_t repeats, const std::function<void(std::size_t)>& body) {
  if (repeats < 1) throw ConfigError("at least one timing repeat is required");
  std::vector<double> times;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    body(r);
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  return n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
}

}  // namespace

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw UsageError("fit_line needs two or more paired points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw UsageError("fit_line: x has no spread");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

ModelParams with_population(const ModelParams& base, std::size_t population) {
  ModelParams p = base;
  const std::size_t seeded = base.a0 + base.i0 + base.d0;
  if (population < seeded) throw ConfigError("population smaller than the initial infected and dead");
  p.population = population;
  p.s0 = population - seeded;
  return p;
}

double time_engine(const ModelParams& params, std::size_t horizon, std::size_t repeats, std::uint64_t seed) {
  return median_seconds(repeats, [&](std::size_t r) { run(params, seed + r, horizon); });
}

double time_oracle(const ModelParams& params, std::size_t horizon, std::size_t repeats, std::uint64_t seed) {
  return median_seconds(repeats, [&](std::size_t r) { run_discrete(params, seed + r, horizon); });
}

std::vector<ScalingPoint> bench_engine(const ModelParams& base, const std::vector<std::size_t>& populations,
                                       std::size_t horizon, std::size_t repeats, std::uint64_t seed) {
  std::vector<ScalingPoint> out;
  for (std::size_t P : populations)
    out.push_back({P, time_engine(with_population(base, P), horizon, repeats, seed)});
  return out;
}

}  // namespace depiabs

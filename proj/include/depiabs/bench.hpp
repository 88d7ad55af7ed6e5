#pragma once

#include <cstdint>
#include <vector>

#include "depiabs/params.hpp"

namespace depiabs {

struct LinearFit {
  double slope = 0, intercept = 0, r2 = 0;
};

// Ordinary least squares of y on x.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct ScalingPoint {
  std::size_t population = 0;
  double seconds = 0;  // median over repeats
};

// Params resized to `population` agents, keeping the initial infected count.
ModelParams with_population(const ModelParams& base, std::size_t population);

// Wall-clock time of forward engine runs for each population size.
std::vector<ScalingPoint> bench_engine(const ModelParams& base, const std::vector<std::size_t>& populations,
                                       std::size_t horizon, std::size_t repeats, std::uint64_t seed = 1);
double time_engine(const ModelParams& params, std::size_t horizon, std::size_t repeats, std::uint64_t seed = 1);
double time_oracle(const ModelParams& params, std::size_t horizon, std::size_t repeats, std::uint64_t seed = 1);

}  // namespace depiabs

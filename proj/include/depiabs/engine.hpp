#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "depiabs/behaviour.hpp"
#include "depiabs/diffcore/noise.hpp"
#include "depiabs/epidemic.hpp"
#include "depiabs/params.hpp"
#include "depiabs/society.hpp"

namespace depiabs {

// Learnable parameter values as scalar tensors, so a simulation can be
// differentiated with respect to any of them.
struct ParamTensors {
  std::array<Tensor, kLearnableCount> v;

  static ParamTensors constants(const ModelParams& params);
  const Tensor& operator[](Param p) const { return v[static_cast<std::size_t>(p)]; }
  Tensor& operator[](Param p) { return v[static_cast<std::size_t>(p)]; }
};

// Per-agent configuration fixed at initialisation.
struct AgentConfig {
  Tensor salary, salary_kept, age, theta_age, bill;
  Tensor absence_limit;      // eta
  Tensor absence_threshold;  // eta_bar * eta
  Tensor tau1, tau2, zeta1, zeta2, delta1, delta2;
  Tensor supply_upper;
  Tensor tops;  // P x 3 top masses for emergency levels 1..3
  std::array<std::vector<std::size_t>, 3> facility;  // work, shop, hospital
};

struct SimState {
  long t = 0;
  HealthState health;
  EconomyState economy;
  Tensor mu_t, sigma_t;
  Tensor cumulative_infections;
};

enum class Observable : std::size_t {
  new_infections,
  cumulative_infections,
  cumulative_deaths,
  new_deaths,
  critical,
  home,
  work,
  shop,
  hospital,
  susceptible,
  asymptomatic,
  symptomatic,
  deceased,
  count_
};
inline constexpr std::size_t kObservableCount = static_cast<std::size_t>(Observable::count_);

std::string_view observable_name(Observable o);
Observable parse_observable(std::string_view name);

// Daily aggregates as plain numbers.
struct SimulationOutput {
  std::size_t days = 0;
  std::array<std::vector<double>, kObservableCount> columns;

  const std::vector<double>& series(Observable o) const { return columns[static_cast<std::size_t>(o)]; }
  std::vector<double>& series(Observable o) { return columns[static_cast<std::size_t>(o)]; }
};

// Daily aggregates that stay on the gradient graph.
struct SimTrace {
  std::vector<std::array<Tensor, kObservableCount>> days;

  // One entry per day.
  Tensor series(Observable o) const;
  SimulationOutput output() const;
};

class Simulation {
 public:
  Simulation(const ModelParams& params, ParamTensors values, std::uint64_t seed);

  const ModelParams& params() const { return params_; }
  const AgentConfig& agents() const { return agents_; }
  const SimState& state() const { return state_; }

  // Advances one day and returns that day's aggregates.
  std::array<Tensor, kObservableCount> step();

 private:
  ModelParams params_;
  ParamTensors values_;
  NoiseStream noise_;
  FacilityMap map_;
  AgentConfig agents_;
  SimState state_;
  Tensor prev_deaths_;
};

// Initial state drawn from the parameters.
Simulation init_model(const ModelParams& params, std::uint64_t seed);

SimTrace simulate(const ModelParams& params, const ParamTensors& values, std::uint64_t seed, std::size_t horizon);
// Forward-only run of params.horizon days (or `horizon` when nonzero).
SimulationOutput run(const ModelParams& params, std::uint64_t seed, std::size_t horizon = 0);

}  // namespace depiabs

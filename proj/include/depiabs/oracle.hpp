#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "depiabs/engine.hpp"

namespace depiabs {

// Agent-by-agent reference model with exact branching, integer calendar
// arithmetic and sampled transmissions. Deliberately unoptimised: each agent
// is an object, and contacts are found by scanning the whole population.
SimulationOutput run_discrete(const ModelParams& params, std::uint64_t seed, std::size_t horizon = 0);

struct ObservableComparison {
  std::string name;
  double discrete_mean = 0.0, discrete_se = 0.0;
  double relaxed_mean = 0.0, relaxed_se = 0.0;
  double z = 0.0;  // difference in combined standard errors
  bool flagged = false;
};

struct EquivalenceReport {
  std::size_t replicates = 0;
  std::size_t horizon = 0;
  std::vector<ObservableComparison> observables;

  bool all_pass() const;
};

// Compares final-day observables of `replicates` oracle runs with as many
// relaxed-engine runs (seeds first_seed, first_seed + 1, ...). Observables
// more than `bands` combined standard errors apart are flagged. The relaxed
// side may use its own parameter set, e.g. with tightened relaxations.
EquivalenceReport equivalence_report(const ModelParams& discrete, const ModelParams& relaxed, std::size_t replicates,
                                     std::size_t horizon, std::uint64_t first_seed = 1, double bands = 3.0);
EquivalenceReport equivalence_report(const ModelParams& params, std::size_t replicates, std::size_t horizon,
                                     std::uint64_t first_seed = 1, double bands = 3.0);

}  // namespace depiabs

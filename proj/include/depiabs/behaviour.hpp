#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "depiabs/diffcore/tensor.hpp"

namespace depiabs {

enum class Decision : std::size_t { home = 0, work = 1, shop = 2, hospital = 3 };
inline constexpr std::size_t kDecisions = 4;

// Order used to break ties between equally driven decisions.
inline constexpr std::array<Decision, kDecisions> kTiePriority = {Decision::shop, Decision::hospital, Decision::home,
                                                                  Decision::work};

// Severity thresholds between drive levels.
inline constexpr double kSeverityLower = 1.0;
inline constexpr double kSeverityUpper = 4.0;

struct Observation {
  double infected_proportion = 0.0;     // cumulative infections / P
  double death_rate = 0.0;              // cumulative deaths / cumulative infections
  double asymptomatic_proportion = 0.0; // A / (A + I)
};

// Zero denominators give 0.
Observation observe(double cumulative_infections, double cumulative_deaths, double asymptomatic, double symptomatic,
                    std::size_t population);

struct ObservationTensor {
  Tensor infected_proportion, death_rate, asymptomatic_proportion;
};

ObservationTensor observe(const Tensor& cumulative_infections, const Tensor& cumulative_deaths,
                          const Tensor& asymptomatic, const Tensor& symptomatic, std::size_t population);

// ---- Exact rules ----------------------------------------------------------

// 1 below `lower`, 2 in [lower, upper), 3 from `upper` on.
int perspective_level(double value, double lower, double upper);
// Supplies drive the other way: 1 from `upper` on, 2 in [lower, upper), 3 below `lower`.
int supply_level(double supplies, double lower, double upper);
// Weekends give 1; otherwise 3 when both the bill and the absence limit are
// breached, 2 when one is, 1 when neither.
int finance_level(bool weekend, bool bill_breached, bool absence_breached);
int epidemic_severity_drive(int tau, int zeta, int delta);

// Drives towards each decision, indexed by Decision.
using DecisionDrives = std::array<int, kDecisions>;

DecisionDrives decision_drives(int epidemic, int finance, int supply, int health);

struct Plausibility {
  int emergency = 1;
  std::array<Decision, kDecisions> ranking{};  // most plausible first
};

Plausibility emergency_and_plausibility(const DecisionDrives& drives);

// Masses by plausibility rank for a row whose top mass is p:
// (p, (1-p)/2, 3(1-p)/10, (1-p)/5).
std::array<double, kDecisions> rank_masses(double top);

// Top masses for emergency levels 1..3. More urgent levels are more skewed,
// so level 3 gets `prob`, level 2 prob*dprob, level 1 prob*dprob*ddprob.
std::array<double, 3> top_masses(double prob, double dprob, double ddprob);

// Probabilities indexed by Decision.
std::array<double, kDecisions> decision_distribution(const Plausibility& plaus, const std::array<double, 3>& tops);

// ---- Relaxed rules --------------------------------------------------------
// A membership is a P x 3 tensor of soft level weights, each row summing to 1.

// Soft version of perspective_level with logistic steepness k.
Tensor level_membership(const Tensor& value, const Tensor& lower, const Tensor& upper, double k);
Tensor supply_membership(const Tensor& supplies, const Tensor& lower, const Tensor& upper, double k);
// `weekend` is the relaxed calendar weight of today.
Tensor finance_membership(double weekend, const Tensor& savings, const Tensor& bill, const Tensor& absent,
                          const Tensor& absence_threshold, double k);
// Pushes three aspect memberships through the epidemic-severity table.
Tensor epidemic_membership(const Tensor& tau, const Tensor& zeta, const Tensor& delta);
// min(3, epidemic + min(1, health)) with health >= 1 always: a shift by one.
Tensor home_membership(const Tensor& epidemic);

// Mixes decision_distribution over every combination of drive levels,
// weighted by the product of memberships. `tops` is P x 3 (emergency 1..3).
// Returns P x 4 probabilities indexed by Decision.
Tensor decision_probabilities(const Tensor& home, const Tensor& work, const Tensor& shop, const Tensor& hospital,
                              const Tensor& tops);

// Facility rows (P x F) from relaxed decisions (P x 4) and each agent's
// preferred facility for work, shop and hospital.
Tensor select_location(const Tensor& decisions, const std::array<std::vector<std::size_t>, 3>& preferred,
                       std::size_t facility_count);

}  // namespace depiabs

#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "depiabs/diffcore/noise.hpp"
#include "depiabs/diffcore/tensor.hpp"

namespace depiabs {

enum class HealthClass : std::size_t { susceptible = 0, asymptomatic = 1, symptomatic = 2, deceased = 3 };

// Severity bands: symptomatic above 1, dead above 6; remission below 0.
inline constexpr double kSymptomaticSeverity = 1.0;
inline constexpr double kCriticalSeverity = 4.0;
inline constexpr double kLethalSeverity = 6.0;
inline constexpr double kRemissionSeverity = 0.0;

// Duration laws of a fresh infection.
inline constexpr double kIncubationLogMean = 1.63;
inline constexpr double kIncubationLogSd = 0.5;
inline constexpr double kSymptomaticMean = 7.86;
inline constexpr double kSymptomaticSd = 6.46;
inline constexpr double kReferenceAge = 43.11;

// Relaxed class masses, one entry per agent in each row.
struct HealthClasses {
  Tensor susceptible, asymptomatic, symptomatic, deceased;

  Tensor infected() const { return asymptomatic + symptomatic; }
  Tensor alive() const { return 1.0 - deceased; }
};

struct HealthState {
  HealthClasses h;
  Tensor severity;
  Tensor immune;
  Tensor t0;
  Tensor t_inc, t_sym;
  Tensor per;    // first sub-threshold day seen
  Tensor cumul;  // accumulated expected infection initiations
  // Uniform draw fixing this episode's tolerance quantile.
  std::vector<double> tolerance_draw;
};

struct EpidemicParams {
  Tensor beta, m, gamma, p, mu_t, sigma_t, theta;
};

// Dense P x P encounter probabilities from per-agent location rows
// (P x F, home = all zeros). Entry (i, j) is m when i != j share a facility.
Tensor encounter_matrix(const Tensor& locations, const Tensor& m);

// E^I_i = beta * S_i * sum_j E_ij (A_j + I_j).
Tensor expected_exposures(const Tensor& encounters, const HealthClasses& h, const Tensor& beta);

// Same quantity without the P x P matrix. Agent i is at facility
// facility[k][i] with mass outing[k][i] for each outing type k. Equal to
// the dense form when the outing masses are one-hot.
Tensor colocated_exposures(const std::array<Tensor, 3>& outing,
                           const std::array<std::vector<std::size_t>, 3>& facility, std::size_t facility_count,
                           const HealthClasses& h, const Tensor& m, const Tensor& beta);

struct Infection {
  Tensor infect;  // relaxed mass moving S -> A
  Tensor cumul;
};

// Exposure an agent withstands before infection. With `random` set this is
// Gamma(immune, 1) via the quantile at `u`: expected exposures then cross it
// exactly when a Poisson count of initiations reaches immune. Otherwise the
// tolerance is immune itself.
Tensor infection_tolerance(const Tensor& immune, const std::vector<double>& u, bool random);

Infection establish_infections(const Tensor& cumul, const Tensor& exposures, const Tensor& tolerance,
                               const Tensor& susceptible, double xi);

struct Durations {
  Tensor incubation, symptomatic;
};

Durations sample_durations(const Tensor& age, const Tensor& immune, NoiseStream& noise);

// One step of the severity random walk: infected agents past incubation
// gain theta_age * ds / immune, ds ~ N(mu_t, sigma_t).
Tensor severity_step(const Tensor& severity, const Tensor& infected, const Tensor& elapsed, const Tensor& t_inc,
                     const Tensor& mu_t, const Tensor& sigma_t, const Tensor& theta_age, const Tensor& immune,
                     NoiseStream& noise, double xi);

struct Recovery {
  Tensor early;     // second consecutive day below remission
  Tensor elapsed;   // course of the illness completed
  Tensor recovery;  // early + elapsed
  Tensor per;
};

Recovery recovery_step(const Tensor& severity, const Tensor& per_prev, const Tensor& infected, const Tensor& elapsed_days,
                       const Tensor& t_inc, const Tensor& t_sym, double xi);

// Moves mass between classes; each agent's masses still sum to one.
HealthClasses health_update(const HealthClasses& h, const Tensor& infect, const Recovery& recovery,
                            const Tensor& severity, double xi);

struct Mutation {
  Tensor mutate;  // scalar
  Tensor immune;
  Tensor mu_t, sigma_t;
};

// immune floor is 1.
Mutation mutation_step(const Tensor& immune, const Tensor& mu_t, const Tensor& sigma_t, const Tensor& gamma,
                       const Tensor& p, double temperature, NoiseStream& noise);

}  // namespace depiabs

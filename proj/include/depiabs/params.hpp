#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "depiabs/diffcore/tensor.hpp"

namespace depiabs {

// Learnable model parameters, in the order they are stored and reported.
enum class Param : std::size_t {
  c,
  sup_mu,
  sup_sigma,
  sav_mu,
  sav_sigma,
  bill_mu,
  bill_sigma,
  eta_mu,
  eta_sigma,
  prob,
  dprob,
  ddprob,
  prob_sigma,
  sal_mu,
  sal_sigma,
  m,
  beta,
  theta,
  age_mu,
  age_sigma,
  gamma,
  p,
  sigma,
  mu,
  tau,
  dtau,
  zeta,
  dzeta,
  delta,
  ddelta,
  j_sigma,
  count_
};

inline constexpr std::size_t kLearnableCount = static_cast<std::size_t>(Param::count_);

// Support of a parameter; calibration works in the matching unconstrained space.
enum class Domain { positive, unit, real };

struct ParamInfo {
  Param id;
  std::string_view name;
  Domain domain;
  double default_value;
  std::string_view meaning;
};

const std::array<ParamInfo, kLearnableCount>& learnable_params();
const ParamInfo& param_info(Param p);
std::optional<Param> find_param(std::string_view name);

double to_unconstrained(Domain domain, double value);
double from_unconstrained(Domain domain, double raw);
Tensor from_unconstrained(Domain domain, const Tensor& raw);

enum class AgeMode { uniform, normal };

struct ModelParams {
  // Fixed (non-learnable) configuration.
  std::size_t population = 500;
  std::size_t s0 = 495;
  std::size_t a0 = 5;
  std::size_t i0 = 0;
  std::size_t d0 = 0;
  std::size_t horizon = 100;
  std::size_t clusters = 5;
  double k = 10.0;

  // Per-mechanism logistic steepness; 0 inherits k.
  double k_epidemic = 0.0;
  double k_health = 0.0;
  double k_supply = 0.0;
  double k_finance = 0.0;

  double xi = 1e-6;
  double temperature = 0.5;
  // Largest number of quotas bought in one shopping trip.
  double supply_cap = std::numeric_limits<double>::infinity();
  AgeMode age_mode = AgeMode::uniform;
  // Gamma-distributed infection tolerance with mean immune; false compares
  // expected exposures with immune directly.
  bool random_tolerance = true;

  std::array<double, kLearnableCount> values = defaults();

  static std::array<double, kLearnableCount> defaults();

  double& operator[](Param p) { return values[static_cast<std::size_t>(p)]; }
  double operator[](Param p) const { return values[static_cast<std::size_t>(p)]; }

  double steepness_epidemic() const { return k_epidemic > 0 ? k_epidemic : k; }
  double steepness_health() const { return k_health > 0 ? k_health : k; }
  double steepness_supply() const { return k_supply > 0 ? k_supply : k; }
  double steepness_finance() const { return k_finance > 0 ? k_finance : k; }

  // Throws ConfigError on inconsistent counts or out-of-domain values.
  void validate() const;

  // Assigns any learnable or fixed field by its config name.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  // Every settable key, in a stable order.
  static std::vector<std::string> keys();
};

}  // namespace depiabs

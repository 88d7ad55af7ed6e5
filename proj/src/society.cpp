#include "depiabs/society.hpp"

#include <algorithm>
#include <limits>

#include "depiabs/diffcore/relax.hpp"
#include "depiabs/errors.hpp"

namespace depiabs {

double weekend_indicator(long t, double xi) {
  return periodic_indicator_value(t, 6, 7, xi) + periodic_indicator_value(t, 0, 7, xi);
}

double month_end_indicator(long t, double xi) { return periodic_indicator_value(t, 0, 30, xi); }

Calendar Calendar::build(std::size_t horizon, double xi) {
  Calendar cal;
  cal.horizon = horizon;
  cal.weekend.resize(horizon + 1);
  cal.month_end.resize(horizon + 1);
  for (std::size_t t = 0; t <= horizon; ++t) {
    cal.weekend[t] = weekend_indicator(static_cast<long>(t), xi);
    cal.month_end[t] = month_end_indicator(static_cast<long>(t), xi);
  }
  return cal;
}

FacilityMap::FacilityMap(std::size_t clusters, double price) : clusters_(clusters), price_(price) {
  if (clusters < 1) throw ConfigError("facility map needs at least one cluster");
}

std::size_t FacilityMap::facility(std::size_t cluster, FacilityType type) const {
  if (cluster >= clusters_) throw UsageError("cluster index out of range");
  return cluster * kFacilityTypes + static_cast<std::size_t>(type);
}

Tensor draw_purchase(const Tensor& sup_mu, const Tensor& sup_sigma, double cap, NoiseStream& noise, std::size_t n) {
  const Tensor lo = minimum(sup_mu, sup_sigma);
  const Tensor hi = maximum(sup_mu, sup_sigma);
  Tensor quotas = sample_uniform_reparam(lo, hi, noise, n);
  if (cap < std::numeric_limits<double>::infinity()) quotas = minimum(quotas, cap);
  return quotas;
}

EconomyState update_supplies(const EconomyState& state, const Tensor& shop, const Tensor& purchase,
                             const Tensor& alive) {
  EconomyState next = state;
  next.supplies = state.supplies + shop * purchase - alive;
  return next;
}

EconomyState update_finances(const EconomyState& state, const Tensor& shop, const Tensor& work,
                             const Tensor& purchase, const Tensor& price, const Household& household,
                             const Tensor& alive, long t, double xi) {
  const double weekday = 1.0 - weekend_indicator(t, xi);
  const double month_end = month_end_indicator(t, xi);

  EconomyState next = state;
  const Tensor absent_today = state.absent + weekday * ((1.0 - work) * alive);
  Tensor savings = state.savings - shop * purchase * price;
  if (month_end > 0.0) {
    // Salary is judged on the month's absence before the reset.
    const Tensor cut = relax_precise(absent_today, household.absence_limit, Tensor::scalar(1.0), xi);
    const Tensor pay = household.salary * (household.salary_kept * cut + (1.0 - cut));
    savings = savings + month_end * ((pay - household.bill) * alive);
  }
  next.savings = savings;
  next.absent = absent_today * (1.0 - month_end);
  return next;
}

}  // namespace depiabs

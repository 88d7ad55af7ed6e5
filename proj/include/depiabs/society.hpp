#pragma once

#include <cstddef>
#include <vector>

#include "depiabs/diffcore/noise.hpp"
#include "depiabs/diffcore/tensor.hpp"

namespace depiabs {

// Relaxed calendar predicates; days are integer steps, months are 30 days.
double weekend_indicator(long t, double xi);    // rho(t;6,7) + rho(t;0,7)
double month_end_indicator(long t, double xi);  // rho(t;0,30)

// Exact versions, used by the discrete model.
inline bool is_weekend(long t) { return t % 7 == 6 || t % 7 == 0; }
inline bool is_month_end(long t) { return t % 30 == 0; }

struct Calendar {
  std::size_t horizon = 0;
  std::vector<double> weekend;    // indexed by day 0..horizon
  std::vector<double> month_end;

  static Calendar build(std::size_t horizon, double xi);
};

enum class FacilityType : std::size_t { office = 0, market = 1, hospital = 2 };
inline constexpr std::size_t kFacilityTypes = 3;

// Clusters of facilities, one office, market and hospital each. Facility ids
// are cluster * 3 + type.
class FacilityMap {
 public:
  explicit FacilityMap(std::size_t clusters, double price = 1.0);

  std::size_t clusters() const { return clusters_; }
  std::size_t size() const { return clusters_ * kFacilityTypes; }
  double price() const { return price_; }
  std::size_t facility(std::size_t cluster, FacilityType type) const;

 private:
  std::size_t clusters_;
  double price_;
};

struct EconomyState {
  Tensor supplies;  // daily quotas
  Tensor savings;
  Tensor absent;    // absence days in the current month
};

// Per-agent monthly cash flows.
struct Household {
  Tensor salary;
  Tensor salary_kept;  // fraction of salary paid after a cut
  Tensor bill;
  Tensor absence_limit;  // eta
};

// Quotas bought if the agent shops today: U(min(a, b), max(a, b)) with
// a = sup_mu, b = sup_sigma, capped at `cap`.
Tensor draw_purchase(const Tensor& sup_mu, const Tensor& sup_sigma, double cap, NoiseStream& noise, std::size_t n);

// sup += shop * purchase - alive.
EconomyState update_supplies(const EconomyState& state, const Tensor& shop, const Tensor& purchase,
                             const Tensor& alive);

// Purchases are paid at `price` per quota. On weekdays absence grows by the
// mass not at work. At month end the salary (cut to salary_kept when absence
// exceeds the limit) is credited, the bill debited, and absence reset.
EconomyState update_finances(const EconomyState& state, const Tensor& shop, const Tensor& work,
                             const Tensor& purchase, const Tensor& price, const Household& household,
                             const Tensor& alive, long t, double xi);

}  // namespace depiabs

#include "depiabs/behaviour.hpp"

#include <algorithm>

#include "depiabs/errors.hpp"

namespace depiabs {

namespace {

// Epidemic-severity totals, indexed (tau-1)*9 + (zeta-1)*3 + (delta-1).
constexpr std::array<int, 27> kSeverityTable = [] {
  std::array<int, 27> t{};
  constexpr int level1[9][3] = {{1, 1, 1}, {1, 1, 2}, {1, 2, 1}, {2, 1, 1}, {1, 2, 2},
                                {2, 1, 2}, {2, 2, 1}, {1, 1, 3}, {1, 3, 1}};
  constexpr int level2[9][3] = {{3, 1, 1}, {1, 2, 3}, {1, 3, 2}, {2, 1, 3}, {2, 2, 2},
                                {2, 3, 1}, {3, 1, 2}, {3, 2, 1}, {1, 3, 3}};
  constexpr int level3[9][3] = {{2, 2, 3}, {2, 3, 2}, {3, 1, 3}, {3, 2, 2}, {3, 3, 1},
                                {2, 3, 3}, {3, 2, 3}, {3, 3, 2}, {3, 3, 3}};
  for (const auto& c : level1) t[(c[0] - 1) * 9 + (c[1] - 1) * 3 + (c[2] - 1)] = 1;
  for (const auto& c : level2) t[(c[0] - 1) * 9 + (c[1] - 1) * 3 + (c[2] - 1)] = 2;
  for (const auto& c : level3) t[(c[0] - 1) * 9 + (c[1] - 1) * 3 + (c[2] - 1)] = 3;
  return t;
}();

constexpr std::array<double, kDecisions> kRankBase = {0.0, 0.5, 0.3, 0.2};
constexpr std::array<double, kDecisions> kRankSlope = {1.0, -0.5, -0.3, -0.2};

// All 81 drive combinations with their emergency level and, per decision,
// the plausibility rank it receives.
struct Combo {
  std::array<int, kDecisions> level;
  int emergency;
  std::array<int, kDecisions> rank_of;
};

const std::array<Combo, 81>& combos() {
  static const std::array<Combo, 81> table = [] {
    std::array<Combo, 81> out{};
    std::size_t n = 0;
    for (int a = 1; a <= 3; ++a)
      for (int b = 1; b <= 3; ++b)
        for (int c = 1; c <= 3; ++c)
          for (int d = 1; d <= 3; ++d) {
            Combo& combo = out[n++];
            combo.level = {a, b, c, d};
            const Plausibility pl = emergency_and_plausibility({a, b, c, d});
            combo.emergency = pl.emergency;
            for (std::size_t r = 0; r < kDecisions; ++r) combo.rank_of[static_cast<std::size_t>(pl.ranking[r])] = static_cast<int>(r);
          }
    return out;
  }();
  return table;
}

void check_membership(const Tensor& m, std::size_t rows, const char* what) {
  if (m.rank() != 2 || m.dim(0) != rows || m.dim(1) != 3)
    throw UsageError(std::string("membership '") + what + "' must be P x 3");
}

Tensor three_levels(const Tensor& at_least_2, const Tensor& at_least_3) {
  // Keeps rows on the simplex even if thresholds are out of order.
  const Tensor u3 = minimum(at_least_2, at_least_3);
  return stack_columns({1.0 - at_least_2, at_least_2 - u3, u3});
}

}  // namespace

Observation observe(double cumulative_infections, double cumulative_deaths, double asymptomatic, double symptomatic,
                    std::size_t population) {
  if (population == 0) throw UsageError("observe: empty population");
  Observation o;
  o.infected_proportion = cumulative_infections / static_cast<double>(population);
  o.death_rate = cumulative_deaths / std::max(cumulative_infections, 1.0);
  o.asymptomatic_proportion = asymptomatic / std::max(asymptomatic + symptomatic, 1.0);
  return o;
}

ObservationTensor observe(const Tensor& cumulative_infections, const Tensor& cumulative_deaths,
                          const Tensor& asymptomatic, const Tensor& symptomatic, std::size_t population) {
  if (population == 0) throw UsageError("observe: empty population");
  ObservationTensor o;
  o.infected_proportion = cumulative_infections / static_cast<double>(population);
  o.death_rate = cumulative_deaths / maximum(cumulative_infections, 1.0);
  o.asymptomatic_proportion = asymptomatic / maximum(asymptomatic + symptomatic, 1.0);
  return o;
}

int perspective_level(double value, double lower, double upper) {
  if (value < lower) return 1;
  if (value < upper) return 2;
  return 3;
}

int supply_level(double supplies, double lower, double upper) {
  if (supplies >= upper) return 1;
  if (supplies >= lower) return 2;
  return 3;
}

int finance_level(bool weekend, bool bill_breached, bool absence_breached) {
  if (weekend) return 1;
  if (bill_breached && absence_breached) return 3;
  if (bill_breached || absence_breached) return 2;
  return 1;
}

int epidemic_severity_drive(int tau, int zeta, int delta) {
  for (int v : {tau, zeta, delta})
    if (v < 1 || v > 3) throw UsageError("epidemic_severity_drive: levels must be in {1,2,3}");
  return kSeverityTable[(tau - 1) * 9 + (zeta - 1) * 3 + (delta - 1)];
}

DecisionDrives decision_drives(int epidemic, int finance, int supply, int health) {
  DecisionDrives d{};
  d[static_cast<std::size_t>(Decision::home)] = std::min(3, epidemic + std::min(1, health));
  d[static_cast<std::size_t>(Decision::work)] = finance;
  d[static_cast<std::size_t>(Decision::shop)] = supply;
  d[static_cast<std::size_t>(Decision::hospital)] = health;
  return d;
}

Plausibility emergency_and_plausibility(const DecisionDrives& drives) {
  Plausibility out;
  out.ranking = kTiePriority;
  std::stable_sort(out.ranking.begin(), out.ranking.end(), [&](Decision a, Decision b) {
    return drives[static_cast<std::size_t>(a)] > drives[static_cast<std::size_t>(b)];
  });
  out.emergency = drives[static_cast<std::size_t>(out.ranking[0])];
  return out;
}

std::array<double, kDecisions> rank_masses(double top) {
  std::array<double, kDecisions> row{};
  for (std::size_t r = 0; r < kDecisions; ++r) row[r] = kRankBase[r] + kRankSlope[r] * top;
  return row;
}

std::array<double, 3> top_masses(double prob, double dprob, double ddprob) {
  return {prob * dprob * ddprob, prob * dprob, prob};
}

std::array<double, kDecisions> decision_distribution(const Plausibility& plaus, const std::array<double, 3>& tops) {
  if (plaus.emergency < 1 || plaus.emergency > 3) throw UsageError("emergency level must be in {1,2,3}");
  const auto row = rank_masses(tops[static_cast<std::size_t>(plaus.emergency - 1)]);
  std::array<double, kDecisions> out{};
  for (std::size_t r = 0; r < kDecisions; ++r) out[static_cast<std::size_t>(plaus.ranking[r])] = row[r];
  return out;
}

Tensor level_membership(const Tensor& value, const Tensor& lower, const Tensor& upper, double k) {
  return three_levels(sigmoid(k * (value - lower)), sigmoid(k * (value - upper)));
}

Tensor supply_membership(const Tensor& supplies, const Tensor& lower, const Tensor& upper, double k) {
  return three_levels(sigmoid(k * (upper - supplies)), sigmoid(k * (lower - supplies)));
}

Tensor finance_membership(double weekend, const Tensor& savings, const Tensor& bill, const Tensor& absent,
                          const Tensor& absence_threshold, double k) {
  const double weekday = 1.0 - weekend;
  const Tensor ub = sigmoid(k * (bill - savings));
  const Tensor ue = sigmoid(k * (absent - absence_threshold));
  const Tensor both = ub * ue;
  const Tensor m3 = weekday * both;
  const Tensor m2 = weekday * (ub + ue - 2.0 * both);
  return stack_columns({1.0 - m2 - m3, m2, m3});
}

Tensor epidemic_membership(const Tensor& tau, const Tensor& zeta, const Tensor& delta) {
  const std::size_t P = tau.dim(0);
  check_membership(tau, P, "tau");
  check_membership(zeta, P, "zeta");
  check_membership(delta, P, "delta");
  const auto t = tau.values(), z = zeta.values(), d = delta.values();
  std::vector<double> out(P * 3, 0.0);
  for (std::size_t i = 0; i < P; ++i)
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = 0; b < 3; ++b) {
        const double wab = t[i * 3 + a] * z[i * 3 + b];
        for (std::size_t c = 0; c < 3; ++c)
          out[i * 3 + kSeverityTable[a * 9 + b * 3 + c] - 1] += wab * d[i * 3 + c];
      }
  if (!detail::any_requires_grad({&tau, &zeta, &delta})) return detail::make_result({P, 3}, std::move(out), {}, {});
  return detail::make_result({P, 3}, std::move(out), {tau, zeta, delta}, [P](detail::Node& self) {
    auto& pt = *self.parents[0];
    auto& pz = *self.parents[1];
    auto& pd = *self.parents[2];
    const auto &t = pt.value, &z = pz.value, &d = pd.value;
    double* gt = pt.requires_grad ? pt.grad_buffer().data() : nullptr;
    double* gz = pz.requires_grad ? pz.grad_buffer().data() : nullptr;
    double* gd = pd.requires_grad ? pd.grad_buffer().data() : nullptr;
    for (std::size_t i = 0; i < P; ++i)
      for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b)
          for (std::size_t c = 0; c < 3; ++c) {
            const double g = self.grad[i * 3 + kSeverityTable[a * 9 + b * 3 + c] - 1];
            if (g == 0.0) continue;
            const double ta = t[i * 3 + a], zb = z[i * 3 + b], dc = d[i * 3 + c];
            if (gt) gt[i * 3 + a] += g * zb * dc;
            if (gz) gz[i * 3 + b] += g * ta * dc;
            if (gd) gd[i * 3 + c] += g * ta * zb;
          }
  });
}

Tensor home_membership(const Tensor& epidemic) {
  const Tensor e2 = column(epidemic, 1), e3 = column(epidemic, 2);
  return stack_columns({0.0 * e2, column(epidemic, 0), e2 + e3});
}

Tensor decision_probabilities(const Tensor& home, const Tensor& work, const Tensor& shop, const Tensor& hospital,
                              const Tensor& tops) {
  const std::size_t P = home.dim(0);
  check_membership(home, P, "home");
  check_membership(work, P, "work");
  check_membership(shop, P, "shop");
  check_membership(hospital, P, "hospital");
  check_membership(tops, P, "tops");
  const auto& table = combos();
  const std::array<std::span<const double>, 4> mv = {home.values(), work.values(), shop.values(), hospital.values()};
  const auto tv = tops.values();
  std::vector<double> out(P * kDecisions, 0.0);
  for (std::size_t i = 0; i < P; ++i) {
    for (const Combo& c : table) {
      double w = 1.0;
      for (std::size_t k = 0; k < kDecisions; ++k) w *= mv[k][i * 3 + c.level[k] - 1];
      if (w == 0.0) continue;
      const double top = tv[i * 3 + c.emergency - 1];
      for (std::size_t k = 0; k < kDecisions; ++k) {
        const int r = c.rank_of[k];
        out[i * kDecisions + k] += w * (kRankBase[r] + kRankSlope[r] * top);
      }
    }
  }
  if (!detail::any_requires_grad({&home, &work, &shop, &hospital, &tops}))
    return detail::make_result({P, kDecisions}, std::move(out), {}, {});
  return detail::make_result({P, kDecisions}, std::move(out), {home, work, shop, hospital, tops}, [P](detail::Node& self) {
    const auto& table = combos();
    std::array<detail::Node*, 4> pm{};
    for (std::size_t k = 0; k < 4; ++k) pm[k] = self.parents[k].get();
    detail::Node& pt = *self.parents[4];
    std::array<double*, 4> gm{};
    for (std::size_t k = 0; k < 4; ++k) gm[k] = pm[k]->requires_grad ? pm[k]->grad_buffer().data() : nullptr;
    double* gt = pt.requires_grad ? pt.grad_buffer().data() : nullptr;
    for (std::size_t i = 0; i < P; ++i) {
      const double* g = &self.grad[i * kDecisions];
      for (const Combo& c : table) {
        std::array<double, 4> m{};
        for (std::size_t k = 0; k < 4; ++k) m[k] = pm[k]->value[i * 3 + c.level[k] - 1];
        const double top = pt.value[i * 3 + c.emergency - 1];
        double val = 0.0, slope = 0.0;
        for (std::size_t k = 0; k < kDecisions; ++k) {
          const int r = c.rank_of[k];
          val += g[k] * (kRankBase[r] + kRankSlope[r] * top);
          slope += g[k] * kRankSlope[r];
        }
        for (std::size_t k = 0; k < 4; ++k) {
          if (!gm[k]) continue;
          double rest = val;
          for (std::size_t o = 0; o < 4; ++o)
            if (o != k) rest *= m[o];
          gm[k][i * 3 + c.level[k] - 1] += rest;
        }
        if (gt) gt[i * 3 + c.emergency - 1] += m[0] * m[1] * m[2] * m[3] * slope;
      }
    }
  });
}

Tensor select_location(const Tensor& decisions, const std::array<std::vector<std::size_t>, 3>& preferred,
                       std::size_t facility_count) {
  if (decisions.rank() != 2 || decisions.dim(1) != kDecisions) throw UsageError("select_location: decisions must be P x 4");
  const std::size_t P = decisions.dim(0);
  Tensor out;
  for (std::size_t k = 0; k < 3; ++k) {
    if (preferred[k].size() != P) throw UsageError("select_location: preference size mismatch");
    std::vector<std::size_t> flat(P);
    for (std::size_t i = 0; i < P; ++i) {
      if (preferred[k][i] >= facility_count) throw UsageError("select_location: facility out of range");
      flat[i] = i * facility_count + preferred[k][i];
    }
    const Tensor part = index_add(column(decisions, k + 1), flat, P * facility_count);
    out = out.defined() ? out + part : part;
  }
  return reshape(out, {P, facility_count});
}

}  // namespace depiabs

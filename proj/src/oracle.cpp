#include "depiabs/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <random>

#include "depiabs/errors.hpp"
#include "depiabs/parallel.hpp"

namespace depiabs {

namespace {

class Model;

class Agent {
 public:
  Agent(std::size_t id, Model& model) : id(id), model(model) {}

  void decide();
  void interact();
  void progress();
  void settle();

  std::size_t id;
  Model& model;

  // configuration
  double salary = 0, salary_kept = 0, age = 0, theta_age = 0, bill = 0, absence_limit = 0, absence_threshold = 0;
  double tau1 = 0, tau2 = 0, zeta1 = 0, zeta2 = 0, delta1 = 0, delta2 = 0;
  std::array<double, 3> tops{};
  std::array<std::size_t, 3> facility{};

  // state
  HealthClass health = HealthClass::susceptible;
  bool was_infected = false;  // infected at the start of the step
  double severity = 0, immune = 1, t0 = 0, t_inc = 0, t_sym = 0;
  bool per = false;
  int initiations = 0;
  double supplies = 0, savings = 0, absent = 0;
  Decision decision = Decision::home;
  bool decided = false;  // alive when today's decisions were taken
  bool newly_infected = false;

  bool alive() const { return health != HealthClass::deceased; }
  bool infectious() const { return health == HealthClass::asymptomatic || health == HealthClass::symptomatic; }
  // Facility visited today, or none when at home.
  std::optional<std::size_t> location() const {
    if (!alive() || decision == Decision::home) return std::nullopt;
    return facility[static_cast<std::size_t>(decision) - 1];
  }
};

class Model {
 public:
  Model(const ModelParams& params, std::uint64_t seed);

  void step();
  const SimulationOutput& output() const { return out_; }

  const ModelParams& p;
  std::mt19937_64 rng;
  std::vector<std::unique_ptr<Agent>> agents;
  long t = 0;
  double mu_t, sigma_t;
  double cumulative_infections = 0;
  Observation obs;

  double normal(double mu, double sigma) { return std::normal_distribution<double>(mu, sigma)(rng); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  bool bernoulli(double prob) { return std::bernoulli_distribution(std::clamp(prob, 0.0, 1.0))(rng); }

  void fresh_durations(Agent& a) {
    a.t_inc = std::exp(normal(kIncubationLogMean, kIncubationLogSd));
    a.t_sym = std::max(0.0, a.age / (kReferenceAge * a.immune) * normal(kSymptomaticMean, kSymptomaticSd));
  }

 private:
  SimulationOutput out_;
  double prev_deaths_ = 0;
};

Model::Model(const ModelParams& params, std::uint64_t seed)
    : p(params), rng(seed), mu_t(params[Param::mu]), sigma_t(params[Param::sigma]) {
  p.validate();
  const std::size_t P = p.population;
  std::vector<std::size_t> order(P);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  for (std::size_t j = 0; j < P; ++j) agents.push_back(std::make_unique<Agent>(j, *this));
  for (std::size_t r = 0; r < P; ++r) {
    Agent& a = *agents[order[r]];
    if (r < p.s0) a.health = HealthClass::susceptible;
    else if (r < p.s0 + p.a0) a.health = HealthClass::asymptomatic;
    else if (r < p.s0 + p.a0 + p.i0) a.health = HealthClass::symptomatic;
    else a.health = HealthClass::deceased;
  }

  const std::size_t n = p.clusters;
  for (auto& ap : agents) {
    Agent& a = *ap;
    a.salary = normal(p[Param::sal_mu], p[Param::sal_sigma]);
    a.salary_kept = uniform(0.0, 1.0);
    a.age = p.age_mode == AgeMode::uniform ? uniform(18.0, 65.0)
                                           : std::max(1.0, normal(p[Param::age_mu], p[Param::age_sigma]));
    a.theta_age = p[Param::theta] * a.age;
    a.bill = normal(p[Param::bill_mu], p[Param::bill_sigma]);
    a.absence_limit = normal(p[Param::eta_mu], p[Param::eta_sigma]);
    a.absence_threshold = uniform(0.0, 1.0) * a.absence_limit;
    a.tau2 = normal(p[Param::tau], p[Param::j_sigma]);
    a.tau1 = a.tau2 * p[Param::dtau];
    a.zeta2 = normal(p[Param::zeta], p[Param::j_sigma]);
    a.zeta1 = a.zeta2 * p[Param::dzeta];
    a.delta2 = normal(p[Param::delta], p[Param::j_sigma]);
    a.delta1 = a.delta2 * p[Param::ddelta];
    a.tops = top_masses(std::clamp(normal(p[Param::prob], p[Param::prob_sigma]), 0.0, 1.0), p[Param::dprob],
                        p[Param::ddprob]);
    for (std::size_t k = 0; k < 3; ++k)
      a.facility[k] = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng) * kFacilityTypes + k;
    a.supplies = normal(p[Param::sup_mu], p[Param::sup_sigma]);
    a.savings = normal(p[Param::sav_mu], p[Param::sav_sigma]);
    fresh_durations(a);
    if (a.health == HealthClass::symptomatic) {
      a.severity = 2.5;
      a.t0 = -(a.t_inc + 1.0);
    } else if (a.health == HealthClass::deceased) {
      a.severity = kLethalSeverity + 1.0;
    }
  }
  cumulative_infections = static_cast<double>(p.a0 + p.i0);
  prev_deaths_ = static_cast<double>(p.d0);
  out_.days = 0;
}

void Agent::decide() {
  decided = alive();
  if (!decided) return;
  const Observation& o = model.obs;
  const int epidemic = epidemic_severity_drive(perspective_level(o.infected_proportion, tau1, tau2),
                                               perspective_level(o.death_rate, zeta1, zeta2),
                                               perspective_level(o.asymptomatic_proportion, delta1, delta2));
  const int health_drive = perspective_level(severity, kSeverityLower, kSeverityUpper);
  const int supply = supply_level(supplies, 0.0, model.p[Param::sup_mu]);
  const int finance = finance_level(is_weekend(model.t), savings <= bill, absent >= absence_threshold);
  const auto plaus = emergency_and_plausibility(decision_drives(epidemic, finance, supply, health_drive));
  const auto probs = decision_distribution(plaus, tops);
  std::discrete_distribution<int> pick(probs.begin(), probs.end());
  decision = static_cast<Decision>(pick(model.rng));
}

void Agent::interact() {
  newly_infected = false;
  if (health != HealthClass::susceptible) return;
  const auto here = location();
  if (!here) return;
  const double m = model.p[Param::m], beta = model.p[Param::beta];
  for (const auto& other : model.agents) {
    if (other.get() == this || !other->was_infected) continue;
    if (other->location() != here) continue;
    if (model.bernoulli(m) && model.bernoulli(beta)) ++initiations;
  }
  if (initiations >= static_cast<int>(std::lround(immune))) {
    newly_infected = true;
    initiations = 0;
  }
}

void Agent::progress() {
  if (!was_infected) return;
  const double elapsed = static_cast<double>(model.t) - t0;
  if (elapsed > t_inc) severity += theta_age * model.normal(model.mu_t, model.sigma_t) / immune;
  if (severity > kLethalSeverity) {
    health = HealthClass::deceased;
    return;
  }
  const bool below = severity < kRemissionSeverity;
  const bool done = elapsed > t_inc + t_sym;
  const bool recover = (below && per) || (done && !per);
  per = below && !per && !done;
  if (recover) {
    health = HealthClass::susceptible;
    severity = 0.0;
    immune += 1.0;
    per = false;
    return;
  }
  health = severity > kSymptomaticSeverity ? HealthClass::symptomatic : HealthClass::asymptomatic;
}

void Agent::settle() {
  const ModelParams& p = model.p;
  const double lo = std::min(p[Param::sup_mu], p[Param::sup_sigma]);
  const double hi = std::max(p[Param::sup_mu], p[Param::sup_sigma]);
  const double purchase = std::min(model.uniform(lo, hi), p.supply_cap);
  if (!alive()) return;
  if (decision == Decision::shop) {
    supplies += purchase;
    savings -= purchase * p[Param::c];
  }
  supplies -= 1.0;
  if (!is_weekend(model.t) && decision != Decision::work) absent += 1.0;
  if (is_month_end(model.t)) {
    savings += salary * (absent > absence_limit ? salary_kept : 1.0) - bill;
    absent = 0.0;
  }
}

void Model::step() {
  ++t;
  double deaths = 0, asym = 0, sym = 0;
  for (const auto& a : agents) {
    deaths += a->health == HealthClass::deceased;
    asym += a->health == HealthClass::asymptomatic;
    sym += a->health == HealthClass::symptomatic;
    a->was_infected = a->infectious();
  }
  obs = observe(cumulative_infections, deaths, asym, sym, p.population);

  // Staged activation keeps the update synchronous: every agent finishes a
  // stage before any agent starts the next.
  for (auto& a : agents) a->decide();
  for (auto& a : agents) a->interact();
  double new_infections = 0;
  for (auto& a : agents) {
    a->progress();
    if (a->newly_infected) {
      a->health = HealthClass::asymptomatic;
      a->t0 = static_cast<double>(t);
      fresh_durations(*a);
      new_infections += 1;
    }
  }
  if (bernoulli(p[Param::gamma])) {
    for (auto& a : agents)
      if (bernoulli(p[Param::p])) a->immune = std::max(1.0, a->immune - 1.0);
    mu_t *= uniform(0.5, 1.5);
    sigma_t *= uniform(0.5, 1.5);
  }
  for (auto& a : agents) a->settle();

  cumulative_infections += new_infections;
  std::array<double, kObservableCount> day{};
  auto at = [&](Observable o) -> double& { return day[static_cast<std::size_t>(o)]; };
  at(Observable::new_infections) = new_infections;
  at(Observable::cumulative_infections) = cumulative_infections;
  for (const auto& a : agents) {
    switch (a->health) {
      case HealthClass::susceptible: at(Observable::susceptible) += 1; break;
      case HealthClass::asymptomatic: at(Observable::asymptomatic) += 1; break;
      case HealthClass::symptomatic: at(Observable::symptomatic) += 1; break;
      case HealthClass::deceased: at(Observable::deceased) += 1; break;
    }
    if (a->infectious() && a->severity > kCriticalSeverity) at(Observable::critical) += 1;
    if (!a->decided) continue;
    switch (a->decision) {
      case Decision::home: at(Observable::home) += 1; break;
      case Decision::work: at(Observable::work) += 1; break;
      case Decision::shop: at(Observable::shop) += 1; break;
      case Decision::hospital: at(Observable::hospital) += 1; break;
    }
  }
  at(Observable::cumulative_deaths) = at(Observable::deceased);
  at(Observable::new_deaths) = at(Observable::deceased) - prev_deaths_;
  prev_deaths_ = at(Observable::deceased);
  for (std::size_t k = 0; k < kObservableCount; ++k) out_.columns[k].push_back(day[k]);
  ++out_.days;
}

struct Moments {
  double mean = 0, se = 0;
};

Moments moments(const std::vector<double>& x) {
  Moments m;
  const double n = static_cast<double>(x.size());
  m.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0;
  for (double v : x) ss += (v - m.mean) * (v - m.mean);
  m.se = x.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return m;
}

}  // namespace

SimulationOutput run_discrete(const ModelParams& params, std::uint64_t seed, std::size_t horizon) {
  const std::size_t T = horizon ? horizon : params.horizon;
  Model model(params, seed);
  for (std::size_t i = 0; i < T; ++i) model.step();
  return model.output();
}

bool EquivalenceReport::all_pass() const {
  return std::none_of(observables.begin(), observables.end(), [](const auto& o) { return o.flagged; });
}

EquivalenceReport equivalence_report(const ModelParams& discrete, const ModelParams& relaxed, std::size_t replicates,
                                     std::size_t horizon, std::uint64_t first_seed, double bands) {
  if (replicates < 30) throw UsageError("equivalence_report needs at least 30 replicates");
  if (horizon < 1) throw UsageError("equivalence_report needs a horizon of at least one day");
  const std::vector<Observable> tracked = {Observable::cumulative_infections, Observable::cumulative_deaths,
                                           Observable::critical, Observable::home, Observable::susceptible};
  std::vector<SimulationOutput> d(replicates), r(replicates);
  parallel_for(replicates, [&](std::size_t i) {
    d[i] = run_discrete(discrete, first_seed + i, horizon);
    r[i] = run(relaxed, first_seed + i, horizon);
  });

  EquivalenceReport report;
  report.replicates = replicates;
  report.horizon = horizon;
  for (Observable o : tracked) {
    std::vector<double> dv, rv;
    for (std::size_t i = 0; i < replicates; ++i) {
      dv.push_back(d[i].series(o).back());
      rv.push_back(r[i].series(o).back());
    }
    const Moments md = moments(dv), mr = moments(rv);
    ObservableComparison c;
    c.name = std::string(observable_name(o));
    c.discrete_mean = md.mean;
    c.discrete_se = md.se;
    c.relaxed_mean = mr.mean;
    c.relaxed_se = mr.se;
    const double se = std::hypot(md.se, mr.se);
    const double diff = mr.mean - md.mean;
    c.z = se > 0 ? diff / se : (diff == 0 ? 0.0 : std::copysign(INFINITY, diff));
    c.flagged = std::abs(c.z) > bands;
    report.observables.push_back(c);
  }
  return report;
}

EquivalenceReport equivalence_report(const ModelParams& params, std::size_t replicates, std::size_t horizon,
                                     std::uint64_t first_seed, double bands) {
  return equivalence_report(params, params, replicates, horizon, first_seed, bands);
}

}  // namespace depiabs

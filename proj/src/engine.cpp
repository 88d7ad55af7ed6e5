#include "depiabs/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "depiabs/diffcore/relax.hpp"
#include "depiabs/errors.hpp"

namespace depiabs {

namespace {

constexpr std::array<std::string_view, kObservableCount> kObservableNames = {
    "new_infections", "cumulative_infections", "cumulative_deaths", "new_deaths", "critical",
    "home",           "work",                  "shop",              "hospital",   "susceptible",
    "asymptomatic",   "symptomatic",           "deceased"};

// Severity given to agents that start symptomatic, mid-way through the band.
constexpr double kInitialSymptomaticSeverity = 2.5;

std::size_t idx(Observable o) { return static_cast<std::size_t>(o); }

}  // namespace

std::string_view observable_name(Observable o) { return kObservableNames.at(idx(o)); }

Observable parse_observable(std::string_view name) {
  for (std::size_t i = 0; i < kObservableCount; ++i)
    if (kObservableNames[i] == name) return static_cast<Observable>(i);
  throw ConfigError("unknown observable '" + std::string(name) + "'");
}

ParamTensors ParamTensors::constants(const ModelParams& params) {
  ParamTensors out;
  for (std::size_t i = 0; i < kLearnableCount; ++i) out.v[i] = Tensor::scalar(params.values[i]);
  return out;
}

Tensor SimTrace::series(Observable o) const {
  std::vector<Tensor> parts;
  parts.reserve(days.size());
  for (const auto& day : days) parts.push_back(day[idx(o)]);
  return concat(parts);
}

SimulationOutput SimTrace::output() const {
  SimulationOutput out;
  out.days = days.size();
  for (std::size_t k = 0; k < kObservableCount; ++k) {
    out.columns[k].reserve(days.size());
    for (const auto& day : days) out.columns[k].push_back(day[k].item());
  }
  return out;
}

Simulation::Simulation(const ModelParams& params, ParamTensors values, std::uint64_t seed)
    : params_(params), values_(std::move(values)), noise_(seed), map_(params.clusters, params[Param::c]) {
  params_.validate();
  const std::size_t P = params_.population;
  const auto& v = values_;
  NoiseStream& noise = noise_;

  // Class assignment over a random permutation of agents.
  const std::vector<double> keys = noise.uniform(P);
  std::vector<std::size_t> order(P);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  std::vector<double> hs(P, 0.0), ha(P, 0.0), hi(P, 0.0), hd(P, 0.0);
  for (std::size_t r = 0; r < P; ++r) {
    const std::size_t j = order[r];
    if (r < params_.s0) hs[j] = 1.0;
    else if (r < params_.s0 + params_.a0) ha[j] = 1.0;
    else if (r < params_.s0 + params_.a0 + params_.i0) hi[j] = 1.0;
    else hd[j] = 1.0;
  }

  AgentConfig& a = agents_;
  a.salary = sample_normal_reparam(v[Param::sal_mu], v[Param::sal_sigma], noise, P);
  a.salary_kept = Tensor::from(noise.uniform(P));
  if (params_.age_mode == AgeMode::uniform) {
    a.age = sample_uniform_reparam(Tensor::scalar(18.0), Tensor::scalar(65.0), noise, P);
  } else {
    a.age = maximum(sample_normal_reparam(v[Param::age_mu], v[Param::age_sigma], noise, P), 1.0);
  }
  a.theta_age = v[Param::theta] * a.age;
  a.bill = sample_normal_reparam(v[Param::bill_mu], v[Param::bill_sigma], noise, P);
  a.absence_limit = sample_normal_reparam(v[Param::eta_mu], v[Param::eta_sigma], noise, P);
  a.absence_threshold = Tensor::from(noise.uniform(P)) * a.absence_limit;
  a.tau2 = sample_normal_reparam(v[Param::tau], v[Param::j_sigma], noise, P);
  a.tau1 = a.tau2 * v[Param::dtau];
  a.zeta2 = sample_normal_reparam(v[Param::zeta], v[Param::j_sigma], noise, P);
  a.zeta1 = a.zeta2 * v[Param::dzeta];
  a.delta2 = sample_normal_reparam(v[Param::delta], v[Param::j_sigma], noise, P);
  a.delta1 = a.delta2 * v[Param::ddelta];
  a.supply_upper = v[Param::sup_mu];
  const Tensor top = clamp(sample_normal_reparam(v[Param::prob], v[Param::prob_sigma], noise, P), 0.0, 1.0);
  const Tensor top2 = top * v[Param::dprob];
  a.tops = stack_columns({top2 * v[Param::ddprob], top2, top});

  const FacilityType types[3] = {FacilityType::office, FacilityType::market, FacilityType::hospital};
  for (std::size_t k = 0; k < 3; ++k) {
    const std::vector<double> u = noise.uniform(P);
    a.facility[k].resize(P);
    for (std::size_t j = 0; j < P; ++j) {
      const auto cluster = std::min(static_cast<std::size_t>(u[j] * static_cast<double>(map_.clusters())),
                                    map_.clusters() - 1);
      a.facility[k][j] = map_.facility(cluster, types[k]);
    }
  }

  SimState& s = state_;
  s.economy.supplies = sample_normal_reparam(v[Param::sup_mu], v[Param::sup_sigma], noise, P);
  s.economy.savings = sample_normal_reparam(v[Param::sav_mu], v[Param::sav_sigma], noise, P);
  s.economy.absent = Tensor::zeros({P});

  HealthState& h = s.health;
  h.h.susceptible = Tensor::from(hs);
  h.h.asymptomatic = Tensor::from(ha);
  h.h.symptomatic = Tensor::from(hi);
  h.h.deceased = Tensor::from(hd);
  h.immune = Tensor::full({P}, 1.0);
  const Durations first = sample_durations(a.age, h.immune, noise);
  h.t_inc = first.incubation;
  h.t_sym = first.symptomatic;
  // Agents that start symptomatic are already past incubation.
  const Tensor start_sym = Tensor::from(hi);
  h.t0 = -(start_sym * (h.t_inc + 1.0));
  h.severity = start_sym * kInitialSymptomaticSeverity + Tensor::from(hd) * (kLethalSeverity + 1.0);
  h.per = Tensor::zeros({P});
  h.cumul = Tensor::zeros({P});
  h.tolerance_draw = noise.uniform(P);

  s.mu_t = v[Param::mu];
  s.sigma_t = v[Param::sigma];
  s.cumulative_infections = Tensor::scalar(static_cast<double>(params_.a0 + params_.i0));
  prev_deaths_ = sum(h.h.deceased);
}

std::array<Tensor, kObservableCount> Simulation::step() {
  const ModelParams& mp = params_;
  const auto& v = values_;
  const AgentConfig& a = agents_;
  SimState& s = state_;
  HealthState& hs = s.health;
  const HealthClasses& h = hs.h;
  const std::size_t P = mp.population;
  const double xi = mp.xi, temperature = mp.temperature;
  const long t = ++s.t;
  const double td = static_cast<double>(t);

  const Tensor alive = h.alive();
  const Tensor infected = h.infected();

  // Observe and decide.
  const ObservationTensor obs =
      observe(s.cumulative_infections, sum(h.deceased), sum(h.asymptomatic), sum(h.symptomatic), P);
  const double ke = mp.steepness_epidemic();
  const Tensor epidemic = epidemic_membership(level_membership(obs.infected_proportion, a.tau1, a.tau2, ke),
                                              level_membership(obs.death_rate, a.zeta1, a.zeta2, ke),
                                              level_membership(obs.asymptomatic_proportion, a.delta1, a.delta2, ke));
  const Tensor health = level_membership(hs.severity, Tensor::scalar(kSeverityLower), Tensor::scalar(kSeverityUpper),
                                         mp.steepness_health());
  const Tensor supply =
      supply_membership(s.economy.supplies, Tensor::scalar(0.0), a.supply_upper, mp.steepness_supply());
  const Tensor finance = finance_membership(weekend_indicator(t, xi), s.economy.savings, a.bill, s.economy.absent,
                                            a.absence_threshold, mp.steepness_finance());
  const Tensor probs = decision_probabilities(home_membership(epidemic), finance, supply, health, a.tops);
  const Tensor decision = sample_categorical_reparam(probs, temperature, noise_);
  std::array<Tensor, kDecisions> d;
  for (std::size_t k = 0; k < kDecisions; ++k) d[k] = column(decision, k) * alive;
  const Tensor& d_work = d[static_cast<std::size_t>(Decision::work)];
  const Tensor& d_shop = d[static_cast<std::size_t>(Decision::shop)];

  // Transmission.
  const Tensor exposures = colocated_exposures({d[1], d[2], d[3]}, a.facility, map_.size(), h, v[Param::m],
                                               v[Param::beta]);
  const Tensor tolerance = infection_tolerance(hs.immune, hs.tolerance_draw, mp.random_tolerance);
  const Infection inf = establish_infections(hs.cumul, exposures, tolerance, h.susceptible, xi);
  const std::vector<double> redraw = noise_.uniform(P);
  const Durations fresh = sample_durations(a.age, hs.immune, noise_);

  // Progression of the already infected.
  const Tensor elapsed = td - hs.t0;
  const Tensor severity = severity_step(hs.severity, infected, elapsed, hs.t_inc, s.mu_t, s.sigma_t, a.theta_age,
                                        hs.immune, noise_, xi);
  const Recovery rec = recovery_step(severity, hs.per, infected, elapsed, hs.t_inc, hs.t_sym, xi);
  HealthClasses next = health_update(h, inf.infect, rec, severity, xi);
  const Mutation mut = mutation_step(hs.immune + rec.recovery, s.mu_t, s.sigma_t, v[Param::gamma], v[Param::p],
                                     temperature, noise_);

  // Economy.
  const Tensor purchase = draw_purchase(v[Param::sup_mu], v[Param::sup_sigma], mp.supply_cap, noise_, P);
  EconomyState economy = update_supplies(s.economy, d_shop, purchase, alive);
  const Household household{a.salary, a.salary_kept, a.bill, a.absence_limit};
  economy = update_finances(economy, d_shop, d_work, purchase, v[Param::c], household, alive, t, xi);

  // Commit.
  HealthState nh;
  nh.h = next;
  nh.severity = severity * (1.0 - rec.recovery);
  nh.immune = mut.immune;
  nh.t0 = hs.t0 + inf.infect * (td - hs.t0);
  nh.t_inc = hs.t_inc + inf.infect * (fresh.incubation - hs.t_inc);
  nh.t_sym = hs.t_sym + inf.infect * (fresh.symptomatic - hs.t_sym);
  nh.per = rec.per;
  nh.cumul = inf.cumul;
  // A recovered agent's next episode gets a fresh tolerance.
  nh.tolerance_draw = hs.tolerance_draw;
  const auto recovered = rec.recovery.values();
  for (std::size_t j = 0; j < P; ++j)
    if (recovered[j] > 0.5) nh.tolerance_draw[j] = redraw[j];
  hs = nh;
  s.economy = economy;
  s.mu_t = mut.mu_t;
  s.sigma_t = mut.sigma_t;

  std::array<Tensor, kObservableCount> day;
  day[idx(Observable::new_infections)] = sum(inf.infect);
  s.cumulative_infections = s.cumulative_infections + day[idx(Observable::new_infections)];
  day[idx(Observable::cumulative_infections)] = s.cumulative_infections;
  const Tensor deaths = sum(next.deceased);
  day[idx(Observable::cumulative_deaths)] = deaths;
  day[idx(Observable::new_deaths)] = deaths - prev_deaths_;
  prev_deaths_ = deaths;
  day[idx(Observable::critical)] =
      sum(relax_precise(nh.severity, Tensor::scalar(kCriticalSeverity), next.infected(), xi));
  day[idx(Observable::home)] = sum(d[0]);
  day[idx(Observable::work)] = sum(d[1]);
  day[idx(Observable::shop)] = sum(d[2]);
  day[idx(Observable::hospital)] = sum(d[3]);
  day[idx(Observable::susceptible)] = sum(next.susceptible);
  day[idx(Observable::asymptomatic)] = sum(next.asymptomatic);
  day[idx(Observable::symptomatic)] = sum(next.symptomatic);
  day[idx(Observable::deceased)] = deaths;
  return day;
}

Simulation init_model(const ModelParams& params, std::uint64_t seed) {
  return Simulation(params, ParamTensors::constants(params), seed);
}

SimTrace simulate(const ModelParams& params, const ParamTensors& values, std::uint64_t seed, std::size_t horizon) {
  if (horizon < 1) throw ConfigError("horizon must be at least one day");
  Simulation sim(params, values, seed);
  SimTrace trace;
  trace.days.reserve(horizon);
  for (std::size_t t = 0; t < horizon; ++t) trace.days.push_back(sim.step());
  return trace;
}

SimulationOutput run(const ModelParams& params, std::uint64_t seed, std::size_t horizon) {
  NoGradGuard guard;
  return simulate(params, ParamTensors::constants(params), seed, horizon ? horizon : params.horizon).output();
}

}  // namespace depiabs

#include "depiabs/params.hpp"

#include <charconv>
#include <cmath>

#include "depiabs/errors.hpp"

namespace depiabs {

namespace {

constexpr std::array<ParamInfo, kLearnableCount> kParams{{
    {Param::c, "c", Domain::positive, 1.0, "price of one quota of supplies"},
    {Param::sup_mu, "sup_mu", Domain::positive, 7.0, "mean initial supplies (quotas)"},
    {Param::sup_sigma, "sup_sigma", Domain::positive, 2.0, "sd of initial supplies"},
    {Param::sav_mu, "sav_mu", Domain::positive, 300.0, "mean disposable cash and savings"},
    {Param::sav_sigma, "sav_sigma", Domain::positive, 100.0, "sd of savings"},
    {Param::bill_mu, "bill_mu", Domain::positive, 200.0, "mean monthly bill"},
    {Param::bill_sigma, "bill_sigma", Domain::positive, 40.0, "sd of monthly bill"},
    {Param::eta_mu, "eta_mu", Domain::positive, 5.0, "mean absence days triggering a salary cut"},
    {Param::eta_sigma, "eta_sigma", Domain::positive, 1.0, "sd of the absence threshold"},
    {Param::prob, "prob", Domain::unit, 0.7, "top-decision probability under the highest emergency"},
    {Param::dprob, "dprob", Domain::unit, 0.8, "ratio of the second-highest emergency's top probability"},
    {Param::ddprob, "ddprob", Domain::unit, 0.8, "ratio of the third-highest emergency's top probability"},
    {Param::prob_sigma, "prob_sigma", Domain::positive, 0.05, "sd of the per-agent top probability"},
    {Param::sal_mu, "sal_mu", Domain::positive, 300.0, "mean monthly salary"},
    {Param::sal_sigma, "sal_sigma", Domain::positive, 60.0, "sd of salary"},
    {Param::m, "m", Domain::unit, 0.3, "encounter probability of co-located agents"},
    {Param::beta, "beta", Domain::unit, 0.3, "transmission probability per encounter"},
    {Param::theta, "theta", Domain::positive, 0.025, "age impact on symptom progression"},
    {Param::age_mu, "age_mu", Domain::positive, 41.5, "mean age (normal age mode)"},
    {Param::age_sigma, "age_sigma", Domain::positive, 13.6, "sd of age (normal age mode)"},
    {Param::gamma, "gamma", Domain::unit, 0.01, "daily mutation probability"},
    {Param::p, "p", Domain::unit, 0.5, "immune-escape probability on mutation"},
    {Param::sigma, "sigma", Domain::positive, 1.0, "initial sd of daily severity change"},
    {Param::mu, "mu", Domain::real, 0.2, "initial mean of daily severity change"},
    {Param::tau, "tau", Domain::unit, 0.1, "upper judgement threshold on infected proportion"},
    {Param::dtau, "dtau", Domain::unit, 0.5, "lower / upper infected-proportion threshold ratio"},
    {Param::zeta, "zeta", Domain::unit, 0.05, "upper judgement threshold on death rate"},
    {Param::dzeta, "dzeta", Domain::unit, 0.5, "lower / upper death-rate threshold ratio"},
    {Param::delta, "delta", Domain::unit, 0.5, "upper judgement threshold on asymptomatic proportion"},
    {Param::ddelta, "ddelta", Domain::unit, 0.5, "lower / upper asymptomatic threshold ratio"},
    {Param::j_sigma, "j_sigma", Domain::positive, 0.01, "sd of judgement thresholds"},
}};

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T out{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("cannot parse value '" + std::string(text) + "' for " + std::string(key));
  return out;
}

double parse_real(std::string_view key, std::string_view text) {
  if (text == "inf" || text == "infinity") return std::numeric_limits<double>::infinity();
  return parse_number<double>(key, text);
}

std::string format_real(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

const std::array<ParamInfo, kLearnableCount>& learnable_params() { return kParams; }

const ParamInfo& param_info(Param p) { return kParams[static_cast<std::size_t>(p)]; }

std::optional<Param> find_param(std::string_view name) {
  for (const auto& info : kParams)
    if (info.name == name) return info.id;
  return std::nullopt;
}

double to_unconstrained(Domain domain, double value) {
  switch (domain) {
    case Domain::positive:
      return std::log(value);
    case Domain::unit:
      return std::log(value) - std::log1p(-value);
    case Domain::real:
      return value;
  }
  return value;
}

double from_unconstrained(Domain domain, double raw) {
  switch (domain) {
    case Domain::positive:
      return std::exp(raw);
    case Domain::unit:
      return 1.0 / (1.0 + std::exp(-raw));
    case Domain::real:
      return raw;
  }
  return raw;
}

Tensor from_unconstrained(Domain domain, const Tensor& raw) {
  switch (domain) {
    case Domain::positive:
      return exp(raw);
    case Domain::unit:
      return sigmoid(raw);
    case Domain::real:
      return raw;
  }
  return raw;
}

std::array<double, kLearnableCount> ModelParams::defaults() {
  std::array<double, kLearnableCount> out{};
  for (const auto& info : kParams) out[static_cast<std::size_t>(info.id)] = info.default_value;
  return out;
}

void ModelParams::validate() const {
  if (population < 1) throw ConfigError("population must be at least 1");
  if (s0 + a0 + i0 + d0 != population)
    throw ConfigError("initial class counts S0+A0+I0+D0 = " + std::to_string(s0 + a0 + i0 + d0) +
                      " do not sum to P = " + std::to_string(population));
  if (horizon < 1) throw ConfigError("horizon T must be at least 1");
  if (clusters < 1) throw ConfigError("cluster count n must be at least 1");
  if (!(k > 0.0)) throw ConfigError("steepness k must be positive");
  for (double kk : {k_epidemic, k_health, k_supply, k_finance})
    if (kk < 0.0) throw ConfigError("per-mechanism steepness must be positive (or 0 to inherit k)");
  if (!(xi > 0.0)) throw ConfigError("slack xi must be positive");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (!(supply_cap > 0.0)) throw ConfigError("supply_cap must be positive");
  for (const auto& info : kParams) {
    const double v = values[static_cast<std::size_t>(info.id)];
    if (!std::isfinite(v)) throw ConfigError(std::string(info.name) + " must be finite");
    if (info.domain == Domain::positive && !(v > 0.0))
      throw ConfigError(std::string(info.name) + " must be positive");
    if (info.domain == Domain::unit && !(v > 0.0 && v < 1.0)) {
      // Probabilities may sit on the boundary; ratios may not.
      const bool probability = info.id == Param::gamma || info.id == Param::p || info.id == Param::beta ||
                               info.id == Param::m || info.id == Param::prob;
      if (!(probability && v >= 0.0 && v <= 1.0))
        throw ConfigError(std::string(info.name) + " must lie in (0, 1)");
    }
  }
}

std::vector<std::string> ModelParams::keys() {
  std::vector<std::string> out{"P",         "S0",       "A0",       "I0",        "D0",
                               "T",         "n",        "k",        "k_epidemic", "k_health",
                               "k_supply",  "k_finance", "xi",      "temperature", "supply_cap",
                               "age_mode",  "tolerance"};
  for (const auto& info : kParams) out.emplace_back(info.name);
  return out;
}

void ModelParams::set(std::string_view key, std::string_view value) {
  if (auto p = find_param(key)) {
    (*this)[*p] = parse_real(key, value);
    return;
  }
  auto count = [&](std::size_t& field) { field = parse_number<std::size_t>(key, value); };
  if (key == "P") count(population);
  else if (key == "S0") count(s0);
  else if (key == "A0") count(a0);
  else if (key == "I0") count(i0);
  else if (key == "D0") count(d0);
  else if (key == "T") count(horizon);
  else if (key == "n") count(clusters);
  else if (key == "k") k = parse_real(key, value);
  else if (key == "k_epidemic") k_epidemic = parse_real(key, value);
  else if (key == "k_health") k_health = parse_real(key, value);
  else if (key == "k_supply") k_supply = parse_real(key, value);
  else if (key == "k_finance") k_finance = parse_real(key, value);
  else if (key == "xi") xi = parse_real(key, value);
  else if (key == "temperature") temperature = parse_real(key, value);
  else if (key == "supply_cap") supply_cap = parse_real(key, value);
  else if (key == "age_mode") {
    if (value == "uniform") age_mode = AgeMode::uniform;
    else if (value == "normal") age_mode = AgeMode::normal;
    else throw ConfigError("age_mode must be 'uniform' or 'normal'");
  } else if (key == "tolerance") {
    if (value == "random") random_tolerance = true;
    else if (value == "fixed") random_tolerance = false;
    else throw ConfigError("tolerance must be 'random' or 'fixed'");
  } else {
    throw ConfigError("unknown parameter '" + std::string(key) + "'");
  }
}

std::string ModelParams::get(std::string_view key) const {
  if (auto p = find_param(key)) return format_real((*this)[*p]);
  if (key == "P") return std::to_string(population);
  if (key == "S0") return std::to_string(s0);
  if (key == "A0") return std::to_string(a0);
  if (key == "I0") return std::to_string(i0);
  if (key == "D0") return std::to_string(d0);
  if (key == "T") return std::to_string(horizon);
  if (key == "n") return std::to_string(clusters);
  if (key == "k") return format_real(k);
  if (key == "k_epidemic") return format_real(k_epidemic);
  if (key == "k_health") return format_real(k_health);
  if (key == "k_supply") return format_real(k_supply);
  if (key == "k_finance") return format_real(k_finance);
  if (key == "xi") return format_real(xi);
  if (key == "temperature") return format_real(temperature);
  if (key == "supply_cap") return format_real(supply_cap);
  if (key == "age_mode") return age_mode == AgeMode::uniform ? "uniform" : "normal";
  if (key == "tolerance") return random_tolerance ? "random" : "fixed";
  throw ConfigError("unknown parameter '" + std::string(key) + "'");
}

}  // namespace depiabs

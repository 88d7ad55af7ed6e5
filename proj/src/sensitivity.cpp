#include "depiabs/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include <boost/random/sobol.hpp>

#include "depiabs/errors.hpp"
#include "depiabs/parallel.hpp"

namespace depiabs {

namespace {

struct Estimates {
  std::vector<double> total, first;
};

double variance(const std::vector<double>& y, const SaltelliDesign& d, const std::vector<std::size_t>& idx) {
  double s = 0, ss = 0;
  for (std::size_t j : idx) {
    s += y[d.a(j)] + y[d.b(j)];
    ss += y[d.a(j)] * y[d.a(j)] + y[d.b(j)] * y[d.b(j)];
  }
  const double n = 2.0 * static_cast<double>(idx.size());
  const double mu = s / n;
  return ss / n - mu * mu;
}

Estimates estimate(const std::vector<double>& y, const SaltelliDesign& d, const std::vector<std::size_t>& idx) {
  Estimates e;
  const double var = variance(y, d, idx);
  const double n = static_cast<double>(idx.size());
  for (std::size_t i = 0; i < d.d; ++i) {
    double st = 0, s1 = 0;
    for (std::size_t j : idx) {
      const double fa = y[d.a(j)], fb = y[d.b(j)], fab = y[d.ab(i, j)], fba = y[d.ba(i, j)];
      st += (fa - fab) * (fa - fab) + (fb - fba) * (fb - fba);
      s1 += fb * (fab - fa) + fa * (fba - fb);
    }
    e.total.push_back(st / (4.0 * n) / var);
    e.first.push_back(s1 / (2.0 * n) / var);
  }
  return e;
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

ModelParams with_row(const ModelParams& base, const ParamSpace& space, const std::vector<double>& row) {
  ModelParams p = base;
  for (std::size_t i = 0; i < space.d(); ++i) {
    std::ostringstream os;
    os.precision(17);
    os << row[i];
    p.set(space.dims[i].name, os.str());
  }
  return p;
}

}  // namespace

void ParamSpace::validate() const {
  if (dims.empty()) throw ConfigError("parameter space is empty");
  for (const auto& r : dims) {
    if (!std::isfinite(r.lower) || !std::isfinite(r.upper)) throw ConfigError("bounds of " + r.name + " must be finite");
    if (!(r.lower < r.upper)) throw ConfigError("lower bound of " + r.name + " must be below its upper bound");
  }
}

ParamSpace ParamSpace::parse(const std::string& text) {
  ParamSpace space;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream fields(line);
    ParamRange r;
    if (!(fields >> r.name >> r.lower >> r.upper)) throw ParseError("expected 'name lower upper [group]'", number);
    fields >> r.group;
    space.dims.push_back(r);
  }
  space.validate();
  return space;
}

SaltelliDesign saltelli_sample(const ParamSpace& space, std::size_t n) {
  space.validate();
  if (n == 0) throw ConfigError("Saltelli base sample size must be positive");
  if ((n & (n - 1)) != 0) std::cerr << "warning: Saltelli sample size " << n << " is not a power of two\n";
  const std::size_t d = space.d();
  SaltelliDesign design;
  design.n = n;
  design.d = d;
  design.rows.assign(n * (2 * d + 2), std::vector<double>(d));

  boost::random::sobol engine(2 * d);
  engine.discard(2 * d);  // skip the all-zero first point
  const double scale = std::ldexp(1.0, -64);
  auto rescale = [&](std::size_t i, double u) { return space.dims[i].lower + u * (space.dims[i].upper - space.dims[i].lower); };
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> u(2 * d);
    for (auto& x : u) x = static_cast<double>(engine()) * scale;
    for (std::size_t i = 0; i < d; ++i) {
      design.rows[design.a(j)][i] = rescale(i, u[i]);
      design.rows[design.b(j)][i] = rescale(i, u[d + i]);
    }
    for (std::size_t i = 0; i < d; ++i) {
      design.rows[design.ab(i, j)] = design.rows[design.a(j)];
      design.rows[design.ab(i, j)][i] = design.rows[design.b(j)][i];
      design.rows[design.ba(i, j)] = design.rows[design.b(j)];
      design.rows[design.ba(i, j)][i] = design.rows[design.a(j)][i];
    }
  }
  return design;
}

SobolResult sobol_indices(const SaltelliDesign& design, const std::vector<double>& y, std::size_t resamples,
                          double level, std::uint64_t seed) {
  if (y.size() != design.rows.size()) throw UsageError("sobol_indices: one output per design row required");
  SobolResult out;
  out.samples = design.n;
  std::vector<std::size_t> all(design.n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (!(variance(y, design, all) > 0.0)) {
    out.undefined = true;
    return out;
  }
  const Estimates point = estimate(y, design, all);
  out.total = point.total;
  out.first = point.first;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, design.n - 1);
  std::vector<std::vector<double>> boot_t(design.d), boot_f(design.d);
  std::vector<std::size_t> idx(design.n);
  for (std::size_t r = 0; r < resamples; ++r) {
    for (auto& j : idx) j = pick(rng);
    if (!(variance(y, design, idx) > 0.0)) continue;
    const Estimates e = estimate(y, design, idx);
    for (std::size_t i = 0; i < design.d; ++i) {
      boot_t[i].push_back(e.total[i]);
      boot_f[i].push_back(e.first[i]);
    }
  }
  const double tail = (1.0 - level) / 2.0;
  for (std::size_t i = 0; i < design.d; ++i) {
    if (boot_t[i].empty()) {
      out.total_lo.push_back(out.total[i]);
      out.total_hi.push_back(out.total[i]);
      out.first_lo.push_back(out.first[i]);
      out.first_hi.push_back(out.first[i]);
    } else {
      out.total_lo.push_back(percentile(boot_t[i], tail));
      out.total_hi.push_back(percentile(boot_t[i], 1.0 - tail));
      out.first_lo.push_back(percentile(boot_f[i], tail));
      out.first_hi.push_back(percentile(boot_f[i], 1.0 - tail));
    }
    // Negative only if the whole interval sits below zero.
    out.negative.push_back(out.total_hi[i] < 0.0);
  }
  return out;
}

std::vector<double> evaluate_design(const SaltelliDesign& design,
                                    const std::function<double(const std::vector<double>&)>& f) {
  std::vector<double> y(design.rows.size());
  parallel_for(design.rows.size(), [&](std::size_t r) { y[r] = f(design.rows[r]); });
  return y;
}

std::vector<double> evaluate_model(const SaltelliDesign& design, const ParamSpace& space, const ModelParams& base,
                                   Observable observable, std::size_t replicates, std::uint64_t seed) {
  if (replicates < 1) throw ConfigError("at least one replicate is required");
  for (const auto& r : space.dims)
    if (!find_param(r.name)) throw ConfigError("unknown parameter '" + r.name + "' in parameter space");
  return evaluate_design(design, [&](const std::vector<double>& row) {
    const ModelParams p = with_row(base, space, row);
    double total = 0;
    for (std::size_t k = 0; k < replicates; ++k) total += run(p, seed + k).series(observable).back();
    return total / static_cast<double>(replicates);
  });
}

double ishigami(const std::vector<double>& x, double a, double b) {
  return std::sin(x[0]) + a * std::pow(std::sin(x[1]), 2) + b * std::pow(x[2], 4) * std::sin(x[0]);
}

OatResult oat_sweep(const ModelParams& base, const std::string& parameter, const std::vector<double>& values,
                    Observable observable, std::size_t replicates, std::uint64_t seed) {
  if (replicates < 1) throw ConfigError("at least one replicate is required");
  if (!find_param(parameter)) throw ConfigError("unknown parameter '" + parameter + "'");
  OatResult out;
  out.parameter = parameter;
  out.observable = observable;
  out.values = values;
  std::vector<ModelParams> settings;
  for (double v : values) {
    ModelParams p = base;
    p[*find_param(parameter)] = v;
    p.validate();
    settings.push_back(p);
  }
  std::vector<SimulationOutput> runs(values.size() * replicates);
  parallel_for(runs.size(), [&](std::size_t r) { runs[r] = run(settings[r / replicates], seed + r % replicates); });
  for (std::size_t v = 0; v < values.size(); ++v) {
    std::vector<double> avg(runs[v * replicates].days, 0.0);
    for (std::size_t k = 0; k < replicates; ++k) {
      const auto& s = runs[v * replicates + k].series(observable);
      for (std::size_t t = 0; t < avg.size(); ++t) avg[t] += s[t] / static_cast<double>(replicates);
    }
    out.final_mean.push_back(avg.back());
    out.mean_series.push_back(std::move(avg));
  }
  return out;
}

}  // namespace depiabs

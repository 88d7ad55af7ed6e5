#include "depiabs/epidemic.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "depiabs/diffcore/relax.hpp"
#include "depiabs/errors.hpp"

namespace depiabs {

namespace {

// y = A v for a row-major square A.
Tensor matvec(const Tensor& a, const Tensor& v) {
  const std::size_t n = v.size();
  if (a.size() != n * n) throw UsageError("matvec: shape mismatch");
  const auto av = a.values(), vv = v.values();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += av[i * n + j] * vv[j];
    out[i] = acc;
  }
  if (!detail::any_requires_grad({&a, &v})) return detail::make_result({n}, std::move(out), {}, {});
  return detail::make_result({n}, std::move(out), {a, v}, [n](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pv = *self.parents[1];
    if (pa.requires_grad) {
      auto& ga = pa.grad_buffer();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += self.grad[i] * pv.value[j];
    }
    if (pv.requires_grad) {
      auto& gv = pv.grad_buffer();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) gv[j] += self.grad[i] * pa.value[i * n + j];
    }
  });
}

}  // namespace

Tensor encounter_matrix(const Tensor& locations, const Tensor& m) {
  if (locations.rank() != 2) throw UsageError("encounter_matrix: locations must be P x F");
  const std::size_t P = locations.dim(0), F = locations.dim(1);
  const auto l = locations.values();
  const double mv = m.item();
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;

  // Shared-location products and pairwise distances, kept for backward.
  std::vector<double> g(P * P, 0.0), dist(P * P, 0.0), out(P * P, 0.0);
  for (std::size_t i = 0; i < P; ++i) {
    for (std::size_t j = i + 1; j < P; ++j) {
      double dot = 0.0, sq = 0.0;
      for (std::size_t f = 0; f < F; ++f) {
        const double a = l[i * F + f], b = l[j * F + f];
        dot += a * b;
        sq += (a - b) * (a - b);
      }
      const double d = std::sqrt(sq);
      g[i * P + j] = g[j * P + i] = dot;
      dist[i * P + j] = dist[j * P + i] = d;
      out[i * P + j] = out[j * P + i] = mv * dot * (1.0 - d * inv_sqrt2);
    }
  }
  if (!detail::any_requires_grad({&locations, &m})) return detail::make_result({P, P}, std::move(out), {}, {});
  return detail::make_result(
      {P, P}, std::move(out), {locations, m},
      [P, F, mv, inv_sqrt2, g = std::move(g), dist = std::move(dist)](detail::Node& self) {
        auto& pl = *self.parents[0];
        auto& pm = *self.parents[1];
        const auto& l = pl.value;
        double* gl = pl.requires_grad ? pl.grad_buffer().data() : nullptr;
        double gm = 0.0;
        for (std::size_t i = 0; i < P; ++i) {
          for (std::size_t j = 0; j < P; ++j) {
            if (i == j) continue;
            const double ge = self.grad[i * P + j];
            if (ge == 0.0) continue;
            const double dot = g[i * P + j], d = dist[i * P + j];
            const double c = 1.0 - d * inv_sqrt2;
            gm += ge * dot * c;
            if (!gl) continue;
            const double w = ge * mv;
            for (std::size_t f = 0; f < F; ++f) {
              const double a = l[i * F + f], b = l[j * F + f];
              // d(dot)/dl_i = l_j, d(dist)/dl_i = (l_i - l_j) / dist (0 at dist 0)
              double da = c * b, db = c * a;
              if (d > 0.0) {
                da -= dot * inv_sqrt2 * (a - b) / d;
                db -= dot * inv_sqrt2 * (b - a) / d;
              }
              gl[i * F + f] += w * da;
              gl[j * F + f] += w * db;
            }
          }
        }
        if (pm.requires_grad) pm.grad_buffer()[0] += gm;
      });
}

Tensor expected_exposures(const Tensor& encounters, const HealthClasses& h, const Tensor& beta) {
  return beta * h.susceptible * matvec(encounters, h.infected());
}

Tensor colocated_exposures(const std::array<Tensor, 3>& outing,
                           const std::array<std::vector<std::size_t>, 3>& facility, std::size_t facility_count,
                           const HealthClasses& h, const Tensor& m, const Tensor& beta) {
  const Tensor infectious = h.infected();
  Tensor contact;
  for (std::size_t k = 0; k < 3; ++k) {
    const Tensor shed = outing[k] * infectious;
    const Tensor load = index_add(shed, facility[k], facility_count);
    // Others' infectious mass at my facility, excluding my own.
    const Tensor term = outing[k] * (gather(load, facility[k]) - shed);
    contact = contact.defined() ? contact + term : term;
  }
  return beta * m * h.susceptible * contact;
}

Tensor infection_tolerance(const Tensor& immune, const std::vector<double>& u, bool random) {
  if (!random) return immune;
  const auto iv = immune.values();
  if (u.size() != iv.size()) throw UsageError("infection_tolerance: draw count mismatch");
  // Quantile of Gamma(n, 1) for the nearest whole level n, rescaled so the
  // tolerance still moves smoothly with a relaxed immune level.
  std::vector<double> q(iv.size());
  for (std::size_t i = 0; i < iv.size(); ++i) {
    const double n = std::max(1.0, std::round(iv[i]));
    const double g = n == 1.0 ? -std::log1p(-u[i]) : boost::math::gamma_p_inv(n, u[i]);
    q[i] = g / n;
  }
  return immune * Tensor::from(std::move(q));
}

Infection establish_infections(const Tensor& cumul, const Tensor& exposures, const Tensor& tolerance,
                               const Tensor& susceptible, double xi) {
  const Tensor total = cumul + exposures;
  const Tensor crossed = relax_precise(total, tolerance, Tensor::scalar(1.0), xi);
  Infection out;
  out.infect = susceptible * crossed;
  out.cumul = total * (1.0 - out.infect);
  return out;
}

Durations sample_durations(const Tensor& age, const Tensor& immune, NoiseStream& noise) {
  const std::size_t n = std::max(age.size(), immune.size());
  Durations d;
  d.incubation = sample_lognormal_reparam(Tensor::scalar(kIncubationLogMean), Tensor::scalar(kIncubationLogSd), noise, n);
  const Tensor base = sample_normal_reparam(Tensor::scalar(kSymptomaticMean), Tensor::scalar(kSymptomaticSd), noise, n);
  d.symptomatic = maximum(age / (kReferenceAge * immune) * base, 0.0);
  return d;
}

Tensor severity_step(const Tensor& severity, const Tensor& infected, const Tensor& elapsed, const Tensor& t_inc,
                     const Tensor& mu_t, const Tensor& sigma_t, const Tensor& theta_age, const Tensor& immune,
                     NoiseStream& noise, double xi) {
  const Tensor progressing = relax_precise(elapsed, t_inc, infected, xi);
  const Tensor ds = sample_normal_reparam(mu_t, sigma_t, noise, severity.size());
  return severity + progressing * theta_age * ds / immune;
}

Recovery recovery_step(const Tensor& severity, const Tensor& per_prev, const Tensor& infected, const Tensor& elapsed_days,
                       const Tensor& t_inc, const Tensor& t_sym, double xi) {
  const Tensor one = Tensor::scalar(1.0);
  const Tensor below = relax_precise(kRemissionSeverity - severity, Tensor::scalar(0.0), one, xi);
  const Tensor lethal = relax_precise(severity, Tensor::scalar(kLethalSeverity), one, xi);
  const Tensor done = relax_precise(elapsed_days, t_inc + t_sym, one, xi);

  Recovery r;
  r.early = below * per_prev * infected;
  r.elapsed = done * infected * (1.0 - per_prev) * (1.0 - lethal);
  r.recovery = r.early + r.elapsed;
  r.per = below * (1.0 - per_prev) * infected * (1.0 - done);
  return r;
}

HealthClasses health_update(const HealthClasses& h, const Tensor& infect, const Recovery& recovery,
                            const Tensor& severity, double xi) {
  const Tensor one = Tensor::scalar(1.0);
  const Tensor infected = h.infected();
  const Tensor die = relax_precise(severity, Tensor::scalar(kLethalSeverity), infected, xi);
  const Tensor remaining = infected - die - recovery.recovery;
  HealthClasses next;
  next.susceptible = h.susceptible - infect + recovery.recovery;
  next.symptomatic = relax_precise(severity, Tensor::scalar(kSymptomaticSeverity), remaining, xi);
  next.asymptomatic = infect + remaining - next.symptomatic;
  next.deceased = h.deceased + die;
  return next;
}

Mutation mutation_step(const Tensor& immune, const Tensor& mu_t, const Tensor& sigma_t, const Tensor& gamma,
                       const Tensor& p, double temperature, NoiseStream& noise) {
  Mutation out;
  out.mutate = sample_bernoulli_reparam(gamma, temperature, noise, 1);
  const Tensor escape = sample_bernoulli_reparam(p, temperature, noise, immune.size());
  out.immune = maximum(immune - out.mutate * escape, 1.0);
  const double f_mu = 0.5 + noise.uniform();
  const double f_sigma = 0.5 + noise.uniform();
  out.mu_t = mu_t * (1.0 + out.mutate * (f_mu - 1.0));
  out.sigma_t = sigma_t * (1.0 + out.mutate * (f_sigma - 1.0));
  return out;
}

}  // namespace depiabs

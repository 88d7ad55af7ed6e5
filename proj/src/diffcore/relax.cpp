#include "depiabs/diffcore/relax.hpp"

#include <cmath>
#include <numbers>

#include "depiabs/errors.hpp"

namespace depiabs {

namespace {

inline std::size_t bidx(std::size_t n, std::size_t i) { return n == 1 ? 0 : i; }

// Shared shape of the three relaxations: out = x * g(a - A), with g and g'
// supplied per relaxation.
template <class G, class DG>
Tensor relax_elementwise(const Tensor& a, const Tensor& threshold, const Tensor& x, G g, DG dg) {
  const std::size_t n = detail::broadcast_size({&a, &threshold, &x});
  const auto av = a.values(), tv = threshold.values(), xv = x.values();
  const std::size_t na = av.size(), nt = tv.size(), nx = xv.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = xv[bidx(nx, i)] * g(av[bidx(na, i)] - tv[bidx(nt, i)]);
  Shape shape = detail::broadcast_shape({&a, &threshold, &x});
  if (!detail::any_requires_grad({&a, &threshold, &x}))
    return detail::make_result(std::move(shape), std::move(out), {}, {});
  return detail::make_result(std::move(shape), std::move(out), {a, threshold, x}, [g, dg](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pt = *self.parents[1];
    auto& px = *self.parents[2];
    const std::size_t na = pa.value.size(), nt = pt.value.size(), nx = px.value.size();
    double* ga = pa.requires_grad ? pa.grad_buffer().data() : nullptr;
    double* gt = pt.requires_grad ? pt.grad_buffer().data() : nullptr;
    double* gx = px.requires_grad ? px.grad_buffer().data() : nullptr;
    for (std::size_t i = 0; i < self.value.size(); ++i) {
      const double gy = self.grad[i];
      if (gy == 0.0) continue;
      const double d = pa.value[bidx(na, i)] - pt.value[bidx(nt, i)];
      const double xi = px.value[bidx(nx, i)];
      if (ga || gt) {
        const double slope = gy * xi * dg(d);
        if (ga) ga[bidx(na, i)] += slope;
        if (gt) gt[bidx(nt, i)] -= slope;
      }
      if (gx) gx[bidx(nx, i)] += gy * g(d);
    }
  });
}

void check_slack(double xi) {
  if (!(xi > 0.0)) throw ConfigError("relax_precise: slack xi must be positive");
}

}  // namespace

void RelaxConfig::validate() const {
  if (!(xi > 0.0)) throw ConfigError("relaxation slack xi must be positive");
  if (!(k > 0.0)) throw ConfigError("logistic steepness k must be positive");
  if (!(temperature > 0.0)) throw ConfigError("relaxation temperature must be positive");
}

Tensor relax_precise(const Tensor& a, const Tensor& threshold, const Tensor& x, double xi) {
  check_slack(xi);
  return relax_elementwise(
      a, threshold, x,
      [xi](double d) {
        const double r = d > 0.0 ? d : 0.0;
        return r / (r + xi);
      },
      [xi](double d) {
        if (d <= 0.0) return 0.0;
        const double den = d + xi;
        return xi / (den * den);
      });
}

Tensor relax_precise(const Tensor& a, double threshold, double xi) {
  return relax_precise(a, Tensor::scalar(threshold), Tensor::scalar(1.0), xi);
}

Tensor relax_moderate(const Tensor& a, const Tensor& threshold, const Tensor& x) {
  return relax_elementwise(
      a, threshold, x, [](double d) { return d > 0.0 ? std::tanh(d) : 0.0; },
      [](double d) {
        if (d <= 0.0) return 0.0;
        const double t = std::tanh(d);
        return 1.0 - t * t;
      });
}

Tensor relax_moderate(const Tensor& a, double threshold) {
  return relax_moderate(a, Tensor::scalar(threshold), Tensor::scalar(1.0));
}

Tensor relax_fuzzy(const Tensor& a, const Tensor& threshold, const Tensor& x, double k) {
  if (!(k > 0.0)) throw ConfigError("relax_fuzzy: steepness k must be positive");
  return relax_elementwise(
      a, threshold, x, [k](double d) { return 1.0 / (1.0 + std::exp(-k * d)); },
      [k](double d) {
        const double s = 1.0 / (1.0 + std::exp(-k * d));
        return k * s * (1.0 - s);
      });
}

Tensor relax_fuzzy(const Tensor& a, double threshold, double k) {
  return relax_fuzzy(a, Tensor::scalar(threshold), Tensor::scalar(1.0), k);
}

double periodic_indicator_value(long t, long m, long n, double xi) {
  if (n < 2) throw ConfigError("periodic_indicator: period must be at least 2");
  if (t < 0) throw ConfigError("periodic_indicator: time must be non-negative");
  check_slack(xi);
  // Reduce first so large t does not lose phase precision.
  const long r = ((t - m) % n + n) % n;
  const double c = std::cos(static_cast<double>(r) * std::numbers::pi / static_cast<double>(n));
  const double threshold = std::cos(std::numbers::pi / static_cast<double>(n));
  const double margin = 1.0 - threshold;
  const double d = c * c - threshold;
  const double relu = d > 0.0 ? d : 0.0;
  return relu / (relu + xi * margin);
}

Tensor periodic_indicator(long t, long m, long n, double xi) {
  return Tensor::scalar(periodic_indicator_value(t, m, n, xi));
}

}  // namespace depiabs

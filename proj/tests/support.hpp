#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <gtest/gtest.h>

#include "depiabs/diffcore/tensor.hpp"

namespace depiabs::testing {

// Central differences of a scalar function of `x`.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h = 1e-4) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double up = f(x);
    x[i] = x0 - h;
    const double down = f(x);
    x[i] = x0;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

// Builds a loss from parameter leaves, then compares backward() with
// central differences entry by entry.
inline void expect_gradient_matches(const std::function<Tensor(const Tensor&)>& loss, const std::vector<double>& x,
                                    double rel = 1e-3, double h = 1e-4, double abs_floor = 1e-8) {
  const Tensor leaf = Tensor::parameter(x, {x.size()});
  const Tensor out = loss(leaf);
  out.backward();
  const auto analytic = leaf.grad();
  const auto numeric = numeric_gradient(
      [&](const std::vector<double>& v) {
        NoGradGuard guard;
        return loss(Tensor::from(v, {v.size()})).item();
      },
      x, h);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), abs_floor});
    EXPECT_LE(std::abs(analytic[i] - numeric[i]) / scale, rel)
        << "entry " << i << ": analytic " << analytic[i] << " numeric " << numeric[i];
  }
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace depiabs::testing

#pragma once

#include "depiabs/diffcore/tensor.hpp"

namespace depiabs {

// Smoothing controls shared by the relaxed model.
struct RelaxConfig {
  double xi = 1e-6;          // slack of the precision-critical relaxation
  double k = 10.0;           // logistic steepness for fuzzy (behavioural) conditions
  double temperature = 0.5;  // categorical / Bernoulli relaxation temperature

  // Throws ConfigError unless all three are strictly positive.
  void validate() const;
};

// x * ReLU(a - A) / (ReLU(a - A) + xi).
//
// Exactly zero when a <= A and within xi / (a - A + xi) of x otherwise. The
// ReLU kink at a == A takes the zero subgradient. Operands broadcast.
Tensor relax_precise(const Tensor& a, const Tensor& threshold, const Tensor& x, double xi);
Tensor relax_precise(const Tensor& a, double threshold, double xi);

// x * ReLU(tanh(a - A)); zero when a <= A, |d/da| bounded by |x|.
Tensor relax_moderate(const Tensor& a, const Tensor& threshold, const Tensor& x);
Tensor relax_moderate(const Tensor& a, double threshold);

// x * sigmoid(k * (a - A)).
Tensor relax_fuzzy(const Tensor& a, const Tensor& threshold, const Tensor& x, double k);
Tensor relax_fuzzy(const Tensor& a, double threshold, double k);

// Relaxed indicator of t == m (mod n), from cos^2((t - m) pi / n) > cos(pi / n).
//
// The slack is scaled by the comparison margin 1 - cos(pi / n), so matching
// residues give 1 / (1 + xi) for every period; other residues give exactly 0.
Tensor periodic_indicator(long t, long m, long n, double xi = RelaxConfig{}.xi);
double periodic_indicator_value(long t, long m, long n, double xi = RelaxConfig{}.xi);

}  // namespace depiabs

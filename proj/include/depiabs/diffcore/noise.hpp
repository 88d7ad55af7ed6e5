#pragma once

#include <cstdint>
#include <vector>

#include "depiabs/diffcore/tensor.hpp"

namespace depiabs {

// Counter-based noise source. Draw i of a stream is a pure function of
// (seed, i), so two streams with the same seed and counter agree bit for bit.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }
  void seek(std::uint64_t counter) { counter_ = counter; }

  // Open-interval uniforms on (0, 1).
  double uniform();
  std::vector<double> uniform(std::size_t n);
  // Standard normals (Box-Muller, two uniforms per value).
  std::vector<double> normal(std::size_t n);
  std::vector<double> gumbel(std::size_t n);
  std::vector<double> logistic(std::size_t n);

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

// mu + sigma * eps, eps ~ N(0, 1). Output length is the broadcast of mu,
// sigma and `n`. Throws DomainError on negative sigma.
Tensor sample_normal_reparam(const Tensor& mu, const Tensor& sigma, NoiseStream& noise, std::size_t n = 1);

// lo + (hi - lo) * u, u ~ U(0, 1).
Tensor sample_uniform_reparam(const Tensor& lo, const Tensor& hi, NoiseStream& noise, std::size_t n = 1);

// exp(mu + sigma * eps).
Tensor sample_lognormal_reparam(const Tensor& mu, const Tensor& sigma, NoiseStream& noise, std::size_t n = 1);

// Relaxed one-hot draw: softmax((log p + g) / temperature), g ~ Gumbel.
// `probs` is a K-vector or a (rows x K) matrix whose rows each sum to 1
// within 1e-6; otherwise DomainError.
Tensor sample_categorical_reparam(const Tensor& probs, double temperature, NoiseStream& noise);

// Relaxed Bernoulli (binary concrete): sigmoid((logit p + l) / temperature), l ~ Logistic.
Tensor sample_bernoulli_reparam(const Tensor& prob, double temperature, NoiseStream& noise, std::size_t n = 1);

}  // namespace depiabs

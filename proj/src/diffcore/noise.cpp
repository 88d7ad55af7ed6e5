#include "depiabs/diffcore/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "depiabs/errors.hpp"

namespace depiabs {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Floor on probabilities before taking logs; keeps zero-probability entries
// finite (their exp underflows back to exactly 0).
constexpr double kProbFloor = 1e-300;

}  // namespace

double NoiseStream::uniform() {
  const std::uint64_t bits = splitmix64(splitmix64(seed_) ^ counter_++);
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

std::vector<double> NoiseStream::uniform(std::size_t n) {
  std::vector<double> out(n);
  for (auto& u : out) u = uniform();
  return out;
}

std::vector<double> NoiseStream::normal(std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; i += 2) {
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    out[i] = r * std::cos(2.0 * std::numbers::pi * u2);
    if (i + 1 < n) out[i + 1] = r * std::sin(2.0 * std::numbers::pi * u2);
  }
  return out;
}

std::vector<double> NoiseStream::gumbel(std::size_t n) {
  std::vector<double> out(n);
  for (auto& g : out) g = -std::log(-std::log(uniform()));
  return out;
}

std::vector<double> NoiseStream::logistic(std::size_t n) {
  std::vector<double> out(n);
  for (auto& l : out) {
    const double u = uniform();
    l = std::log(u) - std::log1p(-u);
  }
  return out;
}

Tensor sample_normal_reparam(const Tensor& mu, const Tensor& sigma, NoiseStream& noise, std::size_t n) {
  for (double s : sigma.values())
    if (s < 0.0) throw DomainError("sample_normal_reparam: negative standard deviation");
  const std::size_t len = std::max(detail::broadcast_size({&mu, &sigma}), n);
  return mu + sigma * Tensor::from(noise.normal(len));
}

Tensor sample_uniform_reparam(const Tensor& lo, const Tensor& hi, NoiseStream& noise, std::size_t n) {
  const std::size_t len = std::max(detail::broadcast_size({&lo, &hi}), n);
  return lo + (hi - lo) * Tensor::from(noise.uniform(len));
}

Tensor sample_lognormal_reparam(const Tensor& mu, const Tensor& sigma, NoiseStream& noise, std::size_t n) {
  return exp(sample_normal_reparam(mu, sigma, noise, n));
}

Tensor sample_categorical_reparam(const Tensor& probs, double temperature, NoiseStream& noise) {
  if (!(temperature > 0.0)) throw ConfigError("categorical temperature must be positive");
  const Tensor matrix = probs.rank() == 2 ? probs : reshape(probs, {1, probs.size()});
  const std::size_t rows = matrix.dim(0), cols = matrix.dim(1);
  const auto p = matrix.values();
  for (std::size_t r = 0; r < rows; ++r) {
    double total = 0.0;
    for (std::size_t k = 0; k < cols; ++k) {
      if (p[r * cols + k] < 0.0) throw DomainError("sample_categorical_reparam: negative probability");
      total += p[r * cols + k];
    }
    if (std::abs(total - 1.0) > 1e-6)
      throw DomainError("sample_categorical_reparam: row " + std::to_string(r) + " sums to " + std::to_string(total));
  }
  const Tensor gumbel = Tensor::from(noise.gumbel(rows * cols), {rows, cols});
  const Tensor logits = (log(maximum(matrix, kProbFloor)) + gumbel) * (1.0 / temperature);
  const Tensor y = softmax_rows(logits);
  return probs.rank() == 2 ? y : reshape(y, probs.shape());
}

Tensor sample_bernoulli_reparam(const Tensor& prob, double temperature, NoiseStream& noise, std::size_t n) {
  if (!(temperature > 0.0)) throw ConfigError("Bernoulli temperature must be positive");
  for (double p : prob.values())
    if (p < 0.0 || p > 1.0) throw DomainError("sample_bernoulli_reparam: probability outside [0, 1]");
  const std::size_t len = std::max(prob.size(), n);
  const Tensor logit = log(maximum(prob, kProbFloor)) - log(maximum(1.0 - prob, kProbFloor));
  return sigmoid((logit + Tensor::from(noise.logistic(len))) * (1.0 / temperature));
}

}  // namespace depiabs

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "depiabs/engine.hpp"

namespace depiabs {

struct ParamRange {
  std::string name;
  double lower = 0, upper = 0;
  std::string group;  // free-form label, e.g. "epidemic" or "economic"
};

struct ParamSpace {
  std::vector<ParamRange> dims;

  std::size_t d() const { return dims.size(); }
  // Throws ConfigError on empty spaces, non-finite or unordered bounds.
  void validate() const;
  // Lines of "name lower upper [group]"; '#' starts a comment.
  static ParamSpace parse(const std::string& text);
};

// Rows laid out as blocks A, B, AB_1..AB_d, BA_1..BA_d, each N rows, where
// AB_i is A with column i taken from B (and BA_i the reverse).
struct SaltelliDesign {
  std::size_t n = 0, d = 0;
  std::vector<std::vector<double>> rows;

  std::size_t a(std::size_t j) const { return j; }
  std::size_t b(std::size_t j) const { return n + j; }
  std::size_t ab(std::size_t i, std::size_t j) const { return (2 + i) * n + j; }
  std::size_t ba(std::size_t i, std::size_t j) const { return (2 + d + i) * n + j; }
};

// N(2d + 2) rows from a 2d-dimensional Sobol sequence (first point skipped).
// A non-power-of-two N is allowed but triggers a warning on stderr.
SaltelliDesign saltelli_sample(const ParamSpace& space, std::size_t n);

struct SobolResult {
  std::size_t samples = 0;
  bool undefined = false;  // output variance was zero
  std::vector<double> total, total_lo, total_hi;
  std::vector<double> first, first_lo, first_hi;
  std::vector<bool> negative;  // S_T below zero by more than noise tolerance
};

// Jansen total effects and Saltelli first-order effects, each averaged over
// the AB and BA blocks, with percentile bootstrap intervals over sample rows.
SobolResult sobol_indices(const SaltelliDesign& design, const std::vector<double>& y, std::size_t resamples = 1000,
                          double level = 0.95, std::uint64_t seed = 7);

// Evaluates f on every design row using the worker pool.
std::vector<double> evaluate_design(const SaltelliDesign& design,
                                    const std::function<double(const std::vector<double>&)>& f);

// Replicate-averaged final value of an observable for each design row.
std::vector<double> evaluate_model(const SaltelliDesign& design, const ParamSpace& space, const ModelParams& base,
                                   Observable observable, std::size_t replicates, std::uint64_t seed = 1);

double ishigami(const std::vector<double>& x, double a = 7.0, double b = 0.1);

struct OatResult {
  std::string parameter;
  Observable observable{};
  std::vector<double> values;
  std::vector<std::vector<double>> mean_series;  // one trajectory per value
  std::vector<double> final_mean;
};

OatResult oat_sweep(const ModelParams& base, const std::string& parameter, const std::vector<double>& values,
                    Observable observable, std::size_t replicates, std::uint64_t seed = 1);

}  // namespace depiabs

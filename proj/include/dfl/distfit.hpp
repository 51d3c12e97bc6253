/*
 * Copyright 2026 The dflpool Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Local label-distribution fitting: a 1-D Gaussian mixture fitted to a node's
// label vector by EM, with the component count chosen by BIC under an upper
// bound of ceil(rho * distinct labels).

#ifndef DFL_DISTFIT_HPP_
#define DFL_DISTFIT_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dfl/numkit.hpp"

namespace dfl {

struct GmmParams {
  std::vector<double> weights;    // pi, sums to 1
  std::vector<double> means;      // mu
  std::vector<double> variances;  // sigma^2, each >= the variance floor

  std::size_t size() const { return means.size(); }

  // Throws ConsistencyError on mismatched lengths, non-positive weights, a
  // weight sum off by more than 1e-9, or variances below `variance_floor`.
  void validate(double variance_floor) const;

  bool operator==(const GmmParams&) const = default;
};

// The payload a node shares with its neighbors before training.
struct FittedDistribution {
  GmmParams params;
  std::size_t n_samples = 0;
  int n_classes = 0;
  // Set only when EM failed and the node falls back to its empirical label
  // histogram; params is then empty.
  std::optional<std::vector<double>> histogram;

  // {"pi":[..],"mu":[..],"sigma2":[..],"n_samples":N,"n_classes":C}
  // plus "histogram":[..] for fallback payloads.
  nlohmann::ordered_json to_json() const;
  static FittedDistribution from_json(const nlohmann::ordered_json& j);

  bool operator==(const FittedDistribution&) const = default;
};

struct FitConfig {
  double rho = 0.5;               // maximum component fraction, (0, 1]
  int max_iterations = 200;
  double tolerance = 1e-6;        // on |delta Q| between iterations
  double variance_floor = 1e-4;
  int n_restarts = 1;             // total initializations; the first is quantile-based
  bool bic_standard = false;      // penalty 3M-1 instead of M

  void validate() const;

  bool operator==(const FitConfig&) const = default;
};

struct EmResult {
  double log_likelihood = 0.0;  // ln L of `params`
  GmmParams params;
  int iterations = 0;           // M-steps performed
  bool converged = false;
};

// Per-iteration diagnostics for property tests.
struct EmTrace {
  std::vector<double> log_likelihoods;
  std::vector<double> q_values;
  double max_row_sum_error = 0.0;  // max over iterations and rows of |sum_m gamma - 1|
  double min_responsibility = 1.0;
  double max_responsibility = 0.0;
};

// Univariate normal density. Throws InvalidArgumentError for variance <= 0.
double gaussian_pdf(double y, double mean, double variance);

// Fits an M-component mixture by EM. Initialization: means at evenly spaced
// sample quantiles, variances at max(sample variance, floor), uniform weights;
// extra restarts (config.n_restarts > 1) start from random sample points and
// the highest likelihood wins. Throws NumericError naming the iteration if a
// non-finite value appears.
EmResult expectation_max(std::span<const double> values, std::size_t m, const FitConfig& config,
                         Rng& rng, EmTrace* trace = nullptr);

// -2 ln L + penalty * ln N with penalty = M (or 3M - 1 when `standard`).
double bic(double log_likelihood, std::size_t m, std::size_t n, bool standard = false);

// ceil(rho * distinct), at least 1.
std::size_t max_components(double rho, std::size_t distinct);

struct BicSelection {
  std::size_t best_m = 0;
  EmResult best;
  std::vector<double> bic_by_m;  // index M - 1; NaN when that fit failed
};

// Fits M = 1..m_max and keeps the lowest BIC, ties going to the smaller M.
// Throws FittingError if every candidate fails.
BicSelection select_components(std::span<const double> values, std::size_t m_max,
                               const FitConfig& config, Rng& rng);

// Fits a node's integer labels in [0, n_classes), treated as real values.
FittedDistribution pretrain_distribution_fitting(std::span<const int> labels, int n_classes,
                                                 const FitConfig& config, Rng& rng);

// Normalized empirical label histogram, the stand-in when fitting fails.
FittedDistribution histogram_distribution(std::span<const int> labels, int n_classes);

inline constexpr double kProbabilityFloor = 1e-12;

// Probability vector over {0, .., n_classes - 1}: mixture density at each
// class index plus `floor`, normalized to sum 1.
std::vector<double> discretize(const FittedDistribution& fit, double floor = kProbabilityFloor);

}  // namespace dfl

#endif  // DFL_DISTFIT_HPP_

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

#include "dfl/distfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "dfl/errors.hpp"
#include "dfl/kernels.hpp"

namespace dfl {

void GmmParams::validate(double variance_floor) const {
  const std::size_t m = means.size();
  if (m == 0 || weights.size() != m || variances.size() != m) {
    throw ConsistencyError("GMM parameter vectors must be non-empty and of equal length");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!(weights[i] > 0.0)) throw ConsistencyError("GMM weight must be positive");
    if (!std::isfinite(means[i])) throw ConsistencyError("GMM mean must be finite");
    if (!(variances[i] >= variance_floor) || !std::isfinite(variances[i])) {
      throw ConsistencyError("GMM variance below floor");
    }
    sum += weights[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConsistencyError("GMM weights do not sum to 1");
}

nlohmann::ordered_json FittedDistribution::to_json() const {
  nlohmann::ordered_json j;
  j["pi"] = params.weights;
  j["mu"] = params.means;
  j["sigma2"] = params.variances;
  j["n_samples"] = n_samples;
  j["n_classes"] = n_classes;
  if (histogram) j["histogram"] = *histogram;
  return j;
}

FittedDistribution FittedDistribution::from_json(const nlohmann::ordered_json& j) {
  static const char* kKeys[] = {"pi", "mu", "sigma2", "n_samples", "n_classes", "histogram"};
  if (!j.is_object()) throw FormatError("fitted distribution must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw FormatError("fitted distribution: unknown key '" + key + "'");
    }
  }
  FittedDistribution fit;
  try {
    fit.params.weights = j.at("pi").get<std::vector<double>>();
    fit.params.means = j.at("mu").get<std::vector<double>>();
    fit.params.variances = j.at("sigma2").get<std::vector<double>>();
    fit.n_samples = j.at("n_samples").get<std::size_t>();
    fit.n_classes = j.at("n_classes").get<int>();
    if (j.contains("histogram")) fit.histogram = j.at("histogram").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("fitted distribution: ") + e.what());
  }
  if (fit.n_samples < 1 || fit.n_classes < 2) {
    throw FormatError("fitted distribution: need n_samples >= 1 and n_classes >= 2");
  }
  if (fit.histogram) {
    if (fit.histogram->size() != static_cast<std::size_t>(fit.n_classes)) {
      throw FormatError("fitted distribution: histogram length != n_classes");
    }
  } else {
    try {
      fit.params.validate(0.0);
    } catch (const ConsistencyError& e) {
      throw FormatError(std::string("fitted distribution: ") + e.what());
    }
  }
  return fit;
}

void FitConfig::validate() const {
  if (!(rho > 0.0 && rho <= 1.0)) throw InvalidArgumentError("rho must be in (0, 1]");
  if (max_iterations < 1) throw InvalidArgumentError("max_iterations must be >= 1");
  if (!(tolerance > 0.0)) throw InvalidArgumentError("tolerance must be positive");
  if (!(variance_floor > 0.0)) throw InvalidArgumentError("variance_floor must be positive");
  if (n_restarts < 1) throw InvalidArgumentError("n_restarts must be >= 1");
}

double gaussian_pdf(double y, double mean, double variance) {
  if (!(variance > 0.0)) {
    throw InvalidArgumentError("gaussian_pdf: variance must be positive, got " +
                               std::to_string(variance));
  }
  const double d = y - mean;
  return std::exp(-0.5 * d * d / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

namespace {

// Below this responsibility mass a component keeps its previous mean and
// variance; its weight is held at this mass so every weight stays positive.
constexpr double kMinComponentMass = 1e-300;

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

Moments moments(std::span<const double> values) {
  Moments m;
  for (double v : values) m.mean += v;
  m.mean /= static_cast<double>(values.size());
  for (double v : values) m.variance += (v - m.mean) * (v - m.mean);
  m.variance /= static_cast<double>(values.size());
  return m;
}

GmmParams quantile_init(std::span<const double> values, std::size_t m, double variance) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  GmmParams p;
  p.weights.assign(m, 1.0 / static_cast<double>(m));
  p.variances.assign(m, variance);
  const auto n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < m; ++i) {
    const double q = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
    const auto idx = std::min(sorted.size() - 1, static_cast<std::size_t>(q * n));
    p.means.push_back(sorted[idx]);
  }
  return p;
}

GmmParams random_init(std::span<const double> values, std::size_t m, double variance, Rng& rng) {
  GmmParams p;
  p.weights.assign(m, 1.0 / static_cast<double>(m));
  p.variances.assign(m, variance);
  for (std::size_t i = 0; i < m; ++i) p.means.push_back(values[rng.uniform_index(values.size())]);
  return p;
}

EmResult run_em(std::span<const double> values, GmmParams params, const FitConfig& config,
                EmTrace* trace) {
  const std::size_t n = values.size();
  const std::size_t m = params.size();
  Matrix gamma(n, m);
  std::vector<double> log_norm(n);
  std::vector<double> q_terms(n);
  std::vector<double> log_weights(m);

  EmResult result;
  double prev_q = std::numeric_limits<double>::quiet_NaN();
  for (int it = 0;; ++it) {
    for (std::size_t k = 0; k < m; ++k) log_weights[k] = std::log(params.weights[k]);
    kernels::gmm_e_step(values, log_weights, params.means, params.variances, gamma.view(),
                        log_norm, q_terms);
    // Serial sums keep the result independent of the thread count.
    const double ll = std::accumulate(log_norm.begin(), log_norm.end(), 0.0);
    const double q = std::accumulate(q_terms.begin(), q_terms.end(), 0.0);
    if (!std::isfinite(ll) || !std::isfinite(q)) {
      throw NumericError("EM produced a non-finite log-likelihood at iteration " +
                         std::to_string(it));
    }
    if (trace != nullptr) {
      trace->log_likelihoods.push_back(ll);
      trace->q_values.push_back(q);
      for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (double g : gamma.row(r)) {
          s += g;
          trace->min_responsibility = std::min(trace->min_responsibility, g);
          trace->max_responsibility = std::max(trace->max_responsibility, g);
        }
        trace->max_row_sum_error = std::max(trace->max_row_sum_error, std::abs(s - 1.0));
      }
    }
    result.log_likelihood = ll;
    result.iterations = it;
    if (it > 0 && std::abs(q - prev_q) < config.tolerance) {
      result.converged = true;
      break;
    }
    if (it == config.max_iterations) break;
    prev_q = q;

    // M-step.
    std::vector<double> mass(m, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      const auto g = gamma.row(r);
      for (std::size_t k = 0; k < m; ++k) mass[k] += g[k];
    }
    const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      if (mass[k] < kMinComponentMass) {
        params.weights[k] = kMinComponentMass / total;
        continue;
      }
      double sum_y = 0.0;
      for (std::size_t r = 0; r < n; ++r) sum_y += gamma(r, k) * values[r];
      const double mean = sum_y / mass[k];
      double sum_sq = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const double d = values[r] - mean;
        sum_sq += gamma(r, k) * d * d;
      }
      params.weights[k] = mass[k] / total;
      params.means[k] = mean;
      params.variances[k] = std::max(sum_sq / mass[k], config.variance_floor);
      if (!std::isfinite(mean) || !std::isfinite(params.variances[k])) {
        throw NumericError("EM M-step produced a non-finite parameter at iteration " +
                           std::to_string(it));
      }
    }
    const double wsum = std::accumulate(params.weights.begin(), params.weights.end(), 0.0);
    for (double& w : params.weights) w /= wsum;
  }
  result.params = std::move(params);
  return result;
}

}  // namespace

EmResult expectation_max(std::span<const double> values, std::size_t m, const FitConfig& config,
                         Rng& rng, EmTrace* trace) {
  config.validate();
  if (values.empty()) throw InvalidArgumentError("expectation_max: no values");
  if (m < 1 || m > values.size()) {
    throw InvalidArgumentError("expectation_max: need 1 <= M <= N, got M=" + std::to_string(m) +
                               " N=" + std::to_string(values.size()));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidArgumentError("expectation_max: non-finite input value");
  }
  const double variance = std::max(moments(values).variance, config.variance_floor);

  EmResult best = run_em(values, quantile_init(values, m, variance), config, trace);
  for (int r = 1; r < config.n_restarts; ++r) {
    EmResult candidate = run_em(values, random_init(values, m, variance, rng), config, nullptr);
    if (candidate.log_likelihood > best.log_likelihood) best = std::move(candidate);
  }
  return best;
}

double bic(double log_likelihood, std::size_t m, std::size_t n, bool standard) {
  const double penalty = standard ? 3.0 * static_cast<double>(m) - 1.0 : static_cast<double>(m);
  return -2.0 * log_likelihood + penalty * std::log(static_cast<double>(n));
}

std::size_t max_components(double rho, std::size_t distinct) {
  // The epsilon absorbs representation error, e.g. 0.3 * 10 = 3.0000000000000004.
  const double bound = std::ceil(rho * static_cast<double>(distinct) - 1e-9);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::max(bound, 0.0)));
}

BicSelection select_components(std::span<const double> values, std::size_t m_max,
                               const FitConfig& config, Rng& rng) {
  if (values.empty()) throw InvalidArgumentError("select_components: no values");
  m_max = std::clamp<std::size_t>(m_max, 1, values.size());
  BicSelection sel;
  sel.bic_by_m.assign(m_max, std::numeric_limits<double>::quiet_NaN());
  double best_bic = std::numeric_limits<double>::infinity();
  std::string last_error;
  for (std::size_t m = 1; m <= m_max; ++m) {
    try {
      EmResult fit = expectation_max(values, m, config, rng);
      const double score = bic(fit.log_likelihood, m, values.size(), config.bic_standard);
      sel.bic_by_m[m - 1] = score;
      if (score < best_bic) {
        best_bic = score;
        sel.best_m = m;
        sel.best = std::move(fit);
      }
    } catch (const NumericError& e) {
      last_error = e.what();
    }
  }
  if (sel.best_m == 0) throw FittingError("every GMM candidate failed: " + last_error);
  return sel;
}

namespace {

void check_labels(std::span<const int> labels, int n_classes) {
  if (labels.empty()) throw InvalidArgumentError("label vector is empty");
  if (n_classes < 2) throw InvalidArgumentError("n_classes must be >= 2");
  for (int l : labels) {
    if (l < 0 || l >= n_classes) {
      throw InvalidArgumentError("label " + std::to_string(l) + " outside [0, " +
                                 std::to_string(n_classes) + ")");
    }
  }
}

}  // namespace

FittedDistribution pretrain_distribution_fitting(std::span<const int> labels, int n_classes,
                                                 const FitConfig& config, Rng& rng) {
  check_labels(labels, n_classes);
  std::vector<char> present(static_cast<std::size_t>(n_classes), 0);
  for (int l : labels) present[static_cast<std::size_t>(l)] = 1;
  const auto distinct = static_cast<std::size_t>(std::count(present.begin(), present.end(), 1));

  std::vector<double> values(labels.begin(), labels.end());
  BicSelection sel = select_components(values, max_components(config.rho, distinct), config, rng);

  FittedDistribution fit;
  fit.params = std::move(sel.best.params);
  fit.n_samples = labels.size();
  fit.n_classes = n_classes;
  return fit;
}

FittedDistribution histogram_distribution(std::span<const int> labels, int n_classes) {
  check_labels(labels, n_classes);
  std::vector<double> hist(static_cast<std::size_t>(n_classes), 0.0);
  for (int l : labels) hist[static_cast<std::size_t>(l)] += 1.0;
  for (double& h : hist) h /= static_cast<double>(labels.size());
  FittedDistribution fit;
  fit.n_samples = labels.size();
  fit.n_classes = n_classes;
  fit.histogram = std::move(hist);
  return fit;
}

std::vector<double> discretize(const FittedDistribution& fit, double floor) {
  const auto c = static_cast<std::size_t>(fit.n_classes);
  std::vector<double> p(c, 0.0);
  if (fit.histogram) {
    for (std::size_t y = 0; y < c; ++y) p[y] = (*fit.histogram)[y];
  } else {
    const GmmParams& g = fit.params;
    for (std::size_t y = 0; y < c; ++y) {
      for (std::size_t m = 0; m < g.size(); ++m) {
        p[y] += g.weights[m] * gaussian_pdf(static_cast<double>(y), g.means[m], g.variances[m]);
      }
    }
  }
  double sum = 0.0;
  for (double& v : p) {
    v += floor;
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

}  // namespace dfl

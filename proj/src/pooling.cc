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

#include "dfl/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dfl/errors.hpp"

namespace dfl {

GlobalDistribution estimate_global(std::span<const FittedDistribution> fits) {
  if (fits.empty()) throw InvalidArgumentError("estimate_global: no fits");
  GlobalDistribution global;
  global.n_classes = fits.front().n_classes;
  double total = 0.0;
  for (const auto& f : fits) {
    if (f.n_classes != global.n_classes) {
      throw ConsistencyError("estimate_global: fits disagree on n_classes (" +
                             std::to_string(f.n_classes) + " vs " +
                             std::to_string(global.n_classes) + ")");
    }
    if (f.n_samples < 1) throw InvalidArgumentError("estimate_global: fit with no samples");
    total += static_cast<double>(f.n_samples);
  }
  global.components.reserve(fits.size());
  for (const auto& f : fits) {
    global.components.push_back({static_cast<double>(f.n_samples) / total, f});
  }
  return global;
}

std::vector<double> global_discrete(const GlobalDistribution& global, double floor) {
  std::vector<double> p(static_cast<std::size_t>(global.n_classes), 0.0);
  for (const auto& comp : global.components) {
    const std::vector<double> local = discretize(comp.fit, floor);
    for (std::size_t y = 0; y < p.size(); ++y) p[y] += comp.mix_weight * local[y];
  }
  const double sum = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& v : p) v /= sum;
  return p;
}

namespace {

void check_probability(std::span<const double> p, const char* name) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InvalidArgumentError(std::string("kl_divergence: ") + name +
                                 " has a negative or non-finite entry");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw InvalidArgumentError(std::string("kl_divergence: ") + name + " sums to " +
                               std::to_string(sum));
  }
}

}  // namespace

double kl_divergence(std::span<const double> p_global, std::span<const double> p_local,
                     double floor) {
  if (p_global.size() != p_local.size()) {
    throw ConsistencyError("kl_divergence: lengths " + std::to_string(p_global.size()) + " and " +
                           std::to_string(p_local.size()) + " differ");
  }
  check_probability(p_global, "global distribution");
  check_probability(p_local, "local distribution");
  double kld = 0.0;
  for (std::size_t y = 0; y < p_global.size(); ++y) {
    const double p = p_global[y];
    if (p == 0.0) continue;
    kld += p * (std::log(std::max(p, floor)) - std::log(std::max(p_local[y], floor)));
  }
  return kld;
}

PoolingWeights entropy_pooling_weights(std::span<const double> p_global,
                                       std::span<const std::vector<double>> p_locals,
                                       const PoolingOptions& options) {
  if (p_locals.empty()) throw InvalidArgumentError("entropy_pooling_weights: no local distributions");
  const std::size_t k = p_locals.size();
  PoolingWeights w;
  w.kld.reserve(k);
  for (const auto& local : p_locals) {
    w.kld.push_back(std::max(0.0, kl_divergence(p_global, local, options.floor)));
  }
  const double total = std::accumulate(w.kld.begin(), w.kld.end(), 0.0);
  w.alpha.assign(k, 1.0 / static_cast<double>(k));
  if (total < options.zero_divergence) {
    w.uniform_fallback = true;
    return w;
  }
  if (options.inverse) {
    double norm = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      w.alpha[i] = 1.0 / (w.kld[i] + options.floor);
      norm += w.alpha[i];
    }
    for (double& a : w.alpha) a /= norm;
  } else {
    for (std::size_t i = 0; i < k; ++i) w.alpha[i] = w.kld[i] / total;
  }
  return w;
}

PoolingWeights pool_fits(std::span<const FittedDistribution> fits, const PoolingOptions& options) {
  const GlobalDistribution global = estimate_global(fits);
  const std::vector<double> p_global = global_discrete(global, options.floor);
  std::vector<std::vector<double>> locals;
  locals.reserve(fits.size());
  for (const auto& f : fits) locals.push_back(discretize(f, options.floor));
  return entropy_pooling_weights(p_global, locals, options);
}

}  // namespace dfl

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

// Global label-distribution estimation from neighbor fits and the KL-based
// attention weights used to aggregate neighbor models.

#ifndef DFL_POOLING_HPP_
#define DFL_POOLING_HPP_

#include <span>
#include <vector>

#include "dfl/distfit.hpp"

namespace dfl {

struct GlobalComponent {
  double mix_weight = 0.0;  // p_k = N_k / sum N
  FittedDistribution fit;
};

// Sample-weighted mixture of the contributing nodes' fits, in input order.
struct GlobalDistribution {
  std::vector<GlobalComponent> components;
  int n_classes = 0;
};

// Throws ConsistencyError when fits disagree on n_classes, InvalidArgumentError
// on an empty list.
GlobalDistribution estimate_global(std::span<const FittedDistribution> fits);

// sum_k p_k * discretize(fit_k), renormalized.
std::vector<double> global_discrete(const GlobalDistribution& global,
                                    double floor = kProbabilityFloor);

// KL(p_global || p_local) = sum_y P(y) (ln P(y) - ln P_k(y)), both floored at
// `floor` inside the logs; entries with P(y) = 0 contribute nothing.
// Throws ConsistencyError on a length mismatch and InvalidArgumentError when
// an argument is not a probability vector (1e-9).
double kl_divergence(std::span<const double> p_global, std::span<const double> p_local,
                     double floor = kProbabilityFloor);

struct PoolingOptions {
  double floor = kProbabilityFloor;
  // Below this total divergence every node gets 1/K.
  double zero_divergence = 1e-10;
  // Ablation only: alpha_k proportional to 1 / (KLD_k + floor).
  bool inverse = false;

  bool operator==(const PoolingOptions&) const = default;
};

struct PoolingWeights {
  std::vector<double> kld;
  std::vector<double> alpha;
  bool uniform_fallback = false;
};

// alpha_k = KLD_k / sum_j KLD_j. Negative divergences from rounding are
// clamped to 0.
PoolingWeights entropy_pooling_weights(std::span<const double> p_global,
                                       std::span<const std::vector<double>> p_locals,
                                       const PoolingOptions& options = {});

// Convenience: estimate the global distribution from `fits` and pool them.
PoolingWeights pool_fits(std::span<const FittedDistribution> fits,
                         const PoolingOptions& options = {});

}  // namespace dfl

#endif  // DFL_POOLING_HPP_

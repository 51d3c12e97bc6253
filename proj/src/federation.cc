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

#include "dfl/federation.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <exception>
#include <cmath>
#include <numeric>
#include <string>

#include "dfl/errors.hpp"

namespace dfl {

std::string to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::kFullyConnected:
      return "fully_connected";
    case TopologyKind::kRing:
      return "ring";
    case TopologyKind::kCustom:
      return "custom";
  }
  return "custom";
}

std::vector<std::size_t> Topology::neighbors(std::size_t node) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < n_nodes; ++j) {
    if (adjacency[node][j]) out.push_back(j);
  }
  return out;
}

std::vector<std::size_t> Topology::neighborhood(std::size_t node) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < n_nodes; ++j) {
    if (j == node || adjacency[node][j]) out.push_back(j);
  }
  return out;
}

void Topology::validate() const {
  if (n_nodes < 2) throw TopologyError("a federation needs at least 2 nodes");
  if (adjacency.size() != n_nodes) throw TopologyError("adjacency must have n_nodes rows");
  for (std::size_t i = 0; i < n_nodes; ++i) {
    if (adjacency[i].size() != n_nodes) throw TopologyError("adjacency must be square");
    if (adjacency[i][i]) throw TopologyError("self-loop at node " + std::to_string(i));
    bool any = false;
    for (std::size_t j = 0; j < n_nodes; ++j) {
      if (static_cast<bool>(adjacency[i][j]) != static_cast<bool>(adjacency[j][i])) {
        throw TopologyError("adjacency is not symmetric at (" + std::to_string(i) + ", " +
                            std::to_string(j) + ")");
      }
      any = any || adjacency[i][j];
    }
    if (!any) throw TopologyError("node " + std::to_string(i) + " has no neighbors");
  }
}

Topology build_topology(TopologyKind kind, std::size_t n_nodes) {
  if (n_nodes < 2) throw TopologyError("a federation needs at least 2 nodes");
  Topology t;
  t.n_nodes = n_nodes;
  t.kind = kind;
  t.adjacency.assign(n_nodes, std::vector<char>(n_nodes, 0));
  switch (kind) {
    case TopologyKind::kFullyConnected:
      for (std::size_t i = 0; i < n_nodes; ++i) {
        for (std::size_t j = 0; j < n_nodes; ++j) t.adjacency[i][j] = i != j;
      }
      break;
    case TopologyKind::kRing:
      for (std::size_t i = 0; i < n_nodes; ++i) {
        const std::size_t j = (i + 1) % n_nodes;
        t.adjacency[i][j] = 1;
        t.adjacency[j][i] = 1;
      }
      break;
    case TopologyKind::kCustom:
      throw TopologyError("custom topologies need an explicit adjacency matrix");
  }
  t.validate();
  return t;
}

Topology custom_topology(std::vector<std::vector<char>> adjacency) {
  Topology t;
  t.n_nodes = adjacency.size();
  t.adjacency = std::move(adjacency);
  t.kind = TopologyKind::kCustom;
  t.validate();
  return t;
}

std::string to_string(Aggregator aggregator) {
  switch (aggregator) {
    case Aggregator::kFedAvg:
      return "fedavg";
    case Aggregator::kFedProx:
      return "fedprox";
    case Aggregator::kFedEp:
      return "fedep";
  }
  return "fedavg";
}

Aggregator parse_aggregator(const std::string& name) {
  if (name == "fedavg") return Aggregator::kFedAvg;
  if (name == "fedprox") return Aggregator::kFedProx;
  if (name == "fedep") return Aggregator::kFedEp;
  throw InvalidArgumentError("unknown aggregator '" + name + "' (expected fedavg, fedprox or fedep)");
}

double RoundRecord::mean_f1() const {
  if (reports.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : reports) sum += r.macro_f1;
  return sum / static_cast<double>(reports.size());
}

double RoundRecord::std_f1() const {
  if (reports.empty()) return 0.0;
  const double mean = mean_f1();
  double sq = 0.0;
  for (const auto& r : reports) sq += (r.macro_f1 - mean) * (r.macro_f1 - mean);
  return std::sqrt(sq / static_cast<double>(reports.size()));
}

namespace {

// Runs fn(k) for every node in parallel. Exceptions cannot cross an OpenMP
// region, so each is captured in its node slot and the lowest node id's
// failure is rethrown after the barrier.
template <typename Fn>
void for_each_node(std::size_t n, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t k = 0; k < count; ++k) {
    try {
      fn(static_cast<std::size_t>(k));
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

void fit_local_distributions(std::vector<NodeState>& states, const Dataset& data,
                             const FitConfig& config, std::uint64_t seed) {
  for_each_node(states.size(), [&](std::size_t k) {
    NodeState& node = states[k];
    std::vector<int> labels;
    labels.reserve(node.train.size());
    for (std::size_t i : node.train) labels.push_back(data.labels[i]);
    Rng rng = Rng::for_stream(seed, node.id, StreamPurpose::kFit);
    try {
      node.fit = pretrain_distribution_fitting(labels, data.n_classes, config, rng);
      node.fit_fallback = false;
    } catch (const Error&) {
      node.fit = histogram_distribution(labels, data.n_classes);
      node.fit_fallback = true;
    }
  });
}

void phase1_exchange(std::vector<NodeState>& states, const Topology& topology) {
  if (states.size() != topology.n_nodes) {
    throw ConsistencyError("topology and node count differ");
  }
  // Payloads go over the "wire" as JSON, exactly as a remote node sees them.
  std::vector<nlohmann::ordered_json> wire(states.size());
  for (const auto& node : states) {
    if (!node.fit) {
      throw ConsistencyError("node " + std::to_string(node.id) + " has not fitted its distribution");
    }
    wire[node.id] = node.fit->to_json();
  }
  for (auto& node : states) {
    node.cache.clear();
    for (std::size_t j : topology.neighborhood(node.id)) {
      node.cache.emplace(j, FittedDistribution::from_json(wire[j]));
    }
  }
}

void compute_pooling(std::vector<NodeState>& states, const Topology& topology,
                     const PoolingOptions& options) {
  for (auto& node : states) {
    std::vector<FittedDistribution> fits;
    for (std::size_t j : topology.neighborhood(node.id)) {
      auto it = node.cache.find(j);
      if (it == node.cache.end()) {
        throw ConsistencyError("node " + std::to_string(node.id) + " has no payload from node " +
                               std::to_string(j));
      }
      fits.push_back(it->second);
    }
    node.pooling = pool_fits(fits, options);
  }
}

ModelWeights weighted_average(std::span<const ModelWeights* const> models,
                              std::span<const double> weights) {
  if (models.empty()) throw InvalidArgumentError("weighted_average: no models");
  if (models.size() != weights.size()) {
    throw ConsistencyError("weighted_average: model and weight counts differ");
  }
  const ModelWeights& first = *models.front();
  for (const ModelWeights* m : models) {
    if (m->shape != first.shape || m->values.size() != first.values.size()) {
      throw ConsistencyError("weighted_average: model shapes differ");
    }
  }
  ModelWeights out = ModelWeights::zeros(first.shape);
  auto& acc = out.values;
  for (std::size_t k = 0; k < models.size(); ++k) {
    const double a = weights[k];
    const auto& v = models[k]->values;
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += a * v[i];
  }
  return out;
}

namespace {

std::vector<const ModelWeights*> pointers(std::span<const ModelWeights> models) {
  std::vector<const ModelWeights*> out;
  out.reserve(models.size());
  for (const auto& m : models) out.push_back(&m);
  return out;
}

std::vector<double> size_weights(std::span<const std::size_t> sizes) {
  double total = 0.0;
  for (std::size_t s : sizes) total += static_cast<double>(s);
  if (!(total > 0.0)) throw InvalidArgumentError("aggregate_fedavg: sizes sum to zero");
  std::vector<double> w;
  w.reserve(sizes.size());
  for (std::size_t s : sizes) w.push_back(static_cast<double>(s) / total);
  return w;
}

void check_alpha_sum(std::span<const double> alpha) {
  const double sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConsistencyError("pooling weights sum to " + std::to_string(sum) + ", expected 1");
  }
}

}  // namespace

ModelWeights aggregate_fedavg(std::span<const ModelWeights> models,
                              std::span<const std::size_t> sizes) {
  if (models.size() != sizes.size()) {
    throw ConsistencyError("aggregate_fedavg: model and size counts differ");
  }
  return weighted_average(pointers(models), size_weights(sizes));
}

ModelWeights aggregate_fedep(std::span<const ModelWeights> models, const PoolingWeights& weights) {
  check_alpha_sum(weights.alpha);
  return weighted_average(pointers(models), weights.alpha);
}

RoundRecord run_round(std::vector<NodeState>& states, const Topology& topology,
                      const Dataset& data, const FederationOptions& options, int round) {
  if (states.size() != topology.n_nodes) throw ConsistencyError("topology and node count differ");
  if (options.aggregator == Aggregator::kFedEp) {
    for (const auto& node : states) {
      if (!node.pooling) {
        throw ConsistencyError("FedEP round before the distribution exchange (node " +
                               std::to_string(node.id) + ")");
      }
    }
  }
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = states.size();

  TrainConfig train = options.train;
  if (options.aggregator != Aggregator::kFedProx) train.mu = 0.0;

  // Local training. The round-start model is the proximal anchor.
  std::vector<ModelWeights> local(n);
  std::vector<std::string> errors(n);
  for_each_node(n, [&](std::size_t k) {
    NodeState& node = states[k];
    try {
      local[k] = train_local(node.weights, data, node.train, train, node.rng, node.weights).weights;
    } catch (const Error& e) {
      errors[k] = e.what();
    }
  });
  for (std::size_t k = 0; k < n; ++k) {
    if (!errors[k].empty()) {
      throw TrainingError("round " + std::to_string(round) + ": node " + std::to_string(k) + ": " +
                          errors[k]);
    }
  }

  // Aggregation over {self} + neighbors, after the barrier above.
  RoundRecord record;
  record.round = round;
  record.reports.resize(n);
  if (options.aggregator == Aggregator::kFedEp) record.alphas.resize(n);
  std::vector<ModelWeights> aggregated(n);
  for_each_node(n, [&](std::size_t k) {
    const auto hood = topology.neighborhood(k);
    std::vector<const ModelWeights*> models;
    for (std::size_t j : hood) models.push_back(&local[j]);
    std::vector<double> alpha;
    if (options.aggregator == Aggregator::kFedEp) {
      alpha = states[k].pooling->alpha;
    } else {
      std::vector<std::size_t> sizes;
      for (std::size_t j : hood) sizes.push_back(states[j].train.size());
      alpha = size_weights(sizes);
    }
    aggregated[k] = weighted_average(models, alpha);
    if (options.aggregator == Aggregator::kFedEp) record.alphas[k] = std::move(alpha);
  });

  for_each_node(n, [&](std::size_t k) {
    states[k].weights = std::move(aggregated[k]);
    record.reports[k] = evaluate(states[k].weights, data, states[k].test);
  });

  record.duration_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return record;
}

}  // namespace dfl

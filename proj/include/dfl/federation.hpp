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

// Synchronous decentralized federation: overlay topology, per-node state,
// neighbor model exchange and aggregation.

#ifndef DFL_FEDERATION_HPP_
#define DFL_FEDERATION_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dfl/datahub.hpp"
#include "dfl/distfit.hpp"
#include "dfl/learner.hpp"
#include "dfl/pooling.hpp"

namespace dfl {

enum class TopologyKind { kFullyConnected, kRing, kCustom };

std::string to_string(TopologyKind kind);

struct Topology {
  std::size_t n_nodes = 0;
  std::vector<std::vector<char>> adjacency;  // symmetric, no self-loops
  TopologyKind kind = TopologyKind::kCustom;

  std::vector<std::size_t> neighbors(std::size_t node) const;
  // {node} plus its neighbors, ascending by id. Aggregation and pooling
  // always iterate in this order.
  std::vector<std::size_t> neighborhood(std::size_t node) const;

  // Throws TopologyError unless the adjacency is square, symmetric, free of
  // self-loops and gives every node at least one neighbor.
  void validate() const;
};

// fully_connected: all pairs; ring: i <-> i+1 mod n. Needs n_nodes >= 2.
Topology build_topology(TopologyKind kind, std::size_t n_nodes);
Topology custom_topology(std::vector<std::vector<char>> adjacency);

enum class Aggregator { kFedAvg, kFedProx, kFedEp };

std::string to_string(Aggregator aggregator);
// "fedavg" | "fedprox" | "fedep"; throws InvalidArgumentError otherwise.
Aggregator parse_aggregator(const std::string& name);

struct NodeState {
  std::size_t id = 0;
  ModelWeights weights;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::optional<FittedDistribution> fit;
  bool fit_fallback = false;  // fit is the empirical histogram
  std::map<std::size_t, FittedDistribution> cache;  // neighborhood fits by node id
  std::optional<PoolingWeights> pooling;            // in neighborhood order
  Rng rng{0};
};

struct RoundRecord {
  int round = 0;  // 1-based
  std::vector<EvalReport> reports;           // by node id
  std::vector<std::vector<double>> alphas;   // by node id; empty unless FedEP
  double duration_ms = 0.0;

  double mean_f1() const;
  double std_f1() const;  // population std across nodes
};

struct FederationOptions {
  Aggregator aggregator = Aggregator::kFedAvg;
  TrainConfig train;
  FitConfig fit;
  PoolingOptions pooling;
};

// Phase 1, local half: every node fits its training labels. A node whose EM
// fails contributes its normalized label histogram instead.
void fit_local_distributions(std::vector<NodeState>& states, const Dataset& data,
                             const FitConfig& config, std::uint64_t seed);

// Phase 1, exchange half: each node's cache receives the JSON payload of every
// node in its neighborhood (itself included). Requires fit_local_distributions.
void phase1_exchange(std::vector<NodeState>& states, const Topology& topology);

// Pooling weights over each node's cached neighborhood. Computed once; the
// label distributions never change during training.
void compute_pooling(std::vector<NodeState>& states, const Topology& topology,
                     const PoolingOptions& options);

// sum_k weights[k] * models[k], accumulated in input order.
ModelWeights weighted_average(std::span<const ModelWeights* const> models,
                              std::span<const double> weights);

// alpha_k = N_k / sum N.
ModelWeights aggregate_fedavg(std::span<const ModelWeights> models,
                              std::span<const std::size_t> sizes);

// Throws ConsistencyError unless sum alpha = 1 within 1e-9.
ModelWeights aggregate_fedep(std::span<const ModelWeights> models, const PoolingWeights& weights);

// Train every node, barrier, aggregate over each neighborhood, evaluate on
// each node's test slice. Node work runs in parallel; results land in
// node-ordered slots so the outcome is independent of the thread count.
// Throws TrainingError naming the node if local training fails.
RoundRecord run_round(std::vector<NodeState>& states, const Topology& topology,
                      const Dataset& data, const FederationOptions& options, int round);

}  // namespace dfl

#endif  // DFL_FEDERATION_HPP_

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

// End-to-end experiment driver and its CSV / JSON outputs.

#ifndef DFL_EXPERIMENT_HPP_
#define DFL_EXPERIMENT_HPP_

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dfl/config.hpp"
#include "dfl/datahub.hpp"
#include "dfl/federation.hpp"

namespace dfl {

struct ExperimentResult {
  ExperimentConfig config;
  std::shared_ptr<const Dataset> data;
  Partition partition;
  Topology topology;
  ModelWeights initial_model;  // shared by every node before round 1
  std::vector<NodeState> nodes;  // state after the last round
  std::vector<RoundRecord> records;
  double total_ms = 0.0;
};

// Dataset named by the config, including the seeded subset when max_samples
// is set. Same config and seed give the same dataset.
Dataset build_dataset(const ExperimentConfig& config);

// Builds data, partition, topology and the initial model, runs the
// distribution exchange (FedEP), then config.rounds rounds. `on_round` is
// called after each round. Deterministic in (config, seed) for any thread
// count.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::function<void(const RoundRecord&)>& on_round = {});

// round,node_id,f1,loss,alpha,duration_ms. alpha is the ';'-joined pooling
// vector over the node's neighborhood (empty unless FedEP); duration_ms is
// left empty unless timing was requested, so reruns stay byte-identical.
std::string rounds_csv(const std::vector<RoundRecord>& records, bool with_timing);

// Config echo, per-round mean/std F1, per-node fits and the final alpha
// matrix (rows: aggregating node, columns: node id).
nlohmann::ordered_json summary_json(const ExperimentResult& result);

// Shortest round-trip decimal form; used for every number in the CSV.
std::string format_double(double value);

}  // namespace dfl

#endif  // DFL_EXPERIMENT_HPP_

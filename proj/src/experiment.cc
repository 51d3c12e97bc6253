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

#include "dfl/experiment.hpp"

#include <charconv>
#include <chrono>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "dfl/errors.hpp"
#include "dfl/kernels.hpp"

namespace dfl {

namespace {

class ThreadScope {
 public:
  explicit ThreadScope(int threads) : previous_(kernels::num_threads()) {
    if (threads > 0) kernels::set_num_threads(threads);
  }
  ~ThreadScope() { kernels::set_num_threads(previous_); }

  ThreadScope(const ThreadScope&) = delete;
  ThreadScope& operator=(const ThreadScope&) = delete;

 private:
  int previous_;
};

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

Dataset build_dataset(const ExperimentConfig& config) {
  const auto& d = config.dataset;
  Dataset data;
  if (d.kind == DatasetKind::kIdx) {
    data = load_idx_dataset(d.images, d.labels);
  } else {
    Rng rng = Rng::for_stream(config.seed, kFederationStream, StreamPurpose::kSynthetic);
    data = make_synthetic(rng, d.n_classes, d.n_per_class, d.n_features, d.spread);
  }
  if (d.max_samples > 0 && d.max_samples < data.size()) {
    Rng rng = Rng::for_stream(config.seed, kFederationStream, StreamPurpose::kSubset);
    data = random_subset(data, d.max_samples, rng);
  }
  return data;
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::function<void(const RoundRecord&)>& on_round) {
  config.validate();
  ThreadScope threads(config.threads);
  const auto start = std::chrono::steady_clock::now();

  ExperimentResult result;
  result.config = config;
  auto data = std::make_shared<Dataset>(build_dataset(config));
  result.data = data;
  const std::size_t n = config.n_nodes;
  if (data->size() < 2 * n) {
    throw ConfigError("dataset has " + std::to_string(data->size()) + " samples, too few for " +
                      std::to_string(n) + " nodes");
  }

  // With a global test set the held-out part is carved off first and only
  // the rest is partitioned.
  std::vector<std::size_t> pool = iota_indices(data->size());
  std::vector<std::size_t> global_test;
  if (config.global_test_set) {
    Rng rng = Rng::for_stream(config.seed, kFederationStream, StreamPurpose::kSplit);
    NodeSplit split = split_node(rng, *data, pool, config.partition.test_fraction);
    pool = std::move(split.train);
    global_test = std::move(split.test);
  }
  const Dataset pool_data = config.global_test_set ? subset(*data, pool) : Dataset{};
  const Dataset& part_source = config.global_test_set ? pool_data : *data;

  Rng part_rng = Rng::for_stream(config.seed, kFederationStream, StreamPurpose::kPartition);
  if (config.partition.kind == PartitionKind::kIid) {
    result.partition = iid_partition(part_rng, part_source, n);
  } else {
    result.partition = dirichlet_partition(part_rng, part_source, {n, config.partition.groups});
  }
  if (config.global_test_set) {
    for (auto& node : result.partition.assignments) {
      for (auto& i : node) i = pool[i];
    }
  }

  result.topology = config.topology == TopologyKind::kCustom
                        ? custom_topology(config.adjacency)
                        : build_topology(config.topology, n);

  MlpShape shape{data->n_features(), config.hidden, static_cast<std::size_t>(data->n_classes)};
  Rng init_rng = Rng::for_stream(config.seed, kFederationStream, StreamPurpose::kModelInit);
  result.initial_model = init_weights(shape, init_rng);

  result.nodes.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    NodeState& node = result.nodes[k];
    node.id = k;
    node.weights = result.initial_model;
    node.rng = Rng::for_stream(config.seed, k, StreamPurpose::kTrain);
    const auto& assigned = result.partition.assignments[k];
    if (config.global_test_set) {
      node.train = assigned;
      node.test = global_test;
    } else {
      if (assigned.size() < 2) {
        throw PartitionError("node " + std::to_string(k) + " holds " +
                             std::to_string(assigned.size()) +
                             " samples; a train/test split needs at least 2");
      }
      Rng split_rng = Rng::for_stream(config.seed, k, StreamPurpose::kSplit);
      NodeSplit split = split_node(split_rng, *data, assigned, config.partition.test_fraction);
      node.train = std::move(split.train);
      node.test = std::move(split.test);
    }
  }

  FederationOptions options;
  options.aggregator = config.aggregator;
  options.train = config.train;
  if (config.aggregator == Aggregator::kFedProx && options.train.mu == 0.0) {
    options.train.mu = kDefaultProximalMu;
  }
  options.fit = config.fit;
  options.pooling.inverse = config.inverse_pooling;

  if (config.aggregator == Aggregator::kFedEp) {
    fit_local_distributions(result.nodes, *data, config.fit, config.seed);
    for (const auto& node : result.nodes) {
      if (node.fit_fallback) {
        spdlog::warn("node {}: EM fit failed, sharing its label histogram instead", node.id);
      }
    }
    phase1_exchange(result.nodes, result.topology);
    compute_pooling(result.nodes, result.topology, options.pooling);
  }

  for (int r = 1; r <= config.rounds; ++r) {
    RoundRecord record = run_round(result.nodes, result.topology, *data, options, r);
    spdlog::debug("round {}: mean F1 {:.4f}", r, record.mean_f1());
    if (on_round) on_round(record);
    result.records.push_back(std::move(record));
  }
  result.total_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw NumericError("cannot format number");
  return std::string(buf, end);
}

std::string rounds_csv(const std::vector<RoundRecord>& records, bool with_timing) {
  std::ostringstream os;
  os << "round,node_id,f1,loss,alpha,duration_ms\n";
  for (const auto& rec : records) {
    for (std::size_t k = 0; k < rec.reports.size(); ++k) {
      const auto& rep = rec.reports[k];
      os << rec.round << ',' << k << ',' << format_double(rep.macro_f1) << ','
         << format_double(rep.loss) << ',';
      if (k < rec.alphas.size()) {
        for (std::size_t j = 0; j < rec.alphas[k].size(); ++j) {
          if (j) os << ';';
          os << format_double(rec.alphas[k][j]);
        }
      }
      os << ',';
      if (with_timing) os << format_double(rec.duration_ms);
      os << '\n';
    }
  }
  return os.str();
}

nlohmann::ordered_json summary_json(const ExperimentResult& result) {
  nlohmann::ordered_json j;
  j["config"] = to_json(result.config);
  j["n_samples"] = result.data ? result.data->size() : 0;
  j["node_sizes"] = result.partition.sizes();

  auto& rounds = j["rounds"] = nlohmann::ordered_json::array();
  for (const auto& rec : result.records) {
    nlohmann::ordered_json r;
    r["round"] = rec.round;
    r["mean_f1"] = rec.mean_f1();
    r["std_f1"] = rec.std_f1();
    if (result.config.record_timing) r["duration_ms"] = rec.duration_ms;
    rounds.push_back(std::move(r));
  }
  if (!result.records.empty()) {
    j["final_mean_f1"] = result.records.back().mean_f1();
    j["final_std_f1"] = result.records.back().std_f1();
  } else {
    j["final_mean_f1"] = nullptr;
    j["final_std_f1"] = nullptr;
  }

  auto& fits = j["fits"] = nlohmann::ordered_json::array();
  for (const auto& node : result.nodes) {
    if (!node.fit) continue;
    fits.push_back({{"node_id", node.id},
                    {"components", node.fit->params.size()},
                    {"fallback", node.fit_fallback}});
  }

  // n x n, zero outside each node's neighborhood.
  if (result.config.aggregator == Aggregator::kFedEp) {
    const std::size_t n = result.nodes.size();
    auto& alpha = j["alpha"] = nlohmann::ordered_json::array();
    for (const auto& node : result.nodes) {
      std::vector<double> row(n, 0.0);
      if (node.pooling) {
        const auto hood = result.topology.neighborhood(node.id);
        for (std::size_t i = 0; i < hood.size(); ++i) row[hood[i]] = node.pooling->alpha[i];
      }
      alpha.push_back(row);
    }
  } else {
    j["alpha"] = nullptr;
  }
  if (result.config.record_timing) j["total_ms"] = result.total_ms;
  return j;
}

}  // namespace dfl

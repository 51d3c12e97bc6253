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

// Experiment configuration: the JSON schema read by the command-line tool.

#ifndef DFL_CONFIG_HPP_
#define DFL_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dfl/datahub.hpp"
#include "dfl/distfit.hpp"
#include "dfl/federation.hpp"
#include "dfl/learner.hpp"

namespace dfl {

enum class DatasetKind { kSynthetic, kIdx };

struct DatasetConfig {
  DatasetKind kind = DatasetKind::kSynthetic;
  // idx: absolute after parsing (relative paths resolve against the config
  // file's directory).
  std::string images;
  std::string labels;
  std::size_t max_samples = 0;  // 0 keeps everything; otherwise a seeded subset

  // synthetic
  int n_classes = 10;
  std::size_t n_per_class = 100;
  std::size_t n_features = 32;
  double spread = 0.15;

  bool operator==(const DatasetConfig&) const = default;
};

enum class PartitionKind { kDirichlet, kIid };

struct PartitionConfig {
  PartitionKind kind = PartitionKind::kDirichlet;
  std::vector<DirichletGroup> groups = {{1.0, 1.0}};
  double test_fraction = 0.2;

  bool operator==(const PartitionConfig&) const = default;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  PartitionConfig partition;
  std::size_t n_nodes = 10;
  TopologyKind topology = TopologyKind::kFullyConnected;
  std::vector<std::vector<char>> adjacency;  // custom topology only
  int rounds = 10;
  Aggregator aggregator = Aggregator::kFedAvg;
  TrainConfig train;
  std::vector<std::size_t> hidden = {256, 128};
  FitConfig fit;
  bool inverse_pooling = false;
  bool global_test_set = false;  // one shared held-out set instead of per-node splits
  bool record_timing = false;    // fill the duration_ms column
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = OpenMP default
  std::string output_dir = "out";

  // Throws ConfigError naming the offending field.
  void validate() const;

  bool operator==(const ExperimentConfig&) const = default;
};

// FedProx strength used when the aggregator is fedprox and train.mu is 0.
inline constexpr double kDefaultProximalMu = 0.01;

// Parses and validates. Unknown keys are rejected with their full paths.
// Relative dataset paths resolve against `base_dir`.
ExperimentConfig parse_config_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
ExperimentConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir);
ExperimentConfig parse_config(const std::filesystem::path& path);

// Every field, defaults included; parse_config_json(to_json(c)) == c.
nlohmann::ordered_json to_json(const ExperimentConfig& config);

std::string to_string(DatasetKind kind);

}  // namespace dfl

#endif  // DFL_CONFIG_HPP_

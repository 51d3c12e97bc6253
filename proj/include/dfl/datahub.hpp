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

// Dataset ingestion and non-IID partitioning across federation nodes.

#ifndef DFL_DATAHUB_HPP_
#define DFL_DATAHUB_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dfl/numkit.hpp"

namespace dfl {

struct Dataset {
  Matrix features;  // n_samples x n_features, values in [0, 1]
  std::vector<int> labels;
  int n_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t n_features() const { return features.cols(); }

  // Throws ConsistencyError when the invariants do not hold.
  void validate() const;
};

// Reads an IDX image tensor (magic 0x00000803) and label vector (magic
// 0x00000801). Files may be gzip-compressed; plain files are read as-is.
// Pixels are divided by 255. n_classes is max(label) + 1, at least 2.
Dataset load_idx_dataset(const std::filesystem::path& images_path,
                         const std::filesystem::path& labels_path);

// Writes the dataset back as uncompressed IDX (pixels rounded to bytes).
// Images are stored as n x 1 x n_features when the width is not a square.
void save_idx_dataset(const Dataset& dataset, const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path);

// Gaussian blobs around fixed per-class centers in [0.1, 0.9]^n_features,
// clamped to [0, 1]. Samples are ordered class by class.
Dataset make_synthetic(Rng& rng, int n_classes, std::size_t n_per_class,
                       std::size_t n_features, double cluster_spread);

// Rows `indices` of `dataset`, in that order.
Dataset subset(const Dataset& dataset, std::span<const std::size_t> indices);

// Uniform random subset of `count` samples (without replacement), kept in
// ascending index order.
Dataset random_subset(const Dataset& dataset, std::size_t count, Rng& rng);

std::vector<std::size_t> label_histogram(std::span<const int> labels, int n_classes);

struct DirichletGroup {
  double node_fraction = 1.0;
  double alpha = 1.0;

  bool operator==(const DirichletGroup&) const = default;
};

struct PartitionSpec {
  std::size_t n_nodes = 0;
  std::vector<DirichletGroup> groups;

  static PartitionSpec pure(std::size_t n_nodes, double alpha) {
    return {n_nodes, {{1.0, alpha}}};
  }

  // Throws InvalidArgumentError when fractions do not sum to 1 (1e-9) or an
  // alpha is not positive.
  void validate() const;

  // Dirichlet concentration of every node. Group g owns the next
  // ceil(fraction_g * n_nodes) node ids, in config order.
  std::vector<double> node_alphas() const;
};

struct Partition {
  std::vector<std::vector<std::size_t>> assignments;  // per node, sample indices

  std::size_t n_nodes() const { return assignments.size(); }
  std::vector<std::size_t> sizes() const;

  // Throws PartitionError unless the assignments are an exact set partition
  // of [0, n_samples) with no empty node.
  void validate(std::size_t n_samples) const;

  // {"0": [indices...], "1": [...], ...}
  std::string to_json() const;
  static Partition from_json(const std::string& text);
};

// Symmetric Dirichlet draw of dimension k via normalized Gamma draws.
std::vector<double> sample_dirichlet(Rng& rng, double alpha, std::size_t k);

// Var(p_i) of a symmetric Dir(alpha * 1_k): (k - 1) / (k^2 (k alpha + 1)).
double dirichlet_variance(double alpha, std::size_t k);

// Per-node label proportions drawn from each node's Dirichlet; node sizes are
// an equal split of the dataset. Each node takes its largest-remainder class
// quota from shuffled class pools; shortfalls from exhausted pools are filled
// from the remaining classes in decreasing order of the node's proportions.
Partition dirichlet_partition(Rng& rng, const Dataset& dataset, const PartitionSpec& spec);

// Stratified round-robin split: every node receives the same class counts
// whenever each class size is divisible by n_nodes.
Partition iid_partition(Rng& rng, const Dataset& dataset, std::size_t n_nodes);

struct NodeSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Holds out `test_fraction` of a node's samples per class (largest remainder),
// keeping at least one sample on each side. Needs at least two samples.
NodeSplit split_node(Rng& rng, const Dataset& dataset, std::span<const std::size_t> indices,
                     double test_fraction);

}  // namespace dfl

#endif  // DFL_DATAHUB_HPP_

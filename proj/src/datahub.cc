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

#include "dfl/datahub.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <nlohmann/json.hpp>

#include "dfl/errors.hpp"

namespace dfl {

void Dataset::validate() const {
  if (n_classes < 2) throw ConsistencyError("dataset needs at least 2 classes");
  if (features.rows() != labels.size()) {
    throw ConsistencyError("feature rows " + std::to_string(features.rows()) +
                           " != label count " + std::to_string(labels.size()));
  }
  for (int l : labels) {
    if (l < 0 || l >= n_classes) {
      throw ConsistencyError("label " + std::to_string(l) + " outside [0, " +
                             std::to_string(n_classes) + ")");
    }
  }
}

Dataset make_synthetic(Rng& rng, int n_classes, std::size_t n_per_class,
                       std::size_t n_features, double cluster_spread) {
  if (n_classes < 2) throw InvalidArgumentError("make_synthetic: n_classes must be >= 2");
  if (n_per_class < 1 || n_features < 1) {
    throw InvalidArgumentError("make_synthetic: counts must be >= 1");
  }
  if (!std::isfinite(cluster_spread) || cluster_spread < 0.0) {
    throw InvalidArgumentError("make_synthetic: cluster_spread must be finite and >= 0");
  }
  // Centers depend only on (class, feature). Feature 0 spaces the classes
  // evenly so centers are always distinct.
  Matrix centers(static_cast<std::size_t>(n_classes), n_features);
  for (int c = 0; c < n_classes; ++c) {
    centers(c, 0) = 0.1 + 0.8 * (c + 0.5) / n_classes;
    for (std::size_t j = 1; j < n_features; ++j) {
      const std::uint64_t h = derive_seed(static_cast<std::uint64_t>(c), j, StreamPurpose::kSynthetic);
      centers(c, j) = 0.1 + 0.8 * static_cast<double>(h >> 11) * 0x1.0p-53;
    }
  }

  Dataset ds;
  ds.n_classes = n_classes;
  ds.features = Matrix(static_cast<std::size_t>(n_classes) * n_per_class, n_features);
  ds.labels.reserve(ds.features.rows());
  std::size_t r = 0;
  for (int c = 0; c < n_classes; ++c) {
    for (std::size_t i = 0; i < n_per_class; ++i, ++r) {
      for (std::size_t j = 0; j < n_features; ++j) {
        ds.features(r, j) = std::clamp(centers(c, j) + cluster_spread * rng.normal(), 0.0, 1.0);
      }
      ds.labels.push_back(c);
    }
  }
  return ds;
}

Dataset subset(const Dataset& dataset, std::span<const std::size_t> indices) {
  Dataset out;
  out.n_classes = dataset.n_classes;
  out.features = Matrix(indices.size(), dataset.n_features());
  out.labels.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = dataset.features.row(indices[i]);
    std::copy(src.begin(), src.end(), out.features.row(i).begin());
    out.labels.push_back(dataset.labels[indices[i]]);
  }
  return out;
}

Dataset random_subset(const Dataset& dataset, std::size_t count, Rng& rng) {
  if (count > dataset.size()) {
    throw InvalidArgumentError("random_subset: requested " + std::to_string(count) +
                               " samples from a dataset of " + std::to_string(dataset.size()));
  }
  std::vector<std::size_t> idx(dataset.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  shuffle(std::span(idx), rng);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return subset(dataset, idx);
}

std::vector<std::size_t> label_histogram(std::span<const int> labels, int n_classes) {
  std::vector<std::size_t> hist(static_cast<std::size_t>(n_classes), 0);
  for (int l : labels) ++hist.at(static_cast<std::size_t>(l));
  return hist;
}

void PartitionSpec::validate() const {
  if (n_nodes < 1) throw InvalidArgumentError("partition: n_nodes must be >= 1");
  if (groups.empty()) throw InvalidArgumentError("partition: at least one group required");
  double total = 0.0;
  for (const auto& g : groups) {
    if (!(g.node_fraction > 0.0 && g.node_fraction <= 1.0)) {
      throw InvalidArgumentError("partition: node_fraction must be in (0, 1]");
    }
    if (!(g.alpha > 0.0) || !std::isfinite(g.alpha)) {
      throw InvalidArgumentError("partition: dirichlet alpha must be positive and finite");
    }
    total += g.node_fraction;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidArgumentError("partition: node fractions sum to " + std::to_string(total) +
                               ", expected 1");
  }
}

std::vector<double> PartitionSpec::node_alphas() const {
  validate();
  std::vector<double> alphas;
  alphas.reserve(n_nodes);
  for (const auto& g : groups) {
    const auto want = static_cast<std::size_t>(
        std::ceil(g.node_fraction * static_cast<double>(n_nodes) - 1e-9));
    for (std::size_t i = 0; i < want && alphas.size() < n_nodes; ++i) alphas.push_back(g.alpha);
  }
  // Rounding can leave trailing nodes unassigned; they join the last group.
  while (alphas.size() < n_nodes) alphas.push_back(groups.back().alpha);
  return alphas;
}

std::vector<std::size_t> Partition::sizes() const {
  std::vector<std::size_t> out;
  out.reserve(assignments.size());
  for (const auto& a : assignments) out.push_back(a.size());
  return out;
}

void Partition::validate(std::size_t n_samples) const {
  std::vector<char> seen(n_samples, 0);
  std::size_t total = 0;
  for (std::size_t k = 0; k < assignments.size(); ++k) {
    if (assignments[k].empty()) {
      throw PartitionError("node " + std::to_string(k) + " has no samples");
    }
    for (std::size_t i : assignments[k]) {
      if (i >= n_samples) throw PartitionError("index " + std::to_string(i) + " out of range");
      if (seen[i]) throw PartitionError("index " + std::to_string(i) + " assigned twice");
      seen[i] = 1;
      ++total;
    }
  }
  if (total != n_samples) {
    throw PartitionError("partition covers " + std::to_string(total) + " of " +
                         std::to_string(n_samples) + " samples");
  }
}

std::string Partition::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t k = 0; k < assignments.size(); ++k) j[std::to_string(k)] = assignments[k];
  return j.dump();
}

Partition Partition::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("partition JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("partition JSON must be an object");
  Partition p;
  p.assignments.resize(j.size());
  for (const auto& [key, value] : j.items()) {
    std::size_t node = 0;
    try {
      std::size_t used = 0;
      node = std::stoul(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw FormatError("partition JSON: node key '" + key + "' is not an integer");
    }
    if (node >= p.assignments.size()) {
      throw FormatError("partition JSON: node ids must be 0.." +
                        std::to_string(p.assignments.size() - 1));
    }
    try {
      p.assignments[node] = value.get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("partition JSON: node " + key + ": " + e.what());
    }
  }
  return p;
}

std::vector<double> sample_dirichlet(Rng& rng, double alpha, std::size_t k) {
  std::vector<double> p(k);
  double sum = 0.0;
  for (auto& v : p) {
    v = sample_gamma(rng, alpha);
    sum += v;
  }
  if (sum <= 0.0) {
    // Every Gamma draw underflowed (tiny alpha); fall back to a random vertex.
    std::fill(p.begin(), p.end(), 0.0);
    p[rng.uniform_index(k)] = 1.0;
    return p;
  }
  for (auto& v : p) v /= sum;
  return p;
}

double dirichlet_variance(double alpha, std::size_t k) {
  if (!(alpha > 0.0) || k < 2) {
    throw InvalidArgumentError("dirichlet_variance: need alpha > 0 and k >= 2");
  }
  const double kd = static_cast<double>(k);
  if (std::isinf(alpha)) return 0.0;
  return (kd - 1.0) / (kd * kd * (kd * alpha + 1.0));
}

namespace {

// Splits total into integer parts proportional to weights. Leftover units
// go to the largest fractional remainders; ties favor the lower index.
std::vector<std::size_t> largest_remainder(std::span<const double> weights, std::size_t total) {
  const std::size_t k = weights.size();
  std::vector<std::size_t> out(k);
  std::vector<std::pair<double, std::size_t>> rem(k);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const double exact = weights[c] * static_cast<double>(total);
    out[c] = static_cast<std::size_t>(std::floor(exact));
    rem[c] = {exact - static_cast<double>(out[c]), c};
    assigned += out[c];
  }
  // Floating error can push the floors past total.
  while (assigned > total) {
    auto it = std::max_element(out.begin(), out.end());
    --*it;
    --assigned;
  }
  std::stable_sort(rem.begin(), rem.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total; i = (i + 1) % k) {
    ++out[rem[i].second];
    ++assigned;
  }
  return out;
}

std::vector<std::vector<std::size_t>> class_pools(Rng& rng, const Dataset& dataset) {
  std::vector<std::vector<std::size_t>> pools(static_cast<std::size_t>(dataset.n_classes));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    pools[static_cast<std::size_t>(dataset.labels[i])].push_back(i);
  }
  for (auto& pool : pools) shuffle(std::span(pool), rng);
  return pools;
}

}  // namespace

Partition dirichlet_partition(Rng& rng, const Dataset& dataset, const PartitionSpec& spec) {
  dataset.validate();
  const std::vector<double> alphas = spec.node_alphas();
  const std::size_t n_nodes = spec.n_nodes;
  const std::size_t n = dataset.size();
  if (n < n_nodes) {
    throw PartitionError("cannot split " + std::to_string(n) + " samples across " +
                         std::to_string(n_nodes) + " nodes");
  }
  const auto n_classes = static_cast<std::size_t>(dataset.n_classes);
  auto pools = class_pools(rng, dataset);

  Partition part;
  part.assignments.resize(n_nodes);
  for (std::size_t k = 0; k < n_nodes; ++k) {
    const std::size_t size = n / n_nodes + (k < n % n_nodes ? 1 : 0);
    const std::vector<double> p = sample_dirichlet(rng, alphas[k], n_classes);
    const std::vector<std::size_t> quota = largest_remainder(p, size);

    auto& mine = part.assignments[k];
    mine.reserve(size);
    auto take = [&](std::size_t c, std::size_t count) {
      auto& pool = pools[c];
      const std::size_t got = std::min(count, pool.size());
      mine.insert(mine.end(), pool.end() - static_cast<std::ptrdiff_t>(got), pool.end());
      pool.resize(pool.size() - got);
      return got;
    };

    std::size_t shortfall = 0;
    for (std::size_t c = 0; c < n_classes; ++c) shortfall += quota[c] - take(c, quota[c]);

    if (shortfall > 0) {
      std::vector<std::size_t> order(n_classes);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
      for (std::size_t c : order) {
        if (shortfall == 0) break;
        shortfall -= take(c, shortfall);
      }
    }
  }

  // Equal sizes make this unreachable when n >= n_nodes; kept for custom sizes.
  for (auto& node : part.assignments) {
    if (!node.empty()) continue;
    auto largest = std::max_element(part.assignments.begin(), part.assignments.end(),
                                    [](const auto& a, const auto& b) { return a.size() < b.size(); });
    if (largest->size() < 2) throw PartitionError("no node can spare a sample");
    node.push_back(largest->back());
    largest->pop_back();
  }

  for (auto& node : part.assignments) std::sort(node.begin(), node.end());
  part.validate(n);
  return part;
}

Partition iid_partition(Rng& rng, const Dataset& dataset, std::size_t n_nodes) {
  dataset.validate();
  if (n_nodes < 1 || dataset.size() < n_nodes) {
    throw PartitionError("cannot split " + std::to_string(dataset.size()) + " samples across " +
                         std::to_string(n_nodes) + " nodes");
  }
  auto pools = class_pools(rng, dataset);
  Partition part;
  part.assignments.resize(n_nodes);
  std::size_t next = 0;
  for (const auto& pool : pools) {
    for (std::size_t i : pool) {
      part.assignments[next].push_back(i);
      next = (next + 1) % n_nodes;
    }
  }
  for (auto& node : part.assignments) std::sort(node.begin(), node.end());
  part.validate(dataset.size());
  return part;
}

NodeSplit split_node(Rng& rng, const Dataset& dataset, std::span<const std::size_t> indices,
                     double test_fraction) {
  if (indices.size() < 2) {
    throw PartitionError("a node needs at least 2 samples to hold out a test set");
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InvalidArgumentError("test_fraction must be in (0, 1)");
  }
  const auto n_classes = static_cast<std::size_t>(dataset.n_classes);
  std::vector<std::vector<std::size_t>> by_class(n_classes);
  for (std::size_t i : indices) by_class[static_cast<std::size_t>(dataset.labels[i])].push_back(i);

  const std::size_t n = indices.size();
  const auto target = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n))), 1, n - 1);
  std::vector<double> shares(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    shares[c] = static_cast<double>(by_class[c].size()) / static_cast<double>(n);
  }
  const std::vector<std::size_t> quota = largest_remainder(shares, target);

  NodeSplit split;
  for (std::size_t c = 0; c < n_classes; ++c) {
    auto& pool = by_class[c];
    shuffle(std::span(pool), rng);
    const std::size_t t = std::min(quota[c], pool.size());
    split.test.insert(split.test.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(t));
    split.train.insert(split.train.end(), pool.begin() + static_cast<std::ptrdiff_t>(t), pool.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

}  // namespace dfl

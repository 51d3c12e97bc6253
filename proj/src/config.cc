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

#include "dfl/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <utility>

#include "dfl/errors.hpp"

namespace dfl {

namespace {

using nlohmann::json;

std::string join_path(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

// Walks one JSON object. Every key read is marked; whatever is left over when
// the reader finishes is reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path, std::vector<std::string>& unknown)
      : j_(j), path_(std::move(path)), unknown_(unknown) {
    if (!j_.is_object()) throw ConfigError(label() + ": expected an object");
  }

  ~ObjectReader() {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) unknown_.push_back(join_path(path_, key));
    }
  }

  ObjectReader(const ObjectReader&) = delete;
  ObjectReader& operator=(const ObjectReader&) = delete;

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* take(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string field(const std::string& key) const { return join_path(path_, key); }

  void read(const std::string& key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) fail(key, "expected a number");
      out = v->get<double>();
    }
  }

  void read(const std::string& key, int& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) fail(key, "expected an integer");
      const auto x = v->get<std::int64_t>();
      if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
        fail(key, "out of range");
      }
      out = static_cast<int>(x);
    }
  }

  void read(const std::string& key, std::size_t& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer() || v->get<std::int64_t>() < 0) {
        fail(key, "expected a non-negative integer");
      }
      out = v->get<std::size_t>();
    }
  }

  void read(const std::string& key, std::uint64_t& out, bool /*unsigned64*/) {
    if (const json* v = take(key)) {
      if (!v->is_number_unsigned()) fail(key, "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void read(const std::string& key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) fail(key, "expected true or false");
      out = v->get<bool>();
    }
  }

  void read(const std::string& key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) fail(key, "expected a string");
      out = v->get<std::string>();
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(field(key) + ": " + what);
  }

 private:
  std::string label() const { return path_.empty() ? "config" : path_; }

  const json& j_;
  std::string path_;
  std::vector<std::string>& unknown_;
  std::set<std::string> seen_;
};

std::string require_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path + ": expected a string");
  return v.get<std::string>();
}

void read_dataset(const json& j, const std::filesystem::path& base_dir, DatasetConfig& d,
                  std::vector<std::string>& unknown) {
  ObjectReader r(j, "dataset", unknown);
  std::string kind = to_string(d.kind);
  r.read("kind", kind);
  if (kind == "synthetic") {
    d.kind = DatasetKind::kSynthetic;
  } else if (kind == "idx") {
    d.kind = DatasetKind::kIdx;
  } else {
    r.fail("kind", "expected \"synthetic\" or \"idx\", got \"" + kind + "\"");
  }
  r.read("images", d.images);
  r.read("labels", d.labels);
  for (std::string* p : {&d.images, &d.labels}) {
    if (!p->empty()) {
      std::filesystem::path path(*p);
      if (path.is_relative()) path = base_dir / path;
      *p = std::filesystem::absolute(path).lexically_normal().string();
    }
  }
  r.read("max_samples", d.max_samples);
  r.read("n_classes", d.n_classes);
  r.read("n_per_class", d.n_per_class);
  r.read("n_features", d.n_features);
  r.read("spread", d.spread);
}

void read_partition(const json& j, PartitionConfig& p, std::vector<std::string>& unknown) {
  ObjectReader r(j, "partition", unknown);
  std::string kind = p.kind == PartitionKind::kIid ? "iid" : "dirichlet";
  r.read("kind", kind);
  if (kind == "dirichlet") {
    p.kind = PartitionKind::kDirichlet;
  } else if (kind == "iid") {
    p.kind = PartitionKind::kIid;
  } else {
    r.fail("kind", "expected \"dirichlet\" or \"iid\", got \"" + kind + "\"");
  }
  if (r.has("alpha") && r.has("groups")) {
    r.fail("alpha", "give either alpha or groups, not both");
  }
  if (r.has("alpha")) {
    double alpha = 0.0;
    r.read("alpha", alpha);
    p.groups = {{1.0, alpha}};
  }
  if (const json* groups = r.take("groups")) {
    if (!groups->is_array() || groups->empty()) {
      r.fail("groups", "expected a non-empty array");
    }
    p.groups.clear();
    for (std::size_t i = 0; i < groups->size(); ++i) {
      ObjectReader g((*groups)[i], "partition.groups[" + std::to_string(i) + "]", unknown);
      DirichletGroup group;
      g.read("fraction", group.node_fraction);
      g.read("alpha", group.alpha);
      if (!g.has("alpha")) g.fail("alpha", "missing");
      p.groups.push_back(group);
    }
  }
  r.read("test_fraction", p.test_fraction);
}

void read_train(const json& j, ExperimentConfig& c, std::vector<std::string>& unknown) {
  ObjectReader r(j, "train", unknown);
  r.read("epochs", c.train.epochs);
  r.read("batch_size", c.train.batch_size);
  r.read("learning_rate", c.train.learning_rate);
  r.read("mu", c.train.mu);
  if (const json* hidden = r.take("hidden")) {
    if (!hidden->is_array()) r.fail("hidden", "expected an array of layer widths");
    c.hidden.clear();
    for (const auto& h : *hidden) {
      if (!h.is_number_integer() || h.get<std::int64_t>() <= 0) {
        r.fail("hidden", "layer widths must be positive integers");
      }
      c.hidden.push_back(h.get<std::size_t>());
    }
  }
}

void read_fit(const json& j, FitConfig& f, std::vector<std::string>& unknown) {
  ObjectReader r(j, "fit", unknown);
  r.read("rho", f.rho);
  r.read("max_iterations", f.max_iterations);
  r.read("tolerance", f.tolerance);
  r.read("variance_floor", f.variance_floor);
  r.read("restarts", f.n_restarts);
}

void read_flags(const json& j, ExperimentConfig& c, std::vector<std::string>& unknown) {
  ObjectReader r(j, "flags", unknown);
  r.read("inverse_pooling", c.inverse_pooling);
  r.read("bic_standard", c.fit.bic_standard);
  r.read("global_test_set", c.global_test_set);
  r.read("record_timing", c.record_timing);
}

std::vector<std::vector<char>> read_adjacency(const json& j) {
  const std::string path = "adjacency";
  if (!j.is_array()) throw ConfigError(path + ": expected a square 0/1 matrix");
  std::vector<std::vector<char>> adj;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& row = j[i];
    if (!row.is_array()) throw ConfigError(path + "[" + std::to_string(i) + "]: expected a row");
    std::vector<char> out;
    for (const auto& v : row) {
      if (v.is_boolean()) {
        out.push_back(v.get<bool>() ? 1 : 0);
      } else if (v.is_number_integer() && (v.get<int>() == 0 || v.get<int>() == 1)) {
        out.push_back(static_cast<char>(v.get<int>()));
      } else {
        throw ConfigError(path + "[" + std::to_string(i) + "]: entries must be 0 or 1");
      }
    }
    adj.push_back(std::move(out));
  }
  return adj;
}

void check(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field + ": " + what);
}

}  // namespace

std::string to_string(DatasetKind kind) {
  return kind == DatasetKind::kIdx ? "idx" : "synthetic";
}

void ExperimentConfig::validate() const {
  const auto& d = dataset;
  if (d.kind == DatasetKind::kIdx) {
    check(!d.images.empty(), "dataset.images", "required for idx datasets");
    check(!d.labels.empty(), "dataset.labels", "required for idx datasets");
    check(std::filesystem::exists(d.images), "dataset.images", "no such file: " + d.images);
    check(std::filesystem::exists(d.labels), "dataset.labels", "no such file: " + d.labels);
  } else {
    check(d.n_classes >= 2, "dataset.n_classes", "must be at least 2");
    check(d.n_per_class >= 1, "dataset.n_per_class", "must be positive");
    check(d.n_features >= 1, "dataset.n_features", "must be positive");
    check(std::isfinite(d.spread) && d.spread >= 0.0, "dataset.spread", "must be >= 0");
  }

  const auto& p = partition;
  if (p.kind == PartitionKind::kDirichlet) {
    check(!p.groups.empty(), "partition.groups", "must not be empty");
    double total = 0.0;
    for (std::size_t i = 0; i < p.groups.size(); ++i) {
      const std::string g = "partition.groups[" + std::to_string(i) + "]";
      check(p.groups[i].alpha > 0.0 && std::isfinite(p.groups[i].alpha), g + ".alpha",
            "must be positive and finite");
      check(p.groups[i].node_fraction > 0.0 && p.groups[i].node_fraction <= 1.0,
            g + ".fraction", "must be in (0, 1]");
      total += p.groups[i].node_fraction;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      std::ostringstream os;
      os << "node fractions sum to " << total << ", expected 1";
      throw ConfigError("partition.groups: " + os.str());
    }
  }
  check(p.test_fraction > 0.0 && p.test_fraction < 1.0, "partition.test_fraction",
        "must be in (0, 1)");

  check(n_nodes >= 2, "n_nodes", "must be at least 2");
  if (topology == TopologyKind::kCustom) {
    check(adjacency.size() == n_nodes, "adjacency", "must be n_nodes x n_nodes");
    try {
      custom_topology(adjacency);
    } catch (const TopologyError& e) {
      throw ConfigError(std::string("adjacency: ") + e.what());
    }
  } else {
    check(adjacency.empty(), "adjacency", "only allowed with topology \"custom\"");
  }
  check(rounds >= 0, "rounds", "must be >= 0");

  check(train.epochs >= 1, "train.epochs", "must be at least 1");
  check(train.batch_size >= 1, "train.batch_size", "must be at least 1");
  check(train.learning_rate > 0.0 && std::isfinite(train.learning_rate), "train.learning_rate",
        "must be positive");
  check(train.mu >= 0.0 && std::isfinite(train.mu), "train.mu", "must be >= 0");
  for (std::size_t h : hidden) check(h >= 1, "train.hidden", "layer widths must be positive");

  check(fit.rho > 0.0 && fit.rho <= 1.0, "fit.rho", "must be in (0, 1]");
  check(fit.max_iterations >= 1, "fit.max_iterations", "must be at least 1");
  check(fit.tolerance > 0.0, "fit.tolerance", "must be positive");
  check(fit.variance_floor > 0.0, "fit.variance_floor", "must be positive");
  check(fit.n_restarts >= 1, "fit.restarts", "must be at least 1");

  check(threads >= 0, "threads", "must be >= 0");
  check(!output_dir.empty(), "output_dir", "must not be empty");
}

ExperimentConfig parse_config_json(const json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  std::vector<std::string> unknown;
  {
    ObjectReader r(j, "", unknown);
    if (const json* v = r.take("dataset")) read_dataset(*v, base_dir, c.dataset, unknown);
    if (const json* v = r.take("partition")) read_partition(*v, c.partition, unknown);
    r.read("n_nodes", c.n_nodes);
    std::string topology = to_string(c.topology);
    r.read("topology", topology);
    if (topology == "fully_connected") {
      c.topology = TopologyKind::kFullyConnected;
    } else if (topology == "ring") {
      c.topology = TopologyKind::kRing;
    } else if (topology == "custom") {
      c.topology = TopologyKind::kCustom;
    } else {
      r.fail("topology", "expected fully_connected, ring or custom, got \"" + topology + "\"");
    }
    if (const json* v = r.take("adjacency")) c.adjacency = read_adjacency(*v);
    r.read("rounds", c.rounds);
    if (const json* v = r.take("aggregator")) {
      try {
        c.aggregator = parse_aggregator(require_string(*v, "aggregator"));
      } catch (const InvalidArgumentError& e) {
        throw ConfigError(std::string("aggregator: ") + e.what());
      }
    }
    if (const json* v = r.take("train")) read_train(*v, c, unknown);
    if (const json* v = r.take("fit")) read_fit(*v, c.fit, unknown);
    if (const json* v = r.take("flags")) read_flags(*v, c, unknown);
    r.read("seed", c.seed, true);
    r.read("threads", c.threads);
    r.read("output_dir", c.output_dir);
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError("unknown config keys: " + list);
  }
  c.validate();
  return c;
}

ExperimentConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config_json(j, base_dir);
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.parent_path());
}

nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  auto& d = j["dataset"];
  d["kind"] = to_string(c.dataset.kind);
  d["images"] = c.dataset.images;
  d["labels"] = c.dataset.labels;
  d["max_samples"] = c.dataset.max_samples;
  d["n_classes"] = c.dataset.n_classes;
  d["n_per_class"] = c.dataset.n_per_class;
  d["n_features"] = c.dataset.n_features;
  d["spread"] = c.dataset.spread;

  auto& p = j["partition"];
  p["kind"] = c.partition.kind == PartitionKind::kIid ? "iid" : "dirichlet";
  p["groups"] = nlohmann::ordered_json::array();
  for (const auto& g : c.partition.groups) {
    p["groups"].push_back({{"fraction", g.node_fraction}, {"alpha", g.alpha}});
  }
  p["test_fraction"] = c.partition.test_fraction;

  j["n_nodes"] = c.n_nodes;
  j["topology"] = to_string(c.topology);
  if (c.topology == TopologyKind::kCustom) {
    auto& adj = j["adjacency"] = nlohmann::ordered_json::array();
    for (const auto& row : c.adjacency) {
      auto r = nlohmann::ordered_json::array();
      for (char v : row) r.push_back(v ? 1 : 0);
      adj.push_back(std::move(r));
    }
  }
  j["rounds"] = c.rounds;
  j["aggregator"] = to_string(c.aggregator);
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate},
                {"mu", c.train.mu},
                {"hidden", c.hidden}};
  j["fit"] = {{"rho", c.fit.rho},
              {"max_iterations", c.fit.max_iterations},
              {"tolerance", c.fit.tolerance},
              {"variance_floor", c.fit.variance_floor},
              {"restarts", c.fit.n_restarts}};
  j["flags"] = {{"inverse_pooling", c.inverse_pooling},
                {"bic_standard", c.fit.bic_standard},
                {"global_test_set", c.global_test_set},
                {"record_timing", c.record_timing}};
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["output_dir"] = c.output_dir;
  return j;
}

}  // namespace dfl

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

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <vector>

#include "dfl/datahub.hpp"
#include "dfl/errors.hpp"
#include "dfl/federation.hpp"
#include "dfl/kernels.hpp"
#include "test_util.hpp"

namespace dfl {
namespace {

TEST(Topology, FullyConnected) {
  Topology t = build_topology(TopologyKind::kFullyConnected, 10);
  for (std::size_t k = 0; k < 10; ++k) EXPECT_EQ(t.neighbors(k).size(), 9u);
  EXPECT_EQ(t.neighborhood(3).size(), 10u);
}

TEST(Topology, Ring) {
  Topology t = build_topology(TopologyKind::kRing, 5);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(t.neighbors(k).size(), 2u);
  EXPECT_EQ(t.neighborhood(0), (std::vector<std::size_t>{0, 1, 4}));
}

TEST(Topology, RejectsBadAdjacency) {
  EXPECT_THROW(custom_topology({{1, 1}, {1, 0}}), TopologyError);  // self-loop
  EXPECT_THROW(custom_topology({{0, 1}, {0, 0}}), TopologyError);  // asymmetric
  EXPECT_THROW(custom_topology({{0, 1, 0}, {1, 0, 0}, {0, 0, 0}}), TopologyError);  // isolated
  EXPECT_THROW(custom_topology({{0, 1}, {1}}), TopologyError);  // ragged
  EXPECT_THROW(build_topology(TopologyKind::kRing, 1), TopologyError);
  EXPECT_NO_THROW(custom_topology({{0, 1, 1}, {1, 0, 0}, {1, 0, 0}}));
}

TEST(Aggregator, ParseNames) {
  EXPECT_EQ(parse_aggregator("fedep"), Aggregator::kFedEp);
  EXPECT_EQ(to_string(Aggregator::kFedProx), "fedprox");
  EXPECT_THROW(parse_aggregator("scaffold"), InvalidArgumentError);
}

ModelWeights scalar_model(double v) {
  ModelWeights w;
  w.shape = {1, {}, 1};
  w.values.assign(w.shape.parameter_count(), v);
  return w;
}

TEST(AggregateFedAvg, Examples) {
  std::vector<ModelWeights> same = {scalar_model(1.5), scalar_model(1.5), scalar_model(1.5)};
  std::vector<std::size_t> sizes = {3, 10, 7};
  EXPECT_EQ(aggregate_fedavg(same, sizes), scalar_model(1.5));
  std::vector<ModelWeights> two = {scalar_model(2), scalar_model(4)};
  std::vector<std::size_t> equal = {5, 5};
  EXPECT_EQ(aggregate_fedavg(two, equal).values[0], 3.0);
  std::vector<ModelWeights> zero_four = {scalar_model(0), scalar_model(4)};
  std::vector<std::size_t> one_three = {1, 3};
  EXPECT_EQ(aggregate_fedavg(zero_four, one_three).values[0], 3.0);
}

TEST(AggregateFedAvg, ShapeMismatch) {
  ModelWeights a = scalar_model(1);
  ModelWeights b = ModelWeights::zeros({2, {}, 1});
  std::vector<ModelWeights> models = {a, b};
  std::vector<std::size_t> sizes = {1, 1};
  EXPECT_THROW(aggregate_fedavg(models, sizes), ConsistencyError);
}

TEST(AggregateFedEp, Examples) {
  std::vector<ModelWeights> m = {scalar_model(0), scalar_model(0), scalar_model(4)};
  PoolingWeights w{{}, {0.25, 0.25, 0.5}, false};
  EXPECT_EQ(aggregate_fedep(m, w).values[0], 2.0);
  PoolingWeights first{{}, {1.0, 0.0, 0.0}, false};
  std::vector<ModelWeights> r = {scalar_model(1.25), scalar_model(7), scalar_model(-3)};
  EXPECT_EQ(aggregate_fedep(r, first), r[0]);
  PoolingWeights bad{{}, {0.5, 0.2, 0.2}, false};
  EXPECT_THROW(aggregate_fedep(m, bad), ConsistencyError);
}

TEST(AggregateFedEp, UniformEqualsFedAvgBitwise) {
  Rng rng(1);
  for (std::size_t k : {2u, 3u, 7u, 10u}) {
    std::vector<ModelWeights> models;
    for (std::size_t i = 0; i < k; ++i) models.push_back(init_weights({5, {4}, 3}, rng));
    PoolingWeights uniform{{}, std::vector<double>(k, 1.0 / k), true};
    std::vector<std::size_t> sizes(k, 37);
    EXPECT_EQ(aggregate_fedep(models, uniform), aggregate_fedavg(models, sizes));
  }
}

TEST(Aggregation, ConvexOnRandomInputs) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 1 + rng.uniform_index(8);
    std::vector<ModelWeights> models;
    std::vector<std::size_t> sizes;
    std::vector<double> alpha;
    for (std::size_t i = 0; i < k; ++i) {
      models.push_back(init_weights({3, {2}, 2}, rng));
      sizes.push_back(1 + rng.uniform_index(100));
      alpha.push_back(rng.uniform());
    }
    const double s = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    for (double& a : alpha) a /= s;
    const ModelWeights avg = aggregate_fedavg(models, sizes);
    const ModelWeights ep = aggregate_fedep(models, {{}, alpha, false});
    for (std::size_t p = 0; p < avg.values.size(); ++p) {
      double lo = models[0].values[p], hi = lo;
      for (const auto& m : models) {
        lo = std::min(lo, m.values[p]);
        hi = std::max(hi, m.values[p]);
      }
      const double slack = 1e-15 * std::max(1.0, std::abs(hi));
      EXPECT_GE(avg.values[p], lo - slack);
      EXPECT_LE(avg.values[p], hi + slack);
      EXPECT_GE(ep.values[p], lo - slack);
      EXPECT_LE(ep.values[p], hi + slack);
    }
  }
}

// A small federation over synthetic blobs.
struct Fixture {
  Dataset data;
  Topology topology;
  std::vector<NodeState> states;
};

Fixture make_fixture(TopologyKind kind, std::size_t n, bool iid, std::uint64_t seed = 1) {
  Fixture f;
  Rng data_rng(seed);
  f.data = make_synthetic(data_rng, 4, 10 * n, 6, 0.2);
  Rng part_rng(seed + 1);
  Partition p = iid ? iid_partition(part_rng, f.data, n)
                    : dirichlet_partition(part_rng, f.data, PartitionSpec::pure(n, 0.3));
  f.topology = build_topology(kind, n);
  Rng init(seed + 2);
  ModelWeights w0 = init_weights({6, {8}, 4}, init);
  f.states.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto& s = f.states[k];
    s.id = k;
    s.weights = w0;
    s.rng = Rng::for_stream(seed, k, StreamPurpose::kTrain);
    Rng split_rng = Rng::for_stream(seed, k, StreamPurpose::kSplit);
    NodeSplit split = split_node(split_rng, f.data, p.assignments[k], 0.2);
    s.train = split.train;
    s.test = split.test;
  }
  return f;
}

FederationOptions options(Aggregator a) {
  FederationOptions o;
  o.aggregator = a;
  o.train.learning_rate = 0.1;
  o.train.batch_size = 8;
  o.train.epochs = 1;
  return o;
}

void prepare_fedep(Fixture& f, const FederationOptions& o, std::uint64_t seed = 1) {
  fit_local_distributions(f.states, f.data, o.fit, seed);
  phase1_exchange(f.states, f.topology);
  compute_pooling(f.states, f.topology, o.pooling);
}

TEST(Phase1, CacheSizesFollowTopology) {
  Fixture fc = make_fixture(TopologyKind::kFullyConnected, 10, false);
  prepare_fedep(fc, options(Aggregator::kFedEp));
  for (const auto& s : fc.states) EXPECT_EQ(s.cache.size(), 10u);

  Fixture ring = make_fixture(TopologyKind::kRing, 5, false);
  prepare_fedep(ring, options(Aggregator::kFedEp));
  for (const auto& s : ring.states) {
    EXPECT_EQ(s.cache.size(), 3u);
    for (const auto& [id, fit] : s.cache) {
      auto hood = ring.topology.neighborhood(s.id);
      EXPECT_TRUE(std::find(hood.begin(), hood.end(), id) != hood.end());
      EXPECT_EQ(fit, *ring.states[id].fit);
    }
  }
}

TEST(Phase1, ExchangeNeedsFits) {
  Fixture f = make_fixture(TopologyKind::kRing, 3, false);
  EXPECT_THROW(phase1_exchange(f.states, f.topology), ConsistencyError);
}

TEST(Phase1, SingleClassNodeSharesADelta) {
  Fixture f = make_fixture(TopologyKind::kRing, 3, true);
  // Give node 1 only class-2 samples.
  std::vector<std::size_t> only;
  for (std::size_t i = 0; i < f.data.size() && only.size() < 12; ++i) {
    if (f.data.labels[i] == 2) only.push_back(i);
  }
  f.states[1].train = only;
  prepare_fedep(f, options(Aggregator::kFedEp));
  const auto& fit = f.states[0].cache.at(1);
  ASSERT_EQ(fit.params.size(), 1u);
  EXPECT_EQ(fit.params.means[0], 2.0);
  EXPECT_GT(discretize(fit)[2], 1.0 - 1e-9);
}

TEST(RunRound, FedAvgWithIdenticalDataSynchronizesNodes) {
  Fixture f = make_fixture(TopologyKind::kFullyConnected, 4, true);
  for (auto& s : f.states) {
    s.train = f.states[0].train;
    s.rng = Rng(5);
  }
  run_round(f.states, f.topology, f.data, options(Aggregator::kFedAvg), 1);
  for (const auto& s : f.states) EXPECT_EQ(s.weights, f.states[0].weights);
}

TEST(RunRound, FedEpOnIidMatchesFedAvgBitwise) {
  Fixture a = make_fixture(TopologyKind::kFullyConnected, 5, true);
  Fixture b = make_fixture(TopologyKind::kFullyConnected, 5, true);
  prepare_fedep(b, options(Aggregator::kFedEp));
  for (const auto& s : b.states) ASSERT_TRUE(s.pooling->uniform_fallback);
  for (int r = 1; r <= 3; ++r) {
    run_round(a.states, a.topology, a.data, options(Aggregator::kFedAvg), r);
    run_round(b.states, b.topology, b.data, options(Aggregator::kFedEp), r);
    for (std::size_t k = 0; k < 5; ++k) ASSERT_EQ(a.states[k].weights, b.states[k].weights);
  }
}

TEST(RunRound, FedEpBeforeExchangeIsRejected) {
  Fixture f = make_fixture(TopologyKind::kRing, 3, false);
  EXPECT_THROW(run_round(f.states, f.topology, f.data, options(Aggregator::kFedEp), 1),
               ConsistencyError);
}

TEST(RunRound, NonNeighborsDoNotLeakIn) {
  // Ring of 6: node 0 aggregates {5, 0, 1}. Perturbing node 3 must leave
  // node 0's result untouched.
  for (Aggregator agg : {Aggregator::kFedAvg, Aggregator::kFedEp}) {
    Fixture a = make_fixture(TopologyKind::kRing, 6, false);
    Fixture b = make_fixture(TopologyKind::kRing, 6, false);
    if (agg == Aggregator::kFedEp) {
      prepare_fedep(a, options(agg));
      prepare_fedep(b, options(agg));
    }
    for (double& v : b.states[3].weights.values) v += 0.5;
    run_round(a.states, a.topology, a.data, options(agg), 1);
    run_round(b.states, b.topology, b.data, options(agg), 1);
    EXPECT_EQ(a.states[0].weights, b.states[0].weights);
    EXPECT_NE(a.states[2].weights, b.states[2].weights);
  }
}

TEST(RunRound, PoolingWeightsAreStatic) {
  Fixture f = make_fixture(TopologyKind::kFullyConnected, 4, false);
  prepare_fedep(f, options(Aggregator::kFedEp));
  auto first = run_round(f.states, f.topology, f.data, options(Aggregator::kFedEp), 1);
  for (int r = 2; r <= 4; ++r) {
    auto rec = run_round(f.states, f.topology, f.data, options(Aggregator::kFedEp), r);
    EXPECT_EQ(rec.alphas, first.alphas);
    EXPECT_EQ(rec.round, r);
  }
}

TEST(RunRound, SameResultForAnyThreadCount) {
  std::vector<std::vector<ModelWeights>> results;
  for (int threads : {1, 2, 8}) {
    kernels::set_num_threads(threads);
    Fixture f = make_fixture(TopologyKind::kFullyConnected, 5, false);
    prepare_fedep(f, options(Aggregator::kFedEp));
    for (int r = 1; r <= 2; ++r) run_round(f.states, f.topology, f.data, options(Aggregator::kFedEp), r);
    std::vector<ModelWeights> w;
    for (const auto& s : f.states) w.push_back(s.weights);
    results.push_back(w);
  }
  kernels::set_num_threads(0);
  EXPECT_EQ(results[0], results[1]);
  EXPECT_EQ(results[0], results[2]);
}

TEST(RunRound, FedProxStaysCloserToTheRoundStart) {
  Fixture a = make_fixture(TopologyKind::kFullyConnected, 3, false);
  Fixture b = make_fixture(TopologyKind::kFullyConnected, 3, false);
  const ModelWeights start = a.states[0].weights;
  auto prox = options(Aggregator::kFedProx);
  prox.train.mu = 5.0;
  run_round(a.states, a.topology, a.data, options(Aggregator::kFedAvg), 1);
  run_round(b.states, b.topology, b.data, prox, 1);
  auto dist = [&](const ModelWeights& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.values.size(); ++i) {
      s += (w.values[i] - start.values[i]) * (w.values[i] - start.values[i]);
    }
    return s;
  };
  EXPECT_LT(dist(b.states[0].weights), dist(a.states[0].weights));
}

TEST(RunRound, TrainingFailureNamesTheNode) {
  Fixture f = make_fixture(TopologyKind::kRing, 3, false);
  auto o = options(Aggregator::kFedAvg);
  o.train.learning_rate = 1e300;
  try {
    run_round(f.states, f.topology, f.data, o, 1);
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("node 0"), std::string::npos) << e.what();
  }
}

TEST(RoundRecord, MeanAndPopulationStd) {
  RoundRecord r;
  r.reports.resize(2);
  r.reports[0].macro_f1 = 0.5;
  r.reports[1].macro_f1 = 1.0;
  EXPECT_DOUBLE_EQ(r.mean_f1(), 0.75);
  EXPECT_DOUBLE_EQ(r.std_f1(), 0.25);
}

}  // namespace
}  // namespace dfl

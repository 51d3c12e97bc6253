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

// Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
// if any fails. Criteria 7-9 train on the bundled MNIST subset and take a few
// minutes; pass criterion numbers to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dfl/cli.hpp"
#include "dfl/config.hpp"
#include "dfl/datahub.hpp"
#include "dfl/distfit.hpp"
#include "dfl/experiment.hpp"
#include "dfl/federation.hpp"
#include "dfl/kernels.hpp"
#include "dfl/learner.hpp"
#include "dfl/pooling.hpp"

namespace fs = std::filesystem;
using namespace dfl;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path config_path(const std::string& name) { return fs::path(DFL_SOURCE_DIR) / "configs" / name; }

// 1. EM on random 1-4 cluster data.
Outcome em_suite() {
  const auto t0 = Clock::now();
  Rng gen(2024);
  double worst_drop = 0.0, worst_row = 0.0, worst_pi = 0.0;
  int fits = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 50 + gen.uniform_index(1951);
    const std::size_t clusters = 1 + gen.uniform_index(4);
    std::vector<double> centers(clusters), scales(clusters);
    for (std::size_t c = 0; c < clusters; ++c) {
      centers[c] = gen.uniform(-10.0, 10.0);
      scales[c] = gen.uniform(0.2, 2.0);
    }
    std::vector<double> y(n);
    for (double& v : y) {
      const std::size_t c = gen.uniform_index(clusters);
      v = centers[c] + scales[c] * gen.normal();
    }
    FitConfig config;
    Rng rng(static_cast<std::uint64_t>(trial));
    for (std::size_t m = 1; m <= 4; ++m) {
      EmTrace trace;
      EmResult r = expectation_max(y, m, config, rng, &trace);
      for (std::size_t i = 1; i < trace.log_likelihoods.size(); ++i) {
        worst_drop = std::max(worst_drop, trace.log_likelihoods[i - 1] - trace.log_likelihoods[i]);
      }
      worst_row = std::max(worst_row, trace.max_row_sum_error);
      const double s = std::accumulate(r.params.weights.begin(), r.params.weights.end(), 0.0);
      worst_pi = std::max(worst_pi, std::abs(s - 1.0));
      ++fits;
    }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = worst_drop <= 1e-8 && worst_row <= 1e-9 && worst_pi <= 1e-9 && secs < 30.0;
  o.detail = std::to_string(fits) + " fits, max lnL drop " + fmt("%.2e", worst_drop) +
             ", max row error " + fmt("%.2e", worst_row) + ", max |sum pi - 1| " +
             fmt("%.2e", worst_pi) + ", " + fmt("%.2f", secs) + " s";
  return o;
}

// 2. Two well separated components.
Outcome gmm_recovery() {
  int recovered = 0;
  std::ostringstream log;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng gen(seed);
    std::vector<double> y(2000);
    for (double& v : y) v = (gen.uniform() < 0.5 ? 0.0 : 5.0) + gen.normal();
    FitConfig config;
    Rng rng(seed + 100);
    BicSelection sel = select_components(y, 3, config, rng);
    bool ok = sel.best_m == 2;
    if (ok) {
      auto mu = sel.best.params.means;
      std::sort(mu.begin(), mu.end());
      ok = std::abs(mu[0]) <= 0.2 && std::abs(mu[1] - 5.0) <= 0.2;
    }
    recovered += ok;
    log << (ok ? "" : " seed " + std::to_string(seed) + " M=" + std::to_string(sel.best_m));
  }
  return {recovered >= 9, std::to_string(recovered) + "/10 seeds recovered M=2 and means" + log.str()};
}

std::vector<double> random_simplex(Rng& rng, std::size_t k, double alpha) {
  return sample_dirichlet(rng, alpha, k);
}

// 3. Pooling invariants on random federations.
Outcome pooling_suite() {
  const auto t0 = Clock::now();
  Rng gen(7);
  int failures = 0, cases = 0;
  double worst_scale = 0.0, worst_perm = 0.0, min_kld = 0.0;
  auto check = [&](bool ok) { failures += !ok; };
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = 2 + gen.uniform_index(9);
    const int classes = 2 + static_cast<int>(gen.uniform_index(9));
    std::vector<FittedDistribution> fits(k);
    for (auto& f : fits) {
      const std::size_t m = 1 + gen.uniform_index(3);
      f.n_classes = classes;
      f.n_samples = 10 + gen.uniform_index(1000);
      f.params.weights = random_simplex(gen, m, 1.0);
      for (std::size_t j = 0; j < m; ++j) {
        f.params.means.push_back(gen.uniform(0.0, classes - 1.0));
        f.params.variances.push_back(gen.uniform(0.05, 4.0));
      }
    }
    PoolingWeights w = pool_fits(fits);
    double sum = 0.0;
    for (double a : w.alpha) {
      check(a >= 0.0);
      sum += a;
    }
    check(std::abs(sum - 1.0) <= 1e-9);
    for (double d : w.kld) min_kld = std::min(min_kld, d);

    auto scaled = fits;
    const std::size_t factor = 2 + gen.uniform_index(7);
    for (auto& f : scaled) f.n_samples *= factor;
    PoolingWeights ws = pool_fits(scaled);
    for (std::size_t i = 0; i < k; ++i) {
      worst_scale = std::max(worst_scale, std::abs(ws.alpha[i] - w.alpha[i]));
    }

    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    shuffle(std::span<std::size_t>(perm), gen);
    std::vector<FittedDistribution> permuted;
    for (std::size_t i : perm) permuted.push_back(fits[i]);
    PoolingWeights wp = pool_fits(permuted);
    for (std::size_t i = 0; i < k; ++i) {
      worst_perm = std::max(worst_perm, std::abs(wp.alpha[i] - w.alpha[perm[i]]));
    }
    ++cases;
  }
  // Identical fits: zero divergence everywhere.
  for (std::size_t k = 2; k <= 10; ++k) {
    FittedDistribution f;
    f.n_classes = 10;
    f.n_samples = 100;
    f.params = {{0.3, 0.7}, {2.0, 6.5}, {1.0, 2.0}};
    std::vector<FittedDistribution> same(k, f);
    PoolingWeights w = pool_fits(same);
    check(w.uniform_fallback);
    for (double a : w.alpha) check(a == 1.0 / static_cast<double>(k));
    ++cases;
  }
  check(min_kld >= -1e-12);
  check(worst_scale <= 1e-12);
  check(worst_perm <= 1e-12);
  const double secs = seconds_since(t0);
  return {failures == 0 && secs < 10.0,
          std::to_string(cases) + " cases, " + std::to_string(failures) + " violations, min KLD " +
              fmt("%.1e", min_kld) + ", scale drift " + fmt("%.1e", worst_scale) +
              ", permutation drift " + fmt("%.1e", worst_perm) + ", " + fmt("%.2f", secs) + " s"};
}

// 4. Exactly IID, equal sizes: FedEP falls back to uniform weights and must
// match FedAvg bit for bit after every round.
Outcome degeneracy() {
  ExperimentConfig base;
  base.dataset.kind = DatasetKind::kSynthetic;
  base.dataset.n_classes = 10;
  base.dataset.n_per_class = 50;
  base.partition.kind = PartitionKind::kIid;
  base.n_nodes = 10;
  base.hidden = {64, 32};
  base.seed = 5;
  int rounds_equal = 0;
  bool fallback = true, sizes_equal = true;
  const int max_rounds = 4;
  for (int r = 1; r <= max_rounds; ++r) {
    ExperimentConfig a = base, b = base;
    a.rounds = b.rounds = r;
    a.aggregator = Aggregator::kFedAvg;
    b.aggregator = Aggregator::kFedEp;
    ExperimentResult ra = run_experiment(a);
    ExperimentResult rb = run_experiment(b);
    bool same = true;
    for (std::size_t k = 0; k < base.n_nodes; ++k) {
      same = same && ra.nodes[k].weights == rb.nodes[k].weights;
      fallback = fallback && rb.nodes[k].pooling && rb.nodes[k].pooling->uniform_fallback;
      sizes_equal = sizes_equal && ra.nodes[k].train.size() == ra.nodes[0].train.size();
    }
    rounds_equal += same;
  }
  return {rounds_equal == max_rounds && fallback && sizes_equal,
          std::to_string(rounds_equal) + "/" + std::to_string(max_rounds) +
              " rounds bitwise equal, uniform fallback " + (fallback ? "yes" : "no") +
              ", equal train sizes " + (sizes_equal ? "yes" : "no")};
}

// 5. Directional central differences, proximal term on.
Outcome gradient_check() {
  const auto t0 = Clock::now();
  Rng rng(55);
  double worst = 0.0;
  int probes = 0;
  auto probe = [&](const MlpShape& shape, std::size_t n) {
    ModelWeights w = init_weights(shape, rng);
    for (double& v : w.values) v += rng.uniform(-0.05, 0.05);
    // The anchor is the round-start model, so it sits near w. An unrelated
    // anchor makes the loss large enough that differencing loses the signal.
    ModelWeights anchor = w;
    for (double& v : anchor.values) v += rng.uniform(-0.01, 0.01);
    Matrix x(n, shape.n_features);
    for (double& v : x.values()) v = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
    std::vector<int> y(n);
    for (int& l : y) l = static_cast<int>(rng.uniform_index(shape.n_classes));
    const double mu = 0.1;
    std::vector<double> g(w.values.size());
    loss_and_gradient(w, x.view(), y, mu, anchor, g);
    std::vector<double> dir(g.size());
    // Unit length, so the step stays at h in parameter space for any size
    // of network and does not straddle ReLU kinks.
    double norm = 0.0;
    for (double& d : dir) {
      d = rng.normal();
      norm += d * d;
    }
    norm = std::sqrt(norm);
    for (double& d : dir) d /= norm;
    double analytic = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) analytic += g[i] * dir[i];
    const double h = 1e-5;
    ModelWeights plus = w, minus = w;
    for (std::size_t i = 0; i < dir.size(); ++i) {
      plus.values[i] += h * dir[i];
      minus.values[i] -= h * dir[i];
    }
    const double numeric = (loss_and_gradient(plus, x.view(), y, mu, anchor, {}) -
                            loss_and_gradient(minus, x.view(), y, mu, anchor, {})) /
                           (2.0 * h);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
    ++probes;
  };
  for (int i = 0; i < 80; ++i) {
    probe({1 + rng.uniform_index(12), {1 + rng.uniform_index(10), 1 + rng.uniform_index(10)},
           2 + rng.uniform_index(9)},
          1 + rng.uniform_index(16));
  }
  for (int i = 0; i < 20; ++i) probe({784, {256, 128}, 10}, 8);
  const double secs = seconds_since(t0);
  return {probes == 100 && worst < 1e-4 && secs < 60.0,
          std::to_string(probes) + " probes at mu=0.1, max relative error " + fmt("%.2e", worst) +
              ", " + fmt("%.2f", secs) + " s"};
}

// 6. Dirichlet draws against the closed-form variance, and heterogeneity order.
Outcome dirichlet_stats() {
  const std::size_t k = 10, draws = 10000;
  bool ok = true;
  std::ostringstream detail;
  std::vector<double> share;
  for (double alpha : {0.1, 1.0, 20.0}) {
    Rng rng(static_cast<std::uint64_t>(alpha * 1000) + 1);
    std::vector<double> sum(k, 0.0), sum2(k, 0.0);
    double max_share = 0.0;
    for (std::size_t d = 0; d < draws; ++d) {
      auto p = sample_dirichlet(rng, alpha, k);
      for (std::size_t i = 0; i < k; ++i) {
        sum[i] += p[i];
        sum2[i] += p[i] * p[i];
      }
      max_share += *std::max_element(p.begin(), p.end());
    }
    // Pooled over coordinates; every coordinate has the same marginal.
    double var = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double m = sum[i] / draws;
      var += (sum2[i] - draws * m * m) / (draws - 1);
    }
    var /= k;
    const double expected = dirichlet_variance(alpha, k);
    const double rel = std::abs(var - expected) / expected;
    ok = ok && rel <= 0.10;
    share.push_back(max_share / draws);
    detail << "alpha=" << alpha << " var " << fmt("%.3g", var) << " vs " << fmt("%.3g", expected)
           << " (" << fmt("%.1f", 100 * rel) << "%), ";
  }
  const bool ordered = share[0] > share[1] && share[1] > share[2];
  detail << "mean max share " << fmt("%.3f", share[0]) << " > " << fmt("%.3f", share[1]) << " > "
         << fmt("%.3f", share[2]);
  return {ok && ordered, detail.str()};
}

// Runs fedep and fedavg over seeds 1..5 on a config from configs/.
CompareReport compare(const std::string& config_name) {
  ExperimentConfig base = parse_config(config_path(config_name));
  std::cerr << "running " << config_name << " ...\n";
  const auto t0 = Clock::now();
  CompareReport r = run_comparison(base, {"fedavg", "fedep"}, {1, 2, 3, 4, 5},
                                   [](const CompareCell& c) {
                                     std::cerr << "  " << c.aggregator << " seed " << c.seed << ": "
                                               << (c.final_f1 ? fmt("%.4f", *c.final_f1) : c.error)
                                               << "\n";
                                   });
  std::cerr << "  " << fmt("%.0f", seconds_since(t0)) << " s\n";
  return r;
}

const CompareRow& row(const CompareReport& r, const std::string& agg) {
  for (const auto& x : r.rows) {
    if (x.aggregator == agg) return x;
  }
  throw std::runtime_error("missing row " + agg);
}

std::string pair(const CompareReport& r) {
  const auto& ep = row(r, "fedep");
  const auto& avg = row(r, "fedavg");
  return "FedEP " + fmt("%.3f", ep.mean) + " vs FedAvg " + fmt("%.3f", avg.mean) + " (" +
         std::to_string(ep.runs) + "+" + std::to_string(avg.runs) + " runs)";
}

bool complete(const CompareReport& r) {
  return row(r, "fedep").failures == 0 && row(r, "fedavg").failures == 0;
}

// First 1-based round whose mean F1 reaches 95% of the last round's.
int convergence_round(const std::vector<double>& f1) {
  const double target = 0.95 * f1.back();
  for (std::size_t i = 0; i < f1.size(); ++i) {
    if (f1[i] >= target) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(f1.size());
}

Outcome convergence(const CompareReport& r) {
  int wins = 0;
  std::ostringstream detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::optional<int> ep, avg;
    for (const auto& c : r.cells) {
      if (c.seed != seed || !c.final_f1) continue;
      (c.aggregator == "fedep" ? ep : avg) = convergence_round(c.mean_f1);
    }
    if (!ep || !avg) continue;
    wins += *ep <= *avg;
    detail << " s" << seed << ":" << *ep << "/" << *avg;
  }
  return {wins >= 3, std::to_string(wins) + "/5 seeds with FedEP round <= FedAvg round (FedEP/FedAvg:" +
                         detail.str() + ")"};
}

// 10. Same config twice, 1 and 8 workers.
Outcome determinism() {
  std::vector<std::string> csvs;
  std::vector<std::string> summaries;
  for (const char* name : {"mnist_pure_alpha0.1.json", "synthetic_minimal.json"}) {
    ExperimentConfig c = parse_config(config_path(name));
    c.aggregator = Aggregator::kFedEp;
    c.rounds = std::min(c.rounds, 2);
    if (c.dataset.kind == DatasetKind::kIdx) c.dataset.max_samples = 2000;
    for (int threads : {1, 8, 8}) {
      c.threads = threads;
      ExperimentResult r = run_experiment(c);
      csvs.push_back(rounds_csv(r.records, false));
      auto s = summary_json(r);
      s["config"].erase("threads");
      summaries.push_back(s.dump());
    }
  }
  bool same = true;
  for (std::size_t i = 0; i < csvs.size(); ++i) {
    const std::size_t first = i < 3 ? 0 : 3;
    same = same && csvs[i] == csvs[first] && summaries[i] == summaries[first];
  }
  return {same, "2 configs x {1, 8, 8} workers: CSV and summary " +
                    std::string(same ? "byte-identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("acceptance checks");
  std::vector<int> only;
  app.add_option("criteria", only, "criterion numbers to run (default: all)");
  CLI11_PARSE(app, argc, argv);
  std::set<int> wanted(only.begin(), only.end());
  auto want = [&](int n) { return wanted.empty() || wanted.count(n) > 0; };

  int failed = 0;
  auto report = [&](int n, const std::string& name, const std::function<Outcome()>& fn) {
    if (!want(n)) return;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << n << "] " << name << ": " << o.detail
              << std::endl;
  };

  report(1, "EM property suite", em_suite);
  report(2, "GMM recovery", gmm_recovery);
  report(3, "pooling invariants", pooling_suite);
  report(4, "FedEP/FedAvg IID degeneracy", degeneracy);
  report(5, "gradient check", gradient_check);
  report(6, "Dirichlet statistics", dirichlet_stats);

  std::optional<CompareReport> low;
  auto low_alpha = [&]() -> const CompareReport& {
    if (!low) low = compare("mnist_pure_alpha0.1.json");
    return *low;
  };
  report(7, "pure non-IID MNIST", [&] {
    const auto t0 = Clock::now();
    const CompareReport& a = low_alpha();
    CompareReport b = compare("mnist_pure_alpha20.json");
    const double gap = row(b, "fedep").mean - row(b, "fedavg").mean;
    const bool low_ok = row(a, "fedep").mean >= row(a, "fedavg").mean;
    const bool high_ok = std::abs(gap) <= 0.03;
    return Outcome{complete(a) && complete(b) && low_ok && high_ok,
                   "alpha=0.1 " + pair(a) + (low_ok ? " ok" : " (FedEP below)") + "; alpha=20 " +
                       pair(b) + " gap " + fmt("%+.3f", gap) + (high_ok ? " ok" : " (> 0.03)") +
                       "; " + fmt("%.0f", seconds_since(t0)) + " s"};
  });
  report(8, "mixed non-IID MNIST", [&] {
    CompareReport r = compare("mnist_mixed_50_1.json");
    const bool ok = row(r, "fedep").mean > row(r, "fedavg").mean;
    return Outcome{complete(r) && ok, "groups [50% alpha=50, 50% alpha=1] " + pair(r)};
  });
  report(9, "convergence speed", [&] { return convergence(low_alpha()); });
  report(10, "determinism", determinism);

  kernels::set_num_threads(0);
  return failed == 0 ? 0 : 1;
}

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

// The OpenMP kernels must agree bitwise with the serial reference for every
// thread count, and both must agree with a naive oracle to rounding.

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dfl/kernels.hpp"
#include "dfl/numkit.hpp"
#include "test_util.hpp"

namespace dfl {
namespace {

class ThreadCount : public ::testing::TestWithParam<int> {
 protected:
  void SetUp() override { kernels::set_num_threads(GetParam()); }
  void TearDown() override { kernels::set_num_threads(0); }
};

struct Shape {
  std::size_t n, in, out;
};

std::vector<Shape> shapes(Rng& rng) {
  std::vector<Shape> s = {{1, 1, 1}, {300, 784, 16}, {64, 256, 128}, {513, 33, 10}};
  for (int i = 0; i < 20; ++i) {
    s.push_back({1 + rng.uniform_index(200), 1 + rng.uniform_index(100),
                  1 + rng.uniform_index(50)});
  }
  return s;
}

TEST_P(ThreadCount, AffineMatchesReferenceBitwise) {
  Rng rng(100);
  for (const Shape& s : shapes(rng)) {
    Matrix x = testing::random_matrix(rng, s.n, s.in, 0.5);
    Matrix w = testing::random_matrix(rng, s.in, s.out);
    std::vector<double> bias(s.out);
    for (double& b : bias) b = rng.uniform(-1, 1);
    Matrix y(s.n, s.out), y_ref(s.n, s.out);
    kernels::affine(x.view(), w.view(), bias, y.view());
    kernels::reference::affine(x.view(), w.view(), bias, y_ref.view());
    ASSERT_EQ(y, y_ref) << s.n << "x" << s.in << "x" << s.out;

    Matrix naive = testing::naive_matmul(x, w);
    for (std::size_t i = 0; i < s.n; ++i) {
      for (std::size_t j = 0; j < s.out; ++j) naive(i, j) += bias[j];
    }
    EXPECT_LT(testing::max_abs_diff(y.values(), naive.values()), 1e-10);
  }
}

TEST_P(ThreadCount, AccumulateXtDMatchesReferenceBitwise) {
  Rng rng(200);
  for (const Shape& s : shapes(rng)) {
    Matrix x = testing::random_matrix(rng, s.n, s.in, 0.5);
    Matrix d = testing::random_matrix(rng, s.n, s.out);
    Matrix g0 = testing::random_matrix(rng, s.in, s.out);
    Matrix g = g0, g_ref = g0;
    kernels::accumulate_xt_d(x.view(), d.view(), g.view());
    kernels::reference::accumulate_xt_d(x.view(), d.view(), g_ref.view());
    ASSERT_EQ(g, g_ref);

    Matrix naive = testing::naive_matmul(transpose(x), d);
    for (std::size_t i = 0; i < naive.size(); ++i) naive.values()[i] += g0.values()[i];
    EXPECT_LT(testing::max_abs_diff(g.values(), naive.values()), 1e-10);
  }
}

TEST_P(ThreadCount, MatmulDWtMatchesReferenceBitwise) {
  Rng rng(300);
  for (const Shape& s : shapes(rng)) {
    Matrix d = testing::random_matrix(rng, s.n, s.out);
    Matrix w = testing::random_matrix(rng, s.in, s.out);
    Matrix r(s.n, s.in), r_ref(s.n, s.in);
    kernels::matmul_d_wt(d.view(), w.view(), r.view());
    kernels::reference::matmul_d_wt(d.view(), w.view(), r_ref.view());
    ASSERT_EQ(r, r_ref);
    EXPECT_LT(testing::max_abs_diff(r.values(), testing::naive_matmul(d, transpose(w)).values()),
              1e-10);
  }
}

TEST_P(ThreadCount, GmmEStepMatchesReferenceBitwise) {
  Rng rng(400);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(3000);
    const std::size_t m = 1 + rng.uniform_index(5);
    std::vector<double> y(n), logw(m), mean(m), var(m);
    for (double& v : y) v = static_cast<double>(rng.uniform_index(10));
    double wsum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      logw[j] = rng.uniform(0.1, 1.0);
      wsum += logw[j];
      mean[j] = rng.uniform(0, 9);
      var[j] = rng.uniform(1e-4, 4.0);
    }
    for (double& w : logw) w = std::log(w / wsum);
    Matrix gamma(n, m), gamma_ref(n, m);
    std::vector<double> ln(n), ln_ref(n), q(n), q_ref(n);
    kernels::gmm_e_step(y, logw, mean, var, gamma.view(), ln, q);
    kernels::reference::gmm_e_step(y, logw, mean, var, gamma_ref.view(), ln_ref, q_ref);
    ASSERT_EQ(gamma, gamma_ref);
    ASSERT_EQ(ln, ln_ref);
    ASSERT_EQ(q, q_ref);

    // Direct-space oracle: gamma = w N / sum(w N).
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> dens(m);
      double total = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        dens[j] = std::exp(logw[j]) * std::exp(-(y[i] - mean[j]) * (y[i] - mean[j]) / (2 * var[j])) /
                  std::sqrt(2 * M_PI * var[j]);
        total += dens[j];
      }
      if (total < 1e-200) continue;  // direct space underflows; the log form does not
      double row = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        EXPECT_NEAR(gamma(i, j), dens[j] / total, 1e-9);
        row += gamma(i, j);
      }
      EXPECT_NEAR(row, 1.0, 1e-12);
      EXPECT_NEAR(ln[i], std::log(total), 1e-9 * std::max(1.0, std::abs(ln[i])));
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Threads, ThreadCount, ::testing::Values(1, 2, 3, 8));

}  // namespace
}  // namespace dfl

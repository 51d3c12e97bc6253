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

// Small generators and naive oracles shared by the unit tests.

#ifndef DFL_TESTS_TEST_UTIL_HPP_
#define DFL_TESTS_TEST_UTIL_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "dfl/datahub.hpp"
#include "dfl/numkit.hpp"

namespace dfl::testing {

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double zero_share = 0.0) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform() < zero_share ? 0.0 : rng.uniform(-1.0, 1.0);
  return m;
}

// Textbook triple loop, summing in k order.
inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  }
  return c;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Dataset whose labels follow `counts`, with a single dummy feature.
inline Dataset labels_only(const std::vector<std::size_t>& counts) {
  Dataset d;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    for (std::size_t i = 0; i < counts[c]; ++i) d.labels.push_back(static_cast<int>(c));
  }
  d.features = Matrix(d.labels.size(), 1, 0.5);
  d.n_classes = static_cast<int>(counts.size());
  return d;
}

}  // namespace dfl::testing

#endif  // DFL_TESTS_TEST_UTIL_HPP_

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

#include <omp.h>

#include <cstddef>
#include <cstdint>

#include "dfl/kernels.hpp"
#include "kernels/rows.hpp"

namespace dfl::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::int64_t kParallelWork = std::int64_t{1} << 16;

std::int64_t work(std::size_t a, std::size_t b, std::size_t c) {
  return static_cast<std::int64_t>(a) * static_cast<std::int64_t>(b) *
         static_cast<std::int64_t>(c);
}

}  // namespace

void affine(ConstMatrixSpan x, ConstMatrixSpan w, std::span<const double> bias, MatrixSpan y) {
  const auto n = static_cast<std::int64_t>(x.rows);
#pragma omp parallel for schedule(static) if (work(x.rows, w.rows, w.cols) > kParallelWork)
  for (std::int64_t i = 0; i < n; ++i) rows::affine(x.row(i), w, bias, y.row(i));
}

void accumulate_xt_d(ConstMatrixSpan x, ConstMatrixSpan d, MatrixSpan g) {
  const auto k_count = static_cast<std::int64_t>(g.rows);
#pragma omp parallel for schedule(static) if (work(x.rows, g.rows, g.cols) > kParallelWork)
  for (std::int64_t k = 0; k < k_count; ++k) rows::accumulate_xt_d(x, d, k, g.row(k));
}

void matmul_d_wt(ConstMatrixSpan d, ConstMatrixSpan w, MatrixSpan r) {
  const auto n = static_cast<std::int64_t>(d.rows);
#pragma omp parallel for schedule(static) if (work(d.rows, w.rows, w.cols) > kParallelWork)
  for (std::int64_t i = 0; i < n; ++i) rows::matmul_d_wt(d.row(i), w, r.row(i));
}

void gmm_e_step(std::span<const double> y, std::span<const double> log_weights,
                std::span<const double> means, std::span<const double> variances,
                MatrixSpan gamma, std::span<double> log_norm, std::span<double> q_terms) {
  const auto n = static_cast<std::int64_t>(y.size());
#pragma omp parallel for schedule(static) if (work(y.size(), means.size(), 32) > kParallelWork)
  for (std::int64_t i = 0; i < n; ++i) {
    rows::gmm_e_step(y[i], log_weights, means, variances, gamma.row(i), log_norm[i],
                     q_terms[i]);
  }
}

void set_num_threads(int threads) {
  static const int kDefault = omp_get_max_threads();
  omp_set_num_threads(threads > 0 ? threads : kDefault);
}

int num_threads() { return omp_get_max_threads(); }

}  // namespace dfl::kernels

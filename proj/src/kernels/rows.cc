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

#include "kernels/rows.hpp"

#include <cmath>
#include <numbers>

namespace dfl::kernels::rows {

void affine(std::span<const double> x_row, ConstMatrixSpan w, std::span<const double> bias,
            std::span<double> y_row) {
  const std::size_t out = w.cols;
  double* __restrict y = y_row.data();
  if (bias.empty()) {
    for (std::size_t j = 0; j < out; ++j) y[j] = 0.0;
  } else {
    for (std::size_t j = 0; j < out; ++j) y[j] = bias[j];
  }
  for (std::size_t k = 0; k < w.rows; ++k) {
    const double a = x_row[k];
    if (a == 0.0) continue;  // image inputs are mostly zero
    const double* __restrict wk = w.data.data() + k * out;
    for (std::size_t j = 0; j < out; ++j) y[j] += a * wk[j];
  }
}

void accumulate_xt_d(ConstMatrixSpan x, ConstMatrixSpan d, std::size_t k,
                     std::span<double> g_row) {
  const std::size_t out = d.cols;
  double* __restrict g = g_row.data();
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double a = x.data[i * x.cols + k];
    if (a == 0.0) continue;
    const double* __restrict di = d.data.data() + i * out;
    for (std::size_t j = 0; j < out; ++j) g[j] += a * di[j];
  }
}

void matmul_d_wt(std::span<const double> d_row, ConstMatrixSpan w, std::span<double> r_row) {
  const std::size_t out = w.cols;
  const double* __restrict d = d_row.data();
  for (std::size_t k = 0; k < w.rows; ++k) {
    const double* __restrict wk = w.data.data() + k * out;
    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
    for (std::size_t j = 0; j < out; ++j) acc += d[j] * wk[j];
    r_row[k] = acc;
  }
}

void gmm_e_step(double y, std::span<const double> log_weights, std::span<const double> means,
                std::span<const double> variances, std::span<double> gamma_row,
                double& log_norm, double& q_term) {
  constexpr double kLogTwoPi = 1.8378770664093454836;  // ln(2 pi)
  const std::size_t m_count = means.size();
  double hi = -INFINITY;
  for (std::size_t m = 0; m < m_count; ++m) {
    const double diff = y - means[m];
    const double lp = log_weights[m] - 0.5 * (kLogTwoPi + std::log(variances[m])) -
                      0.5 * diff * diff / variances[m];
    gamma_row[m] = lp;
    if (lp > hi) hi = lp;
  }
  double sum = 0.0;
  for (std::size_t m = 0; m < m_count; ++m) sum += std::exp(gamma_row[m] - hi);
  const double lse = hi + std::log(sum);
  double q = 0.0;
  for (std::size_t m = 0; m < m_count; ++m) {
    const double lp = gamma_row[m];
    const double g = std::exp(lp - lse);
    if (g > 0.0) q += g * lp;
    gamma_row[m] = g;
  }
  log_norm = lse;
  q_term = q;
}

}  // namespace dfl::kernels::rows

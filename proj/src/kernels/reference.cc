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

#include <cstddef>

#include "dfl/kernels.hpp"
#include "kernels/rows.hpp"

namespace dfl::kernels::reference {

void affine(ConstMatrixSpan x, ConstMatrixSpan w, std::span<const double> bias, MatrixSpan y) {
  for (std::size_t i = 0; i < x.rows; ++i) rows::affine(x.row(i), w, bias, y.row(i));
}

void accumulate_xt_d(ConstMatrixSpan x, ConstMatrixSpan d, MatrixSpan g) {
  for (std::size_t k = 0; k < g.rows; ++k) rows::accumulate_xt_d(x, d, k, g.row(k));
}

void matmul_d_wt(ConstMatrixSpan d, ConstMatrixSpan w, MatrixSpan r) {
  for (std::size_t i = 0; i < d.rows; ++i) rows::matmul_d_wt(d.row(i), w, r.row(i));
}

void gmm_e_step(std::span<const double> y, std::span<const double> log_weights,
                std::span<const double> means, std::span<const double> variances,
                MatrixSpan gamma, std::span<double> log_norm, std::span<double> q_terms) {
  for (std::size_t n = 0; n < y.size(); ++n) {
    rows::gmm_e_step(y[n], log_weights, means, variances, gamma.row(n), log_norm[n],
                     q_terms[n]);
  }
}

}  // namespace dfl::kernels::reference

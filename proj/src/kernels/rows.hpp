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

// Per-row bodies shared by the serial and OpenMP kernel drivers. They live in
// their own translation unit so both drivers call the same machine code.

#ifndef DFL_SRC_KERNELS_ROWS_HPP_
#define DFL_SRC_KERNELS_ROWS_HPP_

#include <cstddef>
#include <span>

#include "dfl/numkit.hpp"

namespace dfl::kernels::rows {

void affine(std::span<const double> x_row, ConstMatrixSpan w, std::span<const double> bias,
            std::span<double> y_row);

// Row k of g += x^T d.
void accumulate_xt_d(ConstMatrixSpan x, ConstMatrixSpan d, std::size_t k,
                     std::span<double> g_row);

void matmul_d_wt(std::span<const double> d_row, ConstMatrixSpan w, std::span<double> r_row);

void gmm_e_step(double y, std::span<const double> log_weights, std::span<const double> means,
                std::span<const double> variances, std::span<double> gamma_row,
                double& log_norm, double& q_term);

}  // namespace dfl::kernels::rows

#endif  // DFL_SRC_KERNELS_ROWS_HPP_

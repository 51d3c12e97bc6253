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

// Data-parallel inner loops of the simulator.
//
// dfl::kernels::*            OpenMP row-parallel versions used by the library.
// dfl::kernels::reference::* serial versions, kept for tests and benchmarks.
//
// Both call the same per-row routines, and work is split only across output
// rows, so the two produce bitwise-identical results for any thread count.
// No kernel validates shapes; callers do.

#ifndef DFL_KERNELS_HPP_
#define DFL_KERNELS_HPP_

#include <span>

#include "dfl/numkit.hpp"

namespace dfl::kernels {

// y = x * w + bias (bias broadcast over rows; empty bias means none).
// x: n x in, w: in x out, y: n x out. Zero entries of x are skipped.
void affine(ConstMatrixSpan x, ConstMatrixSpan w, std::span<const double> bias, MatrixSpan y);

// g += x^T * d. x: n x in, d: n x out, g: in x out.
void accumulate_xt_d(ConstMatrixSpan x, ConstMatrixSpan d, MatrixSpan g);

// r = d * w^T. d: n x out, w: in x out, r: n x in.
void matmul_d_wt(ConstMatrixSpan d, ConstMatrixSpan w, MatrixSpan r);

// 1-D Gaussian mixture E-step in log space. For each sample n:
//   log_norm[n] = ln sum_m exp(lp_nm),  lp_nm = log_weights[m] + ln N(y_n; mean_m, var_m)
//   gamma(n, m) = exp(lp_nm - log_norm[n])
//   q_terms[n]  = sum_m gamma(n, m) * lp_nm
// gamma: n x M.
void gmm_e_step(std::span<const double> y, std::span<const double> log_weights,
                std::span<const double> means, std::span<const double> variances,
                MatrixSpan gamma, std::span<double> log_norm, std::span<double> q_terms);

namespace reference {

void affine(ConstMatrixSpan x, ConstMatrixSpan w, std::span<const double> bias, MatrixSpan y);
void accumulate_xt_d(ConstMatrixSpan x, ConstMatrixSpan d, MatrixSpan g);
void matmul_d_wt(ConstMatrixSpan d, ConstMatrixSpan w, MatrixSpan r);
void gmm_e_step(std::span<const double> y, std::span<const double> log_weights,
                std::span<const double> means, std::span<const double> variances,
                MatrixSpan gamma, std::span<double> log_norm, std::span<double> q_terms);

}  // namespace reference

// Worker count for parallel regions (both kernels and per-node fan-out).
// 0 restores the OpenMP default.
void set_num_threads(int threads);
int num_threads();

}  // namespace dfl::kernels

#endif  // DFL_KERNELS_HPP_

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

// Small deterministic numeric toolkit: dense row-major matrices, a seeded
// random stream with platform-independent distributions, and the stable
// log-domain helpers used by the EM and softmax code.

#ifndef DFL_NUMKIT_HPP_
#define DFL_NUMKIT_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace dfl {

// Non-owning row-major view. Kernels operate on these so that they can be
// pointed at slices of a flat parameter vector as easily as at a Matrix.
struct MatrixSpan {
  std::span<double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  double& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) const { return data.subspan(r * cols, cols); }
};

struct ConstMatrixSpan {
  std::span<const double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  ConstMatrixSpan() = default;
  ConstMatrixSpan(std::span<const double> d, std::size_t r, std::size_t c)
      : data(d), rows(r), cols(c) {}
  ConstMatrixSpan(const MatrixSpan& m)  // NOLINT(google-explicit-constructor)
      : data(m.data), rows(m.rows), cols(m.cols) {}

  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return data.subspan(r * cols, cols);
  }
};

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  // Throws InvalidArgumentError if data.size() != rows * cols.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  MatrixSpan view() { return {data_, rows_, cols_}; }
  ConstMatrixSpan view() const { return {data_, rows_, cols_}; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

// Tags for sub-stream derivation. Values are part of the reproducibility
// contract: changing them changes every experiment's output.
enum class StreamPurpose : std::uint64_t {
  kSubset = 1,
  kPartition = 2,
  kModelInit = 3,
  kTrain = 4,
  kFit = 5,
  kSplit = 6,
  kSynthetic = 7,
};

// Node id used for streams that belong to the federation rather than a node.
inline constexpr std::uint64_t kFederationStream = ~std::uint64_t{0};

// splitmix64-based mix of (seed, node, purpose). Order of node creation or
// execution never affects which stream a node gets.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t node_id, StreamPurpose purpose);

// Seeded random stream. The engine is std::mt19937_64; every distribution is
// implemented here because the std:: distributions are implementation-defined
// and would break cross-toolchain reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  static Rng for_stream(std::uint64_t seed, std::uint64_t node_id, StreamPurpose purpose) {
    return Rng(derive_seed(seed, node_id, purpose));
  }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Unbiased integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);
  // Standard normal via the Marsaglia polar method.
  double normal();

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
};

// Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 is handled with the
// U^(1/shape) boost. Throws InvalidArgumentError for shape <= 0 or non-finite.
double sample_gamma(Rng& rng, double shape);

// Fisher-Yates with Rng::uniform_index.
template <typename T>
void shuffle(std::span<T> values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    std::size_t j = rng.uniform_index(i);
    std::swap(values[i - 1], values[j]);
  }
}

// ln(sum(exp(v))). Throws InvalidArgumentError on empty input.
double log_sum_exp(std::span<const double> values);

void softmax_inplace(std::span<double> values);
std::vector<double> softmax(std::span<const double> values);

}  // namespace dfl

#endif  // DFL_NUMKIT_HPP_

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

// Local training: a fully connected ReLU network with softmax output, trained
// by minibatch SGD on cross-entropy with an optional proximal term, and
// macro-F1 evaluation.

#ifndef DFL_LEARNER_HPP_
#define DFL_LEARNER_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dfl/datahub.hpp"
#include "dfl/numkit.hpp"

namespace dfl {

struct MlpShape {
  std::size_t n_features = 0;
  std::vector<std::size_t> hidden = {256, 128};
  std::size_t n_classes = 0;

  // n_features, hidden..., n_classes
  std::vector<std::size_t> layer_sizes() const;
  std::size_t parameter_count() const;

  bool operator==(const MlpShape&) const = default;
};

// Flat parameter vector. Layer l stores its weight matrix (fan_in x fan_out,
// row-major) followed by its bias, layers in order.
struct ModelWeights {
  MlpShape shape;
  std::vector<double> values;

  static ModelWeights zeros(const MlpShape& shape);

  // Throws ConsistencyError on a length mismatch or non-finite entry.
  void validate() const;

  bool operator==(const ModelWeights&) const = default;
};

// Checkpoint/exchange encoding: one line of JSON shape header, then the
// parameters as little-endian IEEE-754 float32. Decoding widens back to
// double, so a round trip rounds every parameter to float precision.
std::string serialize_weights(const ModelWeights& weights);
ModelWeights deserialize_weights(std::string_view bytes);

// Glorot-uniform weights, zero biases.
ModelWeights init_weights(const MlpShape& shape, Rng& rng);

// Rows of the result are class probabilities. Throws ConsistencyError when the
// feature width does not match the shape.
Matrix forward(const ModelWeights& weights, ConstMatrixSpan features);

// Mean cross-entropy over the batch plus (mu / 2) * ||w - anchor||^2. Writes
// the gradient into `gradient` (parameter_count entries) unless it is empty.
// `anchor` is only read when mu > 0.
double loss_and_gradient(const ModelWeights& weights, ConstMatrixSpan features,
                         std::span<const int> labels, double mu, const ModelWeights& anchor,
                         std::span<double> gradient);

struct TrainConfig {
  int epochs = 3;
  std::size_t batch_size = 64;
  double learning_rate = 0.01;
  double mu = 0.0;  // proximal strength; 0 disables it

  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

struct TrainResult {
  ModelWeights weights;
  std::vector<double> epoch_losses;  // mean minibatch objective per epoch
};

// Plain SGD over shuffled minibatches of `indices`. Throws TrainingError
// naming the epoch and batch if the loss becomes non-finite.
TrainResult train_local(const ModelWeights& weights_in, const Dataset& data,
                        std::span<const std::size_t> indices, const TrainConfig& config, Rng& rng,
                        const ModelWeights& anchor);

struct EvalReport {
  double macro_f1 = 0.0;
  double loss = 0.0;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  // Classes absent from the evaluated truth labels; they are left out of the
  // macro mean.
  std::vector<int> excluded_classes;
  std::size_t n_samples = 0;
};

// Per-class scores from a confusion of truth vs prediction. loss is left 0.
EvalReport classification_report(std::span<const int> truth, std::span<const int> predicted,
                                  int n_classes);

EvalReport evaluate(const ModelWeights& weights, const Dataset& data,
                    std::span<const std::size_t> indices);

}  // namespace dfl

#endif  // DFL_LEARNER_HPP_

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

#include "dfl/learner.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "dfl/errors.hpp"
#include "dfl/kernels.hpp"

namespace dfl {

std::vector<std::size_t> MlpShape::layer_sizes() const {
  std::vector<std::size_t> sizes;
  sizes.push_back(n_features);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(n_classes);
  return sizes;
}

std::size_t MlpShape::parameter_count() const {
  const auto sizes = layer_sizes();
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) count += (sizes[l] + 1) * sizes[l + 1];
  return count;
}

ModelWeights ModelWeights::zeros(const MlpShape& shape) {
  return {shape, std::vector<double>(shape.parameter_count(), 0.0)};
}

void ModelWeights::validate() const {
  if (shape.n_features == 0 || shape.n_classes < 2) {
    throw ConsistencyError("model shape needs n_features >= 1 and n_classes >= 2");
  }
  if (values.size() != shape.parameter_count()) {
    throw ConsistencyError("model has " + std::to_string(values.size()) +
                           " parameters, shape expects " +
                           std::to_string(shape.parameter_count()));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw ConsistencyError("model has a non-finite parameter");
  }
}

namespace {

struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t offset = 0;  // weights at offset, bias at offset + in * out
};

std::vector<Layer> layers_of(const MlpShape& shape) {
  const auto sizes = shape.layer_sizes();
  std::vector<Layer> layers;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    layers.push_back({sizes[l], sizes[l + 1], offset});
    offset += (sizes[l] + 1) * sizes[l + 1];
  }
  return layers;
}

ConstMatrixSpan weight_view(std::span<const double> values, const Layer& layer) {
  return {values.subspan(layer.offset, layer.in * layer.out), layer.in, layer.out};
}

std::span<const double> bias_view(std::span<const double> values, const Layer& layer) {
  return values.subspan(layer.offset + layer.in * layer.out, layer.out);
}

void ensure(Matrix& m, std::size_t rows, std::size_t cols) {
  if (m.rows() != rows || m.cols() != cols) m = Matrix(rows, cols);
}

// Per-batch buffers, reused across minibatches.
struct Workspace {
  std::vector<Matrix> pre;    // affine output per layer
  std::vector<Matrix> post;   // ReLU output (hidden) or probabilities (last)
  std::vector<Matrix> delta;  // d loss / d pre
  Matrix back;                // d loss / d post of the previous layer
};

void forward_pass(std::span<const double> values, const std::vector<Layer>& layers,
                  ConstMatrixSpan x, Workspace& ws) {
  const std::size_t n = x.rows;
  ws.pre.resize(layers.size());
  ws.post.resize(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    ensure(ws.pre[l], n, layer.out);
    ensure(ws.post[l], n, layer.out);
    const ConstMatrixSpan in = l == 0 ? x : ws.post[l - 1].view();
    kernels::affine(in, weight_view(values, layer), bias_view(values, layer), ws.pre[l].view());
    auto pre = ws.pre[l].values();
    auto post = ws.post[l].values();
    if (l + 1 < layers.size()) {
      for (std::size_t i = 0; i < pre.size(); ++i) post[i] = pre[i] > 0.0 ? pre[i] : 0.0;
    } else {
      std::copy(pre.begin(), pre.end(), post.begin());
      for (std::size_t r = 0; r < n; ++r) softmax_inplace(ws.post[l].row(r));
    }
  }
}

double cross_entropy(const Matrix& logits, std::span<const int> labels) {
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    total += log_sum_exp(row) - row[static_cast<std::size_t>(labels[r])];
  }
  return total / static_cast<double>(logits.rows());
}

void check_inputs(const ModelWeights& weights, ConstMatrixSpan features) {
  if (features.cols != weights.shape.n_features) {
    throw ConsistencyError("feature width " + std::to_string(features.cols) +
                           " does not match model input " +
                           std::to_string(weights.shape.n_features));
  }
  if (weights.values.size() != weights.shape.parameter_count()) {
    throw ConsistencyError("model parameter vector does not match its shape");
  }
}

void write_f32_le(std::string& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<char>((bits >> s) & 0xffu));
}

float read_f32_le(const unsigned char* p) {
  const std::uint32_t bits = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) |
                             (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
  return std::bit_cast<float>(bits);
}

}  // namespace

std::string serialize_weights(const ModelWeights& weights) {
  weights.validate();
  nlohmann::ordered_json header;
  header["format"] = "dfl-mlp";
  header["dtype"] = "float32-le";
  header["n_features"] = weights.shape.n_features;
  header["hidden"] = weights.shape.hidden;
  header["n_classes"] = weights.shape.n_classes;
  header["count"] = weights.values.size();
  std::string out = header.dump();
  out.push_back('\n');
  out.reserve(out.size() + 4 * weights.values.size());
  for (double v : weights.values) write_f32_le(out, static_cast<float>(v));
  return out;
}

ModelWeights deserialize_weights(std::string_view bytes) {
  const auto newline = bytes.find('\n');
  if (newline == std::string_view::npos) throw FormatError("weights: missing header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(0, newline));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("weights header: ") + e.what());
  }
  ModelWeights w;
  std::size_t count = 0;
  try {
    if (header.at("format") != "dfl-mlp" || header.at("dtype") != "float32-le") {
      throw FormatError("weights: unsupported format or dtype");
    }
    w.shape.n_features = header.at("n_features").get<std::size_t>();
    w.shape.hidden = header.at("hidden").get<std::vector<std::size_t>>();
    w.shape.n_classes = header.at("n_classes").get<std::size_t>();
    count = header.at("count").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("weights header: ") + e.what());
  }
  if (count != w.shape.parameter_count()) {
    throw FormatError("weights: count " + std::to_string(count) + " does not match shape");
  }
  const std::string_view payload = bytes.substr(newline + 1);
  if (payload.size() != 4 * count) {
    throw FormatError("weights: payload has " + std::to_string(payload.size()) + " bytes, expected " +
                      std::to_string(4 * count));
  }
  const auto* p = reinterpret_cast<const unsigned char*>(payload.data());
  w.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) w.values[i] = read_f32_le(p + 4 * i);
  w.validate();
  return w;
}

ModelWeights init_weights(const MlpShape& shape, Rng& rng) {
  ModelWeights w = ModelWeights::zeros(shape);
  for (const Layer& layer : layers_of(shape)) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    for (std::size_t i = 0; i < layer.in * layer.out; ++i) {
      w.values[layer.offset + i] = rng.uniform(-limit, limit);
    }
  }
  return w;
}

Matrix forward(const ModelWeights& weights, ConstMatrixSpan features) {
  check_inputs(weights, features);
  Workspace ws;
  forward_pass(weights.values, layers_of(weights.shape), features, ws);
  return std::move(ws.post.back());
}

namespace {

double loss_and_gradient_impl(const ModelWeights& weights, const std::vector<Layer>& layers,
                              ConstMatrixSpan x, std::span<const int> labels, double mu,
                              const ModelWeights& anchor, std::span<double> gradient,
                              Workspace& ws) {
  forward_pass(weights.values, layers, x, ws);
  double loss = cross_entropy(ws.pre.back(), labels);
  const std::span<const double> w = weights.values;

  if (mu > 0.0) {
    double sq = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double d = w[i] - anchor.values[i];
      sq += d * d;
    }
    loss += 0.5 * mu * sq;
  }
  if (gradient.empty()) return loss;

  const std::size_t n = x.rows;
  const double inv_n = 1.0 / static_cast<double>(n);
  std::fill(gradient.begin(), gradient.end(), 0.0);
  ws.delta.resize(layers.size());

  // Softmax + cross-entropy: d/dz = (p - onehot) / n.
  const std::size_t last = layers.size() - 1;
  ensure(ws.delta[last], n, layers[last].out);
  for (std::size_t r = 0; r < n; ++r) {
    const auto p = ws.post[last].row(r);
    auto d = ws.delta[last].row(r);
    for (std::size_t c = 0; c < p.size(); ++c) d[c] = p[c] * inv_n;
    d[static_cast<std::size_t>(labels[r])] -= inv_n;
  }

  for (std::size_t l = layers.size(); l-- > 0;) {
    const Layer& layer = layers[l];
    const ConstMatrixSpan in = l == 0 ? x : ws.post[l - 1].view();
    MatrixSpan g_w{gradient.subspan(layer.offset, layer.in * layer.out), layer.in, layer.out};
    kernels::accumulate_xt_d(in, ws.delta[l].view(), g_w);
    auto g_b = gradient.subspan(layer.offset + layer.in * layer.out, layer.out);
    for (std::size_t r = 0; r < n; ++r) {
      const auto d = ws.delta[l].row(r);
      for (std::size_t c = 0; c < layer.out; ++c) g_b[c] += d[c];
    }
    if (l == 0) break;
    ensure(ws.back, n, layer.in);
    kernels::matmul_d_wt(ws.delta[l].view(), weight_view(w, layer), ws.back.view());
    ensure(ws.delta[l - 1], n, layer.in);
    const auto pre = ws.pre[l - 1].values();
    const auto back = ws.back.values();
    auto d = ws.delta[l - 1].values();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = pre[i] > 0.0 ? back[i] : 0.0;
  }

  if (mu > 0.0) {
    for (std::size_t i = 0; i < w.size(); ++i) gradient[i] += mu * (w[i] - anchor.values[i]);
  }
  return loss;
}

void check_labels(std::span<const int> labels, std::size_t rows, std::size_t n_classes) {
  if (labels.size() != rows) throw ConsistencyError("label count does not match batch rows");
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= n_classes) {
      throw ConsistencyError("label " + std::to_string(l) + " outside the model's classes");
    }
  }
}

}  // namespace

double loss_and_gradient(const ModelWeights& weights, ConstMatrixSpan features,
                         std::span<const int> labels, double mu, const ModelWeights& anchor,
                         std::span<double> gradient) {
  check_inputs(weights, features);
  check_labels(labels, features.rows, weights.shape.n_classes);
  if (features.rows == 0) throw InvalidArgumentError("loss_and_gradient: empty batch");
  if (mu > 0.0 && anchor.values.size() != weights.values.size()) {
    throw ConsistencyError("proximal anchor does not match the model shape");
  }
  if (!gradient.empty() && gradient.size() != weights.values.size()) {
    throw ConsistencyError("gradient buffer does not match the model shape");
  }
  Workspace ws;
  return loss_and_gradient_impl(weights, layers_of(weights.shape), features, labels, mu, anchor,
                                gradient, ws);
}

void TrainConfig::validate() const {
  if (epochs < 0) throw InvalidArgumentError("epochs must be >= 0");
  if (batch_size < 1) throw InvalidArgumentError("batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgumentError("learning_rate must be finite and >= 0");
  }
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw InvalidArgumentError("mu must be finite and >= 0");
}

TrainResult train_local(const ModelWeights& weights_in, const Dataset& data,
                        std::span<const std::size_t> indices, const TrainConfig& config, Rng& rng,
                        const ModelWeights& anchor) {
  config.validate();
  if (indices.empty()) throw InvalidArgumentError("train_local: empty data slice");
  check_inputs(weights_in, data.features.view());
  if (config.mu > 0.0 && anchor.values.size() != weights_in.values.size()) {
    throw ConsistencyError("proximal anchor does not match the model shape");
  }

  TrainResult result{weights_in, {}};
  const auto layers = layers_of(weights_in.shape);
  const std::size_t nf = data.n_features();
  std::vector<std::size_t> order(indices.begin(), indices.end());
  std::vector<double> gradient(weights_in.values.size());
  Workspace ws;
  Matrix batch;
  std::vector<int> batch_labels;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(std::span(order), rng);
    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t rows = std::min(config.batch_size, order.size() - start);
      ensure(batch, rows, nf);
      batch_labels.resize(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t src = order[start + r];
        const auto row = data.features.row(src);
        std::copy(row.begin(), row.end(), batch.row(r).begin());
        batch_labels[r] = data.labels[src];
      }
      const double loss = loss_and_gradient_impl(result.weights, layers, batch.view(), batch_labels,
                                                 config.mu, anchor, gradient, ws);
      if (!std::isfinite(loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(n_batches));
      }
      auto& w = result.weights.values;
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= config.learning_rate * gradient[i];
      epoch_loss += loss;
      ++n_batches;
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(n_batches));
  }
  return result;
}

EvalReport classification_report(std::span<const int> truth, std::span<const int> predicted,
                                  int n_classes) {
  if (truth.size() != predicted.size()) {
    throw ConsistencyError("truth and prediction lengths differ");
  }
  if (truth.empty()) throw InvalidArgumentError("classification_report: no samples");
  const auto c = static_cast<std::size_t>(n_classes);
  std::vector<std::size_t> tp(c, 0), fp(c, 0), fn(c, 0), support(c, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto t = static_cast<std::size_t>(truth[i]);
    const auto p = static_cast<std::size_t>(predicted[i]);
    if (t >= c || p >= c) throw ConsistencyError("label outside [0, n_classes)");
    ++support[t];
    if (t == p) {
      ++tp[t];
    } else {
      ++fp[p];
      ++fn[t];
    }
  }
  EvalReport report;
  report.n_samples = truth.size();
  report.precision.assign(c, 0.0);
  report.recall.assign(c, 0.0);
  report.f1.assign(c, 0.0);
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t k = 0; k < c; ++k) {
    const double p_den = static_cast<double>(tp[k] + fp[k]);
    const double r_den = static_cast<double>(tp[k] + fn[k]);
    const double precision = p_den > 0 ? static_cast<double>(tp[k]) / p_den : 0.0;
    const double recall = r_den > 0 ? static_cast<double>(tp[k]) / r_den : 0.0;
    report.precision[k] = precision;
    report.recall[k] = recall;
    report.f1[k] = precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    if (support[k] == 0) {
      report.excluded_classes.push_back(static_cast<int>(k));
      continue;
    }
    sum += report.f1[k];
    ++present;
  }
  report.macro_f1 = sum / static_cast<double>(present);
  return report;
}

EvalReport evaluate(const ModelWeights& weights, const Dataset& data,
                    std::span<const std::size_t> indices) {
  if (indices.empty()) throw InvalidArgumentError("evaluate: empty data slice");
  check_inputs(weights, data.features.view());
  const auto layers = layers_of(weights.shape);
  constexpr std::size_t kChunk = 512;
  const std::size_t nf = data.n_features();

  std::vector<int> truth;
  std::vector<int> predicted;
  truth.reserve(indices.size());
  predicted.reserve(indices.size());
  double loss_sum = 0.0;
  Workspace ws;
  Matrix chunk;
  for (std::size_t start = 0; start < indices.size(); start += kChunk) {
    const std::size_t rows = std::min(kChunk, indices.size() - start);
    ensure(chunk, rows, nf);
    std::vector<int> labels(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t src = indices[start + r];
      const auto row = data.features.row(src);
      std::copy(row.begin(), row.end(), chunk.row(r).begin());
      labels[r] = data.labels[src];
    }
    forward_pass(weights.values, layers, chunk.view(), ws);
    loss_sum += cross_entropy(ws.pre.back(), labels) * static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto p = ws.post.back().row(r);
      predicted.push_back(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
      truth.push_back(labels[r]);
    }
  }
  EvalReport report =
      classification_report(truth, predicted, static_cast<int>(weights.shape.n_classes));
  report.loss = loss_sum / static_cast<double>(indices.size());
  return report;
}

}  // namespace dfl

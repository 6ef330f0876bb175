// Copyright 2026 The rosskit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rosskit/refmodel.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "rosskit/error.h"

namespace rosskit {
namespace {

void Affine(const DenseLayer& layer, std::span<const double> in, Vector& out) {
  out.assign(layer.bias.begin(), layer.bias.end());
  for (std::size_t r = 0; r < layer.out; ++r) {
    const double* row = layer.weights.data() + r * layer.in;
    double acc = out[r];
    for (std::size_t c = 0; c < layer.in; ++c) acc += row[c] * in[c];
    out[r] = acc;
  }
}

// out = W^T g
void AffineTranspose(const DenseLayer& layer, const Vector& g, Vector& out) {
  out.assign(layer.in, 0.0);
  for (std::size_t r = 0; r < layer.out; ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    const double* row = layer.weights.data() + r * layer.in;
    for (std::size_t c = 0; c < layer.in; ++c) out[c] += row[c] * gr;
  }
}

void CheckInput(const RefModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "input has dimension " + std::to_string(x.size()) +
                    ", model expects " + std::to_string(model.input_dim()));
  }
}

// Activations of every layer: acts[0] = x, acts[l] = output of layer l
// (rectified for hidden layers). pre[l] holds the pre-activation of layer l.
struct Trace {
  std::vector<Vector> acts;
  std::vector<Vector> pre;
};

Trace RunForward(const std::vector<DenseLayer>& layers,
                 std::span<const double> x) {
  Trace t;
  t.acts.reserve(layers.size() + 1);
  t.pre.resize(layers.size());
  t.acts.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Affine(layers[l], t.acts.back(), t.pre[l]);
    Vector a = t.pre[l];
    if (l + 1 < layers.size()) {
      for (double& v : a) v = v > 0.0 ? v : 0.0;
    }
    t.acts.push_back(std::move(a));
  }
  return t;
}

// Backpropagates from d(out)/d(logits) (+ d/d(features)) down to the
// input. When param_grads is non-null, accumulates dW and db per layer.
Vector Backward(const std::vector<DenseLayer>& layers, const Trace& t,
                const Vector& d_logits, const Vector& d_features,
                std::vector<DenseLayer>* param_grads) {
  Vector g = d_logits;
  Vector next;
  for (std::size_t li = layers.size(); li-- > 0;) {
    const DenseLayer& layer = layers[li];
    if (li + 1 < layers.size()) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(t.pre[li][i] > 0.0)) g[i] = 0.0;
      }
    }
    if (param_grads != nullptr) {
      DenseLayer& pg = (*param_grads)[li];
      const Vector& in = t.acts[li];
      for (std::size_t r = 0; r < layer.out; ++r) {
        if (g[r] == 0.0) continue;
        pg.bias[r] += g[r];
        double* row = pg.weights.data() + r * layer.in;
        for (std::size_t c = 0; c < layer.in; ++c) row[c] += g[r] * in[c];
      }
    }
    AffineTranspose(layer, g, next);
    g.swap(next);
    if (li + 1 == layers.size() && !d_features.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += d_features[i];
    }
  }
  return g;
}

}  // namespace

RefModel::RefModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "model needs at least one layer");
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    if (layer.in == 0 || layer.out == 0 ||
        layer.weights.size() != layer.in * layer.out ||
        layer.bias.size() != layer.out) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "layer " + std::to_string(l) + " has inconsistent shape");
    }
    if (l > 0 && layers_[l - 1].out != layer.in) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "layer " + std::to_string(l) + " does not chain");
    }
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(layer.weights.begin(), layer.weights.end(), finite) ||
        !std::all_of(layer.bias.begin(), layer.bias.end(), finite)) {
      throw Error(ErrorCode::kNonFiniteData, "non-finite model parameter");
    }
  }
}

RefModel RefModel::RandomInit(std::span<const std::size_t> layer_dims,
                              std::uint64_t seed) {
  if (layer_dims.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "layer_dims needs input and output sizes");
  }
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    DenseLayer layer;
    layer.in = layer_dims[l];
    layer.out = layer_dims[l + 1];
    if (layer.in == 0 || layer.out == 0) {
      throw Error(ErrorCode::kInvalidArgument, "layer sizes must be positive");
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    layer.weights.resize(layer.in * layer.out);
    layer.bias.resize(layer.out);
    for (double& w : layer.weights) w = dist(rng);
    for (double& b : layer.bias) b = dist(rng);
    layers.push_back(std::move(layer));
  }
  return RefModel(std::move(layers));
}

ForwardResult RefModel::Forward(std::span<const double> x) const {
  CheckInput(*this, x);
  Trace t = RunForward(layers_, x);
  ForwardResult out;
  out.logits = std::move(t.acts.back());
  out.features = std::move(t.acts[layers_.size() - 1]);
  return out;
}

InputGradient RefModel::Gradient(std::span<const double> x,
                                 const OutputScoreFn& score) const {
  CheckInput(*this, x);
  const Trace t = RunForward(layers_, x);
  const OutputGradient og =
      score(t.acts.back(), t.acts[layers_.size() - 1]);
  if (og.d_logits.size() != num_classes() ||
      (!og.d_features.empty() && og.d_features.size() != feature_dim())) {
    throw Error(ErrorCode::kDimensionMismatch,
                "score gradient does not match model outputs");
  }
  InputGradient out;
  out.value = og.value;
  out.gradient = Backward(layers_, t, og.d_logits, og.d_features, nullptr);
  return out;
}

std::vector<std::size_t> RefModel::layer_dims() const {
  std::vector<std::size_t> dims{layers_.front().in};
  for (const DenseLayer& l : layers_) dims.push_back(l.out);
  return dims;
}

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0) || epochs < 1 || batch_size < 1 ||
      !(l2_penalty >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid training config");
  }
}

namespace {

void CheckLabeled(const LabeledData& data, std::size_t input_dim,
                  std::size_t classes) {
  if (data.inputs.empty()) {
    throw Error(ErrorCode::kEmptyInput, "training data is empty");
  }
  if (data.inputs.size() != data.labels.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "inputs and labels differ");
  }
  for (std::size_t i = 0; i < data.inputs.size(); ++i) {
    if (data.inputs[i].size() != input_dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "training input has wrong dimension");
    }
    if (data.labels[i] < 0 ||
        static_cast<std::size_t>(data.labels[i]) >= classes) {
      throw Error(ErrorCode::kInvalidArgument,
                  "label " + std::to_string(data.labels[i]) +
                      " out of range");
    }
  }
}

double CrossEntropy(const Vector& logits, int label) {
  return LogSumExp(logits) - logits[static_cast<std::size_t>(label)];
}

}  // namespace

double MeanCrossEntropy(const RefModel& model, const LabeledData& data) {
  CheckLabeled(data, model.input_dim(), model.num_classes());
  double total = 0.0;
  for (std::size_t i = 0; i < data.inputs.size(); ++i) {
    total += CrossEntropy(model.Forward(data.inputs[i]).logits, data.labels[i]);
  }
  return total / static_cast<double>(data.inputs.size());
}

double Accuracy(const RefModel& model, const LabeledData& data) {
  CheckLabeled(data, model.input_dim(), model.num_classes());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.inputs.size(); ++i) {
    const Vector logits = model.Forward(data.inputs[i]).logits;
    const auto pred = std::max_element(logits.begin(), logits.end()) -
                      logits.begin();
    if (pred == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.inputs.size());
}

TrainResult Train(const LabeledData& data,
                  std::span<const std::size_t> layer_dims,
                  const TrainConfig& cfg) {
  cfg.Validate();
  RefModel init = RefModel::RandomInit(layer_dims, cfg.seed);
  CheckLabeled(data, init.input_dim(), init.num_classes());

  std::vector<DenseLayer> layers = init.layers();
  std::vector<DenseLayer> grads = layers;
  // Separate stream for batch order so init and shuffling are decoupled.
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(data.inputs.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> epoch_loss;
  epoch_loss.reserve(static_cast<std::size_t>(cfg.epochs));
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(order[i - 1], order[pick(shuffle_rng)]);
    }
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(start + batch, order.size());
      for (DenseLayer& g : grads) {
        std::fill(g.weights.begin(), g.weights.end(), 0.0);
        std::fill(g.bias.begin(), g.bias.end(), 0.0);
      }
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t idx = order[k];
        const Trace t = RunForward(layers, data.inputs[idx]);
        Vector d_logits = Softmax(t.acts.back());
        d_logits[static_cast<std::size_t>(data.labels[idx])] -= 1.0;
        Backward(layers, t, d_logits, {}, &grads);
      }
      const double scale =
          cfg.learning_rate / static_cast<double>(stop - start);
      for (std::size_t l = 0; l < layers.size(); ++l) {
        for (std::size_t j = 0; j < layers[l].weights.size(); ++j) {
          layers[l].weights[j] -=
              scale * grads[l].weights[j] +
              cfg.learning_rate * cfg.l2_penalty * layers[l].weights[j];
        }
        for (std::size_t j = 0; j < layers[l].bias.size(); ++j) {
          layers[l].bias[j] -= scale * grads[l].bias[j];
        }
      }
    }
    epoch_loss.push_back(MeanCrossEntropy(RefModel(layers), data));
  }
  return TrainResult{RefModel(std::move(layers)), std::move(epoch_loss)};
}

}  // namespace rosskit

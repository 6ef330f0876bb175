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

#ifndef ROSSKIT_REFMODEL_H_
#define ROSSKIT_REFMODEL_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rosskit/numerics.h"

namespace rosskit {

// Fully-connected layer, y = W x + b with W stored row-major (out x in).
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  Vector weights;
  Vector bias;

  double w(std::size_t row, std::size_t col) const {
    return weights[row * in + col];
  }
};

struct ForwardResult {
  Vector logits;
  // Post-activation output of the last hidden layer (the input itself for a
  // model without hidden layers).
  Vector features;
};

// Partial derivatives of a scalar score with respect to the model outputs.
// d_features may be empty when the score ignores the features.
struct OutputGradient {
  double value = 0.0;
  Vector d_logits;
  Vector d_features;
};

using OutputScoreFn =
    std::function<OutputGradient(const Vector& logits, const Vector& features)>;

struct InputGradient {
  double value = 0.0;
  Vector gradient;
};

// Small ReLU multilayer perceptron with manual reverse-mode gradients. It
// stands in for a pretrained classifier: hidden layers use a rectifier, the
// output layer is linear. Immutable after construction.
class RefModel {
 public:
  explicit RefModel(std::vector<DenseLayer> layers);

  // Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases included.
  static RefModel RandomInit(std::span<const std::size_t> layer_dims,
                             std::uint64_t seed);

  ForwardResult Forward(std::span<const double> x) const;

  // Exact gradient of score(Forward(x)) with respect to x. The rectifier
  // subgradient at 0 is 0.
  InputGradient Gradient(std::span<const double> x,
                         const OutputScoreFn& score) const;

  std::vector<std::size_t> layer_dims() const;
  std::size_t input_dim() const { return layers_.front().in; }
  std::size_t num_classes() const { return layers_.back().out; }
  std::size_t feature_dim() const { return layers_.back().in; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

 private:
  std::vector<DenseLayer> layers_;
};

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 200;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double l2_penalty = 0.0;

  void Validate() const;
};

struct LabeledData {
  std::vector<Vector> inputs;
  std::vector<int> labels;
};

struct TrainResult {
  RefModel model;
  // Mean cross-entropy (without the l2 term) over the training set at the
  // end of each epoch.
  std::vector<double> epoch_loss;
};

// Mini-batch gradient descent on softmax cross-entropy. Deterministic given
// cfg.seed: the same seed initialises the weights and shuffles the batches.
TrainResult Train(const LabeledData& data,
                  std::span<const std::size_t> layer_dims,
                  const TrainConfig& cfg);

double MeanCrossEntropy(const RefModel& model, const LabeledData& data);
double Accuracy(const RefModel& model, const LabeledData& data);

}  // namespace rosskit

#endif  // ROSSKIT_REFMODEL_H_

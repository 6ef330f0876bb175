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

#ifndef ROSSKIT_BASESCORES_H_
#define ROSSKIT_BASESCORES_H_

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "rosskit/numerics.h"
#include "rosskit/refmodel.h"

namespace rosskit {

// Base OOD scores. Every score is oriented so that higher means more
// in-distribution. Argmax and sort ties resolve to the lowest class index.

double Msp(std::span<const double> logits);

// Negated free energy: T * log(sum_c exp(l_c / T)).
double Energy(std::span<const double> logits, double temperature = 1.0);

// Negated generalised entropy over the top-M softmax probabilities:
// -sum_{i<M} p_i^gamma (1 - p_i)^gamma. m <= 0 selects min(C, 100).
double Gen(std::span<const double> logits, double gamma = 0.1, int m = 0);

// Geometry of the final linear layer plus the mean training feature.
class FdbdContext {
 public:
  FdbdContext(std::vector<Vector> class_weights, Vector class_biases,
              Vector mu_train);

  // Uses the model's output layer; mu_train must match feature_dim().
  static FdbdContext FromModel(const RefModel& model, Vector mu_train);

  std::size_t num_classes() const { return class_weights_.size(); }
  std::size_t feature_dim() const { return mu_train_.size(); }
  const std::vector<Vector>& class_weights() const { return class_weights_; }
  const Vector& class_biases() const { return class_biases_; }
  const Vector& mu_train() const { return mu_train_; }
  // ||w_i - w_j||, precomputed.
  double weight_distance(std::size_t i, std::size_t j) const {
    return distances_[i * num_classes() + j];
  }

 private:
  std::vector<Vector> class_weights_;
  Vector class_biases_;
  Vector mu_train_;
  Vector distances_;
};

// Mean over non-predicted classes of the logit margin divided by the weight
// distance, normalised by ||features - mu_train||.
double Fdbd(std::span<const double> logits, std::span<const double> features,
            const FdbdContext& ctx);

enum class ScorerKind { kMsp, kEbo, kGen, kFdbd };

std::string_view ScorerKindName(ScorerKind kind);
ScorerKind ParseScorerKind(std::string_view name);

struct ScorerParams {
  double temperature = 1.0;
  double gamma = 0.1;
  int gen_m = 0;
  std::optional<FdbdContext> fdbd;
};

// A configured base score with its analytic derivatives.
class Scorer {
 public:
  Scorer(ScorerKind kind, ScorerParams params);

  static Scorer MakeMsp() { return Scorer(ScorerKind::kMsp, {}); }
  static Scorer MakeEnergy(double temperature = 1.0);
  static Scorer MakeGen(double gamma = 0.1, int m = 0);
  static Scorer MakeFdbd(FdbdContext ctx);

  ScorerKind kind() const { return kind_; }
  const ScorerParams& params() const { return params_; }
  bool uses_features() const { return kind_ == ScorerKind::kFdbd; }

  double Score(std::span<const double> logits,
               std::span<const double> features) const;

  // Score plus d/dlogits and d/dfeatures (empty unless uses_features()).
  OutputGradient ScoreGradient(std::span<const double> logits,
                               std::span<const double> features) const;

 private:
  ScorerKind kind_;
  ScorerParams params_;
};

// The scorer composed with a model: x -> score(f(x)).
double ScoreInput(const RefModel& model, const Scorer& scorer,
                  std::span<const double> x);
InputGradient ScoreInputGradient(const RefModel& model, const Scorer& scorer,
                                 std::span<const double> x);

}  // namespace rosskit

#endif  // ROSSKIT_BASESCORES_H_

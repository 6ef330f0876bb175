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

#include "rosskit/basescores.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rosskit/error.h"

namespace rosskit {
namespace {

void RequireClasses(std::span<const double> logits, std::size_t min_classes) {
  if (logits.size() < min_classes) {
    throw Error(ErrorCode::kInvalidArgument,
                "score needs at least " + std::to_string(min_classes) +
                    " classes");
  }
}

// Lowest index wins ties.
std::size_t ArgMax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) -
                                  v.begin());
}

int ResolveGenM(int m, std::size_t classes) {
  const int c = static_cast<int>(classes);
  const int resolved = m == 0 ? std::min(c, 100) : m;
  if (resolved < 1 || resolved > c) {
    throw Error(ErrorCode::kInvalidArgument,
                "GEN truncation M must lie in [1, C]");
  }
  return resolved;
}

void CheckGamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "GEN gamma must lie in (0, 1)");
  }
}

void CheckTemperature(double t) {
  if (!(t > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be positive");
  }
}

// Softmax probabilities with the top-M indices (descending, stable) and the
// complement mass 1 - p_i computed without cancellation for the top class.
struct GenTerms {
  Vector p;
  std::vector<std::size_t> top;
  Vector complement;  // aligned with `top`
};

GenTerms ComputeGenTerms(std::span<const double> logits, int m) {
  GenTerms t;
  t.p = Softmax(logits);
  std::vector<std::size_t> order(t.p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return t.p[a] > t.p[b];
  });
  t.top.assign(order.begin(), order.begin() + m);
  t.complement.resize(t.top.size());
  for (std::size_t r = 0; r < t.top.size(); ++r) {
    if (r == 0) {
      double others = 0.0;
      for (std::size_t j = 0; j < t.p.size(); ++j) {
        if (j != t.top[0]) others += t.p[j];
      }
      t.complement[r] = others;
    } else {
      t.complement[r] = 1.0 - t.p[t.top[r]];
    }
  }
  return t;
}

double FdbdMargin(std::span<const double> logits, const FdbdContext& ctx,
                  std::size_t k) {
  double total = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    if (c == k) continue;
    total += (logits[k] - logits[c]) / ctx.weight_distance(k, c);
  }
  return total / static_cast<double>(logits.size() - 1);
}

double FeatureRadius(std::span<const double> features, const FdbdContext& ctx) {
  if (features.size() != ctx.feature_dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "feature dimension does not match fDBD context");
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double d = features[i] - ctx.mu_train()[i];
    sq += d * d;
  }
  const double r = std::sqrt(sq);
  if (!(r > 0.0)) {
    throw Error(ErrorCode::kDegenerateFeature, "degenerate feature");
  }
  return r;
}

void CheckFdbdLogits(std::span<const double> logits, const FdbdContext& ctx) {
  RequireClasses(logits, 2);
  if (logits.size() != ctx.num_classes()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "logit count does not match fDBD context");
  }
}

}  // namespace

double Msp(std::span<const double> logits) {
  RequireClasses(logits, 2);
  const Vector p = Softmax(logits);
  return *std::max_element(p.begin(), p.end());
}

double Energy(std::span<const double> logits, double temperature) {
  CheckTemperature(temperature);
  RequireClasses(logits, 1);
  Vector scaled(logits.begin(), logits.end());
  for (double& v : scaled) v /= temperature;
  return temperature * LogSumExp(scaled);
}

double Gen(std::span<const double> logits, double gamma, int m) {
  CheckGamma(gamma);
  RequireClasses(logits, 1);
  const GenTerms t = ComputeGenTerms(logits, ResolveGenM(m, logits.size()));
  double g = 0.0;
  for (std::size_t r = 0; r < t.top.size(); ++r) {
    g += std::pow(t.p[t.top[r]], gamma) * std::pow(t.complement[r], gamma);
  }
  return -g;
}

FdbdContext::FdbdContext(std::vector<Vector> class_weights, Vector class_biases,
                         Vector mu_train)
    : class_weights_(std::move(class_weights)),
      class_biases_(std::move(class_biases)),
      mu_train_(std::move(mu_train)) {
  const std::size_t c = class_weights_.size();
  if (c < 2) {
    throw Error(ErrorCode::kInvalidArgument, "fDBD needs at least 2 classes");
  }
  if (class_biases_.size() != c) {
    throw Error(ErrorCode::kDimensionMismatch,
                "fDBD biases do not match class count");
  }
  for (const Vector& w : class_weights_) {
    if (w.size() != mu_train_.size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "fDBD weight rows do not match mu_train");
    }
  }
  distances_.assign(c * c, 0.0);
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = i + 1; j < c; ++j) {
      double sq = 0.0;
      for (std::size_t k = 0; k < mu_train_.size(); ++k) {
        const double d = class_weights_[i][k] - class_weights_[j][k];
        sq += d * d;
      }
      const double dist = std::sqrt(sq);
      if (!(dist > 0.0)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "fDBD class weight rows must be distinct");
      }
      distances_[i * c + j] = distances_[j * c + i] = dist;
    }
  }
}

FdbdContext FdbdContext::FromModel(const RefModel& model, Vector mu_train) {
  const DenseLayer& head = model.layers().back();
  std::vector<Vector> rows(head.out);
  for (std::size_t r = 0; r < head.out; ++r) {
    rows[r].assign(head.weights.begin() + static_cast<long>(r * head.in),
                   head.weights.begin() + static_cast<long>((r + 1) * head.in));
  }
  return FdbdContext(std::move(rows), head.bias, std::move(mu_train));
}

double Fdbd(std::span<const double> logits, std::span<const double> features,
            const FdbdContext& ctx) {
  CheckFdbdLogits(logits, ctx);
  const double radius = FeatureRadius(features, ctx);
  return FdbdMargin(logits, ctx, ArgMax(logits)) / radius;
}

std::string_view ScorerKindName(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::kMsp: return "msp";
    case ScorerKind::kEbo: return "ebo";
    case ScorerKind::kGen: return "gen";
    case ScorerKind::kFdbd: return "fdbd";
  }
  return "unknown";
}

ScorerKind ParseScorerKind(std::string_view name) {
  if (name == "msp") return ScorerKind::kMsp;
  if (name == "ebo" || name == "energy") return ScorerKind::kEbo;
  if (name == "gen") return ScorerKind::kGen;
  if (name == "fdbd") return ScorerKind::kFdbd;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown scorer '" + std::string(name) + "'");
}

Scorer::Scorer(ScorerKind kind, ScorerParams params)
    : kind_(kind), params_(std::move(params)) {
  switch (kind_) {
    case ScorerKind::kEbo:
      CheckTemperature(params_.temperature);
      break;
    case ScorerKind::kGen:
      CheckGamma(params_.gamma);
      break;
    case ScorerKind::kFdbd:
      if (!params_.fdbd) {
        throw Error(ErrorCode::kInvalidArgument,
                    "fdbd scorer needs an FdbdContext");
      }
      break;
    case ScorerKind::kMsp:
      break;
  }
}

Scorer Scorer::MakeEnergy(double temperature) {
  ScorerParams p;
  p.temperature = temperature;
  return Scorer(ScorerKind::kEbo, std::move(p));
}

Scorer Scorer::MakeGen(double gamma, int m) {
  ScorerParams p;
  p.gamma = gamma;
  p.gen_m = m;
  return Scorer(ScorerKind::kGen, std::move(p));
}

Scorer Scorer::MakeFdbd(FdbdContext ctx) {
  ScorerParams p;
  p.fdbd = std::move(ctx);
  return Scorer(ScorerKind::kFdbd, std::move(p));
}

double Scorer::Score(std::span<const double> logits,
                     std::span<const double> features) const {
  switch (kind_) {
    case ScorerKind::kMsp: return Msp(logits);
    case ScorerKind::kEbo: return Energy(logits, params_.temperature);
    case ScorerKind::kGen: return Gen(logits, params_.gamma, params_.gen_m);
    case ScorerKind::kFdbd: return Fdbd(logits, features, *params_.fdbd);
  }
  return 0.0;
}

OutputGradient Scorer::ScoreGradient(std::span<const double> logits,
                                     std::span<const double> features) const {
  OutputGradient out;
  const std::size_t c = logits.size();
  switch (kind_) {
    case ScorerKind::kMsp: {
      RequireClasses(logits, 2);
      const Vector p = Softmax(logits);
      const std::size_t k = ArgMax(p);
      out.value = p[k];
      out.d_logits.resize(c);
      for (std::size_t j = 0; j < c; ++j) {
        out.d_logits[j] = p[k] * ((j == k ? 1.0 : 0.0) - p[j]);
      }
      break;
    }
    case ScorerKind::kEbo: {
      const double t = params_.temperature;
      out.value = Energy(logits, t);
      Vector scaled(logits.begin(), logits.end());
      for (double& v : scaled) v /= t;
      out.d_logits = Softmax(scaled);
      break;
    }
    case ScorerKind::kGen: {
      const double gamma = params_.gamma;
      CheckGamma(gamma);
      RequireClasses(logits, 1);
      const GenTerms t = ComputeGenTerms(logits, ResolveGenM(params_.gen_m, c));
      // b_i = p_i * dG/dp_i = gamma p^gamma q^(gamma-1) (q - p), q = 1 - p.
      // dG/dl_j = b_j q_j - p_j * sum_{i != j} b_i.
      Vector b(c, 0.0);
      Vector bq(c, 0.0);
      double g = 0.0;
      for (std::size_t r = 0; r < t.top.size(); ++r) {
        const std::size_t i = t.top[r];
        const double p = t.p[i];
        const double q = t.complement[r];
        g += std::pow(p, gamma) * std::pow(q, gamma);
        if (q > 0.0 && p > 0.0) {
          b[i] = gamma * std::pow(p, gamma) * std::pow(q, gamma - 1.0) * (q - p);
          bq[i] = gamma * std::pow(p, gamma) * std::pow(q, gamma) * (q - p);
        }
      }
      const std::size_t lead = t.top[0];
      double rest = 0.0;
      for (std::size_t r = 1; r < t.top.size(); ++r) rest += b[t.top[r]];
      out.value = -g;
      out.d_logits.resize(c);
      for (std::size_t j = 0; j < c; ++j) {
        const double others = j == lead ? rest : b[lead] + rest - b[j];
        out.d_logits[j] = -(bq[j] - t.p[j] * others);
      }
      break;
    }
    case ScorerKind::kFdbd: {
      const FdbdContext& ctx = *params_.fdbd;
      CheckFdbdLogits(logits, ctx);
      const double radius = FeatureRadius(features, ctx);
      const std::size_t k = ArgMax(logits);
      const double margin = FdbdMargin(logits, ctx, k);
      const double inv = 1.0 / (static_cast<double>(c - 1) * radius);
      out.value = margin / radius;
      out.d_logits.assign(c, 0.0);
      for (std::size_t j = 0; j < c; ++j) {
        if (j == k) continue;
        const double w = inv / ctx.weight_distance(k, j);
        out.d_logits[k] += w;
        out.d_logits[j] -= w;
      }
      out.d_features.resize(features.size());
      const double coef = -out.value / (radius * radius);
      for (std::size_t i = 0; i < features.size(); ++i) {
        out.d_features[i] = coef * (features[i] - ctx.mu_train()[i]);
      }
      break;
    }
  }
  return out;
}

double ScoreInput(const RefModel& model, const Scorer& scorer,
                  std::span<const double> x) {
  const ForwardResult f = model.Forward(x);
  return scorer.Score(f.logits, f.features);
}

InputGradient ScoreInputGradient(const RefModel& model, const Scorer& scorer,
                                 std::span<const double> x) {
  return model.Gradient(x, [&](const Vector& logits, const Vector& features) {
    return scorer.ScoreGradient(logits, features);
  });
}

}  // namespace rosskit

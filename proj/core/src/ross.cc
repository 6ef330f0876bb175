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

#include "rosskit/ross.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "rosskit/error.h"
#include "rosskit/parallel.h"

namespace rosskit {

void RossConfig::Validate() const {
  if (n_samples < 1) {
    throw Error(ErrorCode::kInvalidArgument, "n_samples must be >= 1");
  }
  if (!(sigma_noise >= 0.0) || !std::isfinite(sigma_noise)) {
    throw Error(ErrorCode::kInvalidArgument, "sigma_noise must be >= 0");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::kInvalidArgument, "lambda must be >= 0");
  }
}

RossConfig DefaultRossConfig() {
  RossConfig cfg;
  cfg.n_samples = 25;
  cfg.sigma_noise = 0.1;
  cfg.lambda = 0.05;
  return cfg;
}

ScoreStack ScoreStack::FromScores(Vector scores) {
  ScoreStack s;
  s.s_med = Median(scores);
  s.sigma_med = Mad(scores);
  s.scores = std::move(scores);
  return s;
}

Calibration CalibrateS95(std::span<const double> validation_med_scores) {
  if (validation_med_scores.size() < kMinCalibrationCount) {
    throw Error(ErrorCode::kInsufficientData,
                "insufficient calibration data: need at least " +
                    std::to_string(kMinCalibrationCount) + " values, got " +
                    std::to_string(validation_med_scores.size()));
  }
  return Calibration{Percentile(validation_med_scores, 5.0),
                     validation_med_scores.size()};
}

double RossScore(double s_med, double sigma_med, double s95, double lambda) {
  const double delta = std::max(0.0, s_med - s95);
  if (delta == 0.0) return s_med;
  const double sigma_eff = std::max(sigma_med, kSigmaFloor);
  return std::min(s95, s_med) + delta * (1.0 + lambda / sigma_eff);
}

double RossScore(const ScoreStack& stack, const Calibration& cal,
                 double lambda) {
  return RossScore(stack.s_med, stack.sigma_med, cal.s95, lambda);
}

std::vector<Vector> DrawPerturbations(std::size_t dim, const RossConfig& cfg,
                                      std::uint64_t input_index) {
  cfg.Validate();
  std::vector<Vector> eps(static_cast<std::size_t>(cfg.n_samples),
                          Vector(dim, 0.0));
  if (cfg.sigma_noise == 0.0) return eps;
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed),
                    static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(input_index),
                    static_cast<std::uint32_t>(input_index >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, cfg.sigma_noise);
  for (Vector& e : eps) {
    for (double& v : e) v = normal(rng);
  }
  return eps;
}

ScoreStack ComputeScoreStack(std::span<const double> x,
                             const BaseScoreFn& base, const RossConfig& cfg,
                             std::uint64_t input_index) {
  const std::vector<Vector> eps = DrawPerturbations(x.size(), cfg, input_index);
  Vector scores;
  scores.reserve(eps.size());
  Vector noisy(x.size());
  for (const Vector& e : eps) {
    for (std::size_t i = 0; i < x.size(); ++i) noisy[i] = x[i] + e[i];
    scores.push_back(base(noisy));
  }
  return ScoreStack::FromScores(std::move(scores));
}

std::vector<ScoreStack> ComputeScoreStacks(std::span<const Vector> inputs,
                                           const BaseScoreFn& base,
                                           const RossConfig& cfg, int jobs,
                                           std::uint64_t index_offset) {
  cfg.Validate();
  std::vector<ScoreStack> out(inputs.size());
  ParallelFor(inputs.size(), jobs, [&](std::size_t i) {
    out[i] = ComputeScoreStack(inputs[i], base, cfg, index_offset + i);
  });
  return out;
}

RossDetector::RossDetector(const RefModel& model, Scorer scorer, RossConfig cfg)
    : model_(&model), scorer_(std::move(scorer)), cfg_(cfg) {
  cfg_.Validate();
}

BaseScoreFn RossDetector::base_score() const {
  return [model = model_, scorer = &scorer_](std::span<const double> x) {
    return ScoreInput(*model, *scorer, x);
  };
}

void RossDetector::Calibrate(std::span<const Vector> validation_inputs,
                             int jobs) {
  const std::vector<ScoreStack> stacks =
      ComputeScoreStacks(validation_inputs, base_score(), cfg_, jobs);
  Vector med(stacks.size());
  for (std::size_t i = 0; i < stacks.size(); ++i) med[i] = stacks[i].s_med;
  const Calibration cal = CalibrateS95(med);
  Vector ross(stacks.size());
  for (std::size_t i = 0; i < stacks.size(); ++i) {
    ross[i] = RossScore(stacks[i], cal, cfg_.lambda);
  }
  SetCalibration(cal, Tpr95Threshold(ross));
}

void RossDetector::SetCalibration(Calibration cal, double tau) {
  if (!std::isfinite(cal.s95)) {
    throw Error(ErrorCode::kNonFiniteData, "s95 must be finite");
  }
  calibration_ = cal;
  tau_ = tau;
}

const Calibration& RossDetector::calibration() const {
  if (!calibration_) {
    throw Error(ErrorCode::kNotCalibrated, "detector is not calibrated");
  }
  return *calibration_;
}

Detection RossDetector::Detect(std::span<const double> x,
                               std::uint64_t input_index) const {
  const Calibration& cal = calibration();
  Detection d;
  d.stack = ComputeScoreStack(x, base_score(), cfg_, input_index);
  d.s_ross = RossScore(d.stack, cal, cfg_.lambda);
  d.verdict = d.s_ross >= tau_ ? Verdict::kId : Verdict::kOod;
  return d;
}

std::vector<Detection> RossDetector::DetectBatch(std::span<const Vector> inputs,
                                                 int jobs) const {
  calibration();
  std::vector<Detection> out(inputs.size());
  ParallelFor(inputs.size(), jobs,
              [&](std::size_t i) { out[i] = Detect(inputs[i], i); });
  return out;
}

nlohmann::json RossConfigToJson(const RossConfig& cfg) {
  return {{"n_samples", cfg.n_samples},
          {"sigma_noise", cfg.sigma_noise},
          {"lambda", cfg.lambda},
          {"seed", cfg.seed}};
}

RossConfig RossConfigFromJson(const nlohmann::json& doc) {
  RossConfig cfg = DefaultRossConfig();
  cfg.n_samples = doc.value("n_samples", cfg.n_samples);
  cfg.sigma_noise = doc.value("sigma_noise", cfg.sigma_noise);
  cfg.lambda = doc.value("lambda", cfg.lambda);
  cfg.seed = doc.value("seed", cfg.seed);
  cfg.Validate();
  return cfg;
}

nlohmann::json CalibrationToJson(const Calibration& cal, double tau,
                                 ScorerKind scorer, const RossConfig& cfg) {
  return {{"s95", cal.s95},
          {"source_count", cal.source_count},
          {"tau", tau},
          {"scorer", std::string(ScorerKindName(scorer))},
          {"config", RossConfigToJson(cfg)}};
}

Calibration CalibrationFromJson(const nlohmann::json& doc, double* tau) {
  try {
    Calibration cal{doc.at("s95").get<double>(),
                    doc.at("source_count").get<std::size_t>()};
    if (!std::isfinite(cal.s95)) {
      throw Error(ErrorCode::kNonFiniteData, "s95 must be finite");
    }
    if (cal.source_count < kMinCalibrationCount) {
      throw Error(ErrorCode::kInsufficientData,
                  "calibration source_count below minimum");
    }
    if (tau != nullptr) *tau = doc.value("tau", cal.s95);
    return cal;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("malformed calibration: ") + e.what());
  }
}

}  // namespace rosskit

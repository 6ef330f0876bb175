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

#ifndef ROSSKIT_ROSS_H_
#define ROSSKIT_ROSS_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "rosskit/basescores.h"
#include "rosskit/numerics.h"
#include "rosskit/refmodel.h"

namespace rosskit {

// Median-smoothed, stability-gated OOD scoring.
//
// For an input x the detector draws N Gaussian perturbations, scores each
// noisy copy with a base score, and summarises the resulting stack by its
// median (S_med) and median absolute deviation (sigma_med). Inputs whose
// S_med clears the calibrated gate S95 receive a bonus inversely
// proportional to sigma_med:
//
//   delta  = max(0, S_med - S95)
//   S_ROSS = min(S95, S_med) + delta * (1 + lambda / sigma_med)
//
// S95 is the 5th percentile of S_med over held-out ID validation data.

struct RossConfig {
  int n_samples = 25;
  double sigma_noise = 0.1;
  double lambda = 0.05;
  std::uint64_t seed = 0;

  void Validate() const;
};

// N = 25, sigma_noise = 0.1, lambda = 0.05.
RossConfig DefaultRossConfig();

inline constexpr double kSigmaFloor = 1e-9;

struct ScoreStack {
  Vector scores;
  double s_med = 0.0;
  double sigma_med = 0.0;

  static ScoreStack FromScores(Vector scores);
};

struct Calibration {
  double s95 = 0.0;
  std::size_t source_count = 0;
};

inline constexpr std::size_t kMinCalibrationCount = 20;

// Throws Error(kInsufficientData) below kMinCalibrationCount values.
Calibration CalibrateS95(std::span<const double> validation_med_scores);

// Gated score. Returns s_med exactly when s_med <= s95.
double RossScore(double s_med, double sigma_med, double s95, double lambda);
double RossScore(const ScoreStack& stack, const Calibration& cal,
                 double lambda);

using BaseScoreFn = std::function<double(std::span<const double>)>;

// Noise for input `input_index` comes from a generator seeded by
// (cfg.seed, input_index), so stacks do not depend on evaluation order.
// Noisy samples are not clipped to any domain.
ScoreStack ComputeScoreStack(std::span<const double> x,
                             const BaseScoreFn& base, const RossConfig& cfg,
                             std::uint64_t input_index);

// The perturbations used by ComputeScoreStack, exposed for tests.
std::vector<Vector> DrawPerturbations(std::size_t dim, const RossConfig& cfg,
                                      std::uint64_t input_index);

// Stacks for a batch, input i uses index index_offset + i.
std::vector<ScoreStack> ComputeScoreStacks(std::span<const Vector> inputs,
                                           const BaseScoreFn& base,
                                           const RossConfig& cfg, int jobs,
                                           std::uint64_t index_offset = 0);

enum class Verdict { kId, kOod };

struct Detection {
  double s_ross = 0.0;
  ScoreStack stack;
  Verdict verdict = Verdict::kOod;
};

// Model + base score + calibrated gate. Calibrate() must run before
// Detect(); the decision threshold tau defaults to the FPR95 threshold of
// the S_ROSS scores on the calibration set.
class RossDetector {
 public:
  RossDetector(const RefModel& model, Scorer scorer, RossConfig cfg);

  void Calibrate(std::span<const Vector> validation_inputs, int jobs = 1);
  void SetCalibration(Calibration cal, double tau);
  void SetThreshold(double tau) { tau_ = tau; }

  bool calibrated() const { return calibration_.has_value(); }
  const Calibration& calibration() const;
  double threshold() const { return tau_; }
  const RossConfig& config() const { return cfg_; }
  const Scorer& scorer() const { return scorer_; }

  Detection Detect(std::span<const double> x, std::uint64_t input_index) const;
  std::vector<Detection> DetectBatch(std::span<const Vector> inputs,
                                     int jobs) const;

  BaseScoreFn base_score() const;

 private:
  const RefModel* model_;
  Scorer scorer_;
  RossConfig cfg_;
  std::optional<Calibration> calibration_;
  double tau_ = 0.0;
};

// JSON document {s95, source_count, tau, scorer, config}.
nlohmann::json CalibrationToJson(const Calibration& cal, double tau,
                                 ScorerKind scorer, const RossConfig& cfg);
Calibration CalibrationFromJson(const nlohmann::json& doc, double* tau);

nlohmann::json RossConfigToJson(const RossConfig& cfg);
RossConfig RossConfigFromJson(const nlohmann::json& doc);

}  // namespace rosskit

#endif  // ROSSKIT_ROSS_H_

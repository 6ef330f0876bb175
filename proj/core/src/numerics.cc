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

#include "rosskit/numerics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rosskit/error.h"

namespace rosskit {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kNotCalibrated: return "not_calibrated";
    case ErrorCode::kInsufficientData: return "insufficient_data";
    case ErrorCode::kDegenerateFeature: return "degenerate_feature";
    case ErrorCode::kCorruptTensor: return "corrupt_tensor";
    case ErrorCode::kNonFiniteData: return "non_finite_data";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

ScoreSample::ScoreSample(double value) : value_(value) {
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::kNonFiniteData, "score must be finite");
  }
}

namespace {

void CheckStack(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "empty stack");
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFiniteData, "non-finite value in stack");
    }
  }
}

// Median of a scratch buffer, reordering it in place.
double MedianInPlace(std::vector<double>& v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double upper = v[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + mid);
  return (lower + upper) / 2.0;
}

}  // namespace

double Median(std::span<const double> values) {
  CheckStack(values);
  std::vector<double> scratch(values.begin(), values.end());
  return MedianInPlace(scratch);
}

double Mad(std::span<const double> values) {
  CheckStack(values);
  std::vector<double> scratch(values.begin(), values.end());
  const double med = MedianInPlace(scratch);
  for (std::size_t i = 0; i < values.size(); ++i) {
    scratch[i] = std::abs(values[i] - med);
  }
  return MedianInPlace(scratch);
}

double Percentile(std::span<const double> values, double q) {
  CheckStack(values);
  if (!(q >= 0.0 && q <= 100.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "percentile q must lie in [0, 100]");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double rank = static_cast<double>(sorted.size() - 1) * q / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Vector Softmax(std::span<const double> logits) {
  CheckStack(logits);
  const double mx = *std::max_element(logits.begin(), logits.end());
  Vector out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

double LogSumExp(std::span<const double> x) {
  CheckStack(x);
  const double mx = *std::max_element(x.begin(), x.end());
  double total = 0.0;
  for (double v : x) total += std::exp(v - mx);
  return mx + std::log(total);
}

double Auroc(std::span<const double> id_scores,
             std::span<const double> ood_scores) {
  if (id_scores.empty() || ood_scores.empty()) {
    throw Error(ErrorCode::kEmptyInput, "auroc needs ID and OOD scores");
  }
  CheckStack(id_scores);
  CheckStack(ood_scores);
  struct Item {
    double score;
    bool is_id;
  };
  std::vector<Item> items;
  items.reserve(id_scores.size() + ood_scores.size());
  for (double s : id_scores) items.push_back({s, true});
  for (double s : ood_scores) items.push_back({s, false});
  std::sort(items.begin(), items.end(),
            [](const Item& a, const Item& b) { return a.score < b.score; });

  // Twice the Mann-Whitney U statistic, kept integral so the result is exact:
  // each ID item scores 2 per OOD item strictly below it and 1 per tie.
  double twice_u = 0.0;
  std::size_t ood_below = 0;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    std::size_t id_in_group = 0;
    std::size_t ood_in_group = 0;
    while (j < items.size() && items[j].score == items[i].score) {
      (items[j].is_id ? id_in_group : ood_in_group)++;
      ++j;
    }
    twice_u += static_cast<double>(id_in_group) *
               static_cast<double>(2 * ood_below + ood_in_group);
    ood_below += ood_in_group;
    i = j;
  }
  const double pairs = static_cast<double>(id_scores.size()) *
                       static_cast<double>(ood_scores.size());
  return twice_u / (2.0 * pairs);
}

double Tpr95Threshold(std::span<const double> id_scores) {
  return Percentile(id_scores, 5.0);
}

double FprAt95Tpr(std::span<const double> id_scores,
                  std::span<const double> ood_scores) {
  if (id_scores.empty() || ood_scores.empty()) {
    throw Error(ErrorCode::kEmptyInput, "fpr95 needs ID and OOD scores");
  }
  CheckStack(ood_scores);
  const double tau = Tpr95Threshold(id_scores);
  const auto accepted = std::count_if(ood_scores.begin(), ood_scores.end(),
                                      [tau](double s) { return s >= tau; });
  return static_cast<double>(accepted) /
         static_cast<double>(ood_scores.size());
}

MetricPair ComputeMetrics(std::span<const double> id_scores,
                          std::span<const double> ood_scores) {
  return {FprAt95Tpr(id_scores, ood_scores), Auroc(id_scores, ood_scores)};
}

}  // namespace rosskit

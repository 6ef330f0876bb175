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

#ifndef ROSSKIT_NUMERICS_H_
#define ROSSKIT_NUMERICS_H_

#include <span>
#include <vector>

namespace rosskit {

using Vector = std::vector<double>;

// A detector score. Higher means more in-distribution. Always finite.
class ScoreSample {
 public:
  explicit ScoreSample(double value);
  double value() const { return value_; }
  friend auto operator<=>(const ScoreSample&, const ScoreSample&) = default;

 private:
  double value_;
};

// Detection quality of one score against one OOD set. Both in [0, 1].
struct MetricPair {
  double fpr95 = 0.0;
  double auroc = 0.0;
};

// Order statistics. All of these throw Error(kEmptyInput, "empty stack") on
// empty input and Error(kNonFiniteData) on NaN/inf.
//
// Median of an even-length input is the mean of the two middle values.
double Median(std::span<const double> values);

// Unscaled median absolute deviation around the median.
double Mad(std::span<const double> values);

// Linear-interpolation percentile at rank (n - 1) * q / 100, q in [0, 100].
double Percentile(std::span<const double> values, double q);

// Max-subtracted softmax; components are positive and sum to one.
Vector Softmax(std::span<const double> logits);

// log(sum(exp(x))) computed with max subtraction.
double LogSumExp(std::span<const double> x);

// P(id > ood) over uniformly random pairs, ties weighted 0.5. Computed from
// midranks in O((n + m) log(n + m)).
double Auroc(std::span<const double> id_scores,
             std::span<const double> ood_scores);

// Fraction of OOD scores >= tau, tau = 5th percentile of the ID scores.
double FprAt95Tpr(std::span<const double> id_scores,
                  std::span<const double> ood_scores);

// The threshold used by FprAt95Tpr.
double Tpr95Threshold(std::span<const double> id_scores);

MetricPair ComputeMetrics(std::span<const double> id_scores,
                          std::span<const double> ood_scores);

}  // namespace rosskit

#endif  // ROSSKIT_NUMERICS_H_

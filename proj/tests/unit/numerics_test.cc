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

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "common/oracles.h"
#include "rosskit/error.h"

namespace rosskit {
namespace {

using ::testing::DoubleNear;
using ::testing::ElementsAre;
using testing::OracleAuroc;
using testing::OracleFpr95;
using testing::OracleMad;
using testing::OracleMedian;
using testing::OraclePercentile;
using testing::RandomScores;

Vector Range(int lo, int hi) {
  Vector v;
  for (int i = lo; i <= hi; ++i) v.push_back(i);
  return v;
}

TEST(MedianTest, Examples) {
  EXPECT_EQ(Median(Vector{5}), 5.0);
  EXPECT_EQ(Median(Vector{3, 1, 2}), 2.0);
  EXPECT_EQ(Median(Vector{1, 2, 3, 4}), 2.5);
}

TEST(MedianTest, EmptyStackIsAnError) {
  try {
    Median(Vector{});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyInput);
    EXPECT_STREQ(e.what(), "empty stack");
  }
  EXPECT_THROW(Mad(Vector{}), Error);
}

TEST(MedianTest, RejectsNonFinite) {
  EXPECT_THROW(Median(Vector{1.0, std::nan("")}), Error);
  EXPECT_THROW(Mad(Vector{std::numeric_limits<double>::infinity()}), Error);
}

TEST(MadTest, Examples) {
  EXPECT_EQ(Mad(Vector{7, 7, 7}), 0.0);
  EXPECT_EQ(Mad(Vector{1, 2, 3, 4, 100}), 1.0);
  EXPECT_EQ(Mad(Vector{1, 3}), 1.0);
}

TEST(MedianTest, MatchesSortOracleOnRandomStacks) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> size(1, 101);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vector v = RandomScores(rng, size(rng));
    EXPECT_EQ(Median(v), OracleMedian(v));
    EXPECT_EQ(Mad(v), OracleMad(v));
  }
}

TEST(MadTest, ZeroIffHalfTheValuesEqualTheMedian) {
  EXPECT_EQ(Mad(Vector{1, 1, 5}), 0.0);
  EXPECT_EQ(Mad(Vector{2, 2, 3, 9}), 0.5);
}

TEST(MedianTest, BreakdownRobustness) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 40;
    Vector v(n);
    for (double& x : v) x = u(rng);
    const std::size_t corrupt = (n - 1) / 2;
    Vector clean(v.begin() + corrupt, v.end());
    for (std::size_t i = 0; i < corrupt; ++i) v[i] = (i % 2 ? 1e12 : -1e12);
    const double m = Median(v);
    EXPECT_GE(m, *std::min_element(clean.begin(), clean.end()));
    EXPECT_LE(m, *std::max_element(clean.begin(), clean.end()));
  }
}

TEST(PercentileTest, Examples) {
  const Vector v = Range(1, 100);
  EXPECT_EQ(Percentile(v, 0), 1.0);
  EXPECT_EQ(Percentile(v, 100), 100.0);
  EXPECT_NEAR(Percentile(v, 5), 5.95, 1e-12);
}

TEST(PercentileTest, Errors) {
  EXPECT_THROW(Percentile(Vector{}, 5), Error);
  EXPECT_THROW(Percentile(Vector{1, 2}, -0.1), Error);
  EXPECT_THROW(Percentile(Vector{1, 2}, 100.5), Error);
}

TEST(PercentileTest, MatchesOracle) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> size(1, 200);
  std::uniform_real_distribution<double> q(0.0, 100.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vector v = RandomScores(rng, size(rng));
    const double qq = trial % 10 == 0 ? 5.0 : q(rng);
    EXPECT_NEAR(Percentile(v, qq), OraclePercentile(v, qq), 1e-12);
  }
}

TEST(SoftmaxTest, Examples) {
  EXPECT_THAT(Softmax(Vector{0, 0}), ElementsAre(0.5, 0.5));
  EXPECT_THAT(Softmax(Vector{std::log(2.0), 0}),
              ElementsAre(DoubleNear(2.0 / 3, 1e-15), DoubleNear(1.0 / 3, 1e-15)));
}

TEST(SoftmaxTest, ShiftInvariantAndOverflowSafe) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1e4, 1e4);
  for (int trial = 0; trial < 100; ++trial) {
    Vector l(7);
    for (double& x : l) x = u(rng);
    const Vector p = Softmax(l);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
    for (double x : p) EXPECT_TRUE(std::isfinite(x));
    Vector shifted = l;
    for (double& x : shifted) x += 123.25;
    const Vector q = Softmax(shifted);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
  }
}

TEST(AurocTest, Examples) {
  EXPECT_EQ(Auroc(Vector{2, 3}, Vector{0, 1}), 1.0);
  EXPECT_EQ(Auroc(Vector{1}, Vector{1}), 0.5);
  EXPECT_EQ(Auroc(Vector{1, 3}, Vector{2, 4}), 0.25);
  EXPECT_THROW(Auroc(Vector{}, Vector{1}), Error);
  EXPECT_THROW(Auroc(Vector{1}, Vector{}), Error);
}

TEST(AurocTest, MatchesPairwiseOracle) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::size_t> size(1, 200);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vector id = RandomScores(rng, size(rng));
    const Vector ood = RandomScores(rng, size(rng));
    EXPECT_NEAR(Auroc(id, ood), OracleAuroc(id, ood), 1e-12);
  }
}

TEST(AurocTest, ComplementAndMonotoneInvariance) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    Vector a(30), b(40);
    for (double& x : a) x = u(rng);
    for (double& x : b) x = u(rng);
    EXPECT_NEAR(Auroc(a, b) + Auroc(b, a), 1.0, 1e-12);
    Vector ta = a, tb = b;
    for (double& x : ta) x = std::exp(x) + 2.0 * x;
    for (double& x : tb) x = std::exp(x) + 2.0 * x;
    EXPECT_EQ(Auroc(a, b), Auroc(ta, tb));
  }
}

TEST(FprTest, Examples) {
  const Vector id = Range(1, 100);
  EXPECT_EQ(FprAt95Tpr(id, Vector{-1, 0, 0.5}), 0.0);
  EXPECT_NEAR(FprAt95Tpr(id, id), 0.95, 1e-12);
  EXPECT_NEAR(FprAt95Tpr(id, Vector{5.5, 7, 3}), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(Tpr95Threshold(id), 5.95, 1e-12);
}

TEST(FprTest, MatchesOracle) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> size(1, 200);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vector id = RandomScores(rng, size(rng));
    const Vector ood = RandomScores(rng, size(rng));
    EXPECT_NEAR(FprAt95Tpr(id, ood), OracleFpr95(id, ood), 1e-12);
  }
}

TEST(FprTest, WeaklyDecreasesWhenOodScoresDrop) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Vector id(50), ood(50);
    for (double& x : id) x = u(rng);
    for (double& x : ood) x = u(rng);
    Vector lower = ood;
    for (double& x : lower) x -= 0.3 * u(rng);
    EXPECT_LE(FprAt95Tpr(id, lower), FprAt95Tpr(id, ood));
  }
}

TEST(ScoreSampleTest, RejectsNonFinite) {
  EXPECT_THROW(ScoreSample(std::nan("")), Error);
  EXPECT_LT(ScoreSample(1.0), ScoreSample(2.0));
}

}  // namespace
}  // namespace rosskit

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

#include "rosskit/synth.h"

#include <cmath>

#include <gtest/gtest.h>

#include "rosskit/error.h"

namespace rosskit {
namespace {

TEST(SynthTest, InvalidSpecs) {
  SynthSpec s;
  s.count = 0;
  EXPECT_THROW(SynthGenerate(s, "x", DataRole::kId), Error);
  s = SynthSpec{};
  s.dims = 0;
  EXPECT_THROW(SynthGenerate(s, "x", DataRole::kId), Error);
  s = SynthSpec{};
  s.cov_scale = -1.0;
  EXPECT_THROW(SynthGenerate(s, "x", DataRole::kId), Error);
  s = SynthSpec{};
  s.kind = SynthKind::kUniform;
  s.box_low = 0.45;
  s.box_high = 0.55;
  s.center_radius = 0.0;
  s.min_center_distance = 1.0;
  EXPECT_THROW(SynthGenerate(s, "x", DataRole::kOodFar), Error);
  EXPECT_THROW(ParseSynthKind("spiral"), Error);
}

TEST(SynthTest, BlobMeansWithinThreeStandardErrors) {
  for (std::size_t dims : {1u, 2u, 5u}) {
    SynthSpec s;
    s.dims = dims;
    s.classes = 3;
    s.count = 3000;
    s.cov_scale = 0.2;
    s.seed = 1;
    const Dataset d = SynthGenerate(s, "blobs", DataRole::kId);
    ASSERT_EQ(d.manifest.shape, (std::vector<std::size_t>{3000, dims}));
    const auto rows = d.Rows();
    const auto labels = d.Labels();
    for (std::size_t k = 0; k < 3; ++k) {
      const Vector c = ClassCenter(s, k);
      Vector mean(dims, 0.0);
      std::size_t n = 0;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (labels[i] != static_cast<int>(k)) continue;
        for (std::size_t j = 0; j < dims; ++j) mean[j] += rows[i][j];
        ++n;
      }
      ASSERT_EQ(n, 1000u);
      for (std::size_t j = 0; j < dims; ++j) {
        EXPECT_LE(std::fabs(mean[j] / n - c[j]), 3 * 0.2 / std::sqrt(1000.0))
            << "dims " << dims << " class " << k << " coord " << j;
      }
    }
  }
}

TEST(SynthTest, Deterministic) {
  SynthSpec s;
  s.seed = 5;
  const Dataset a = SynthGenerate(s, "a", DataRole::kId);
  const Dataset b = SynthGenerate(s, "a", DataRole::kId);
  EXPECT_EQ(a.tensors.at("data").values, b.tensors.at("data").values);
  EXPECT_EQ(DatasetHash(a), DatasetHash(b));
  s.seed = 6;
  EXPECT_NE(SynthGenerate(s, "a", DataRole::kId).tensors.at("data").values,
            a.tensors.at("data").values);
}

TEST(SynthTest, UniformRespectsBoxAndDistance) {
  SynthSpec s;
  s.kind = SynthKind::kUniform;
  s.count = 500;
  s.box_low = 0.2;
  s.box_high = 0.8;
  s.center_radius = 0.5;
  s.min_center_distance = 0.3;
  const Dataset d = SynthGenerate(s, "far", DataRole::kOodFar);
  EXPECT_FALSE(d.has_labels());
  for (const Vector& x : d.Rows()) {
    for (double v : x) {
      EXPECT_GE(v, 0.2 - 1e-6);
      EXPECT_LE(v, 0.8 + 1e-6);
    }
    for (std::size_t k = 0; k < s.classes; ++k) {
      const Vector c = ClassCenter(s, k);
      EXPECT_GE(std::hypot(x[0] - c[0], x[1] - c[1]), 0.3 - 1e-6);
    }
  }
}

TEST(SynthTest, RingRadius) {
  SynthSpec s;
  s.kind = SynthKind::kRing;
  s.count = 2000;
  s.center_radius = 1.0;
  s.cov_scale = 0.01;
  const Dataset d = SynthGenerate(s, "ring", DataRole::kOodNear);
  double mean_r = 0.0;
  for (const Vector& x : d.Rows()) mean_r += std::hypot(x[0] - 0.5, x[1] - 0.5);
  EXPECT_NEAR(mean_r / 2000, 1.0, 0.002);
}

TEST(SynthTest, ShiftedCentresMoveOutward) {
  SynthSpec s;
  s.mean_shift = 0.2;
  const Vector c = ClassCenter(s, 0);
  EXPECT_NEAR(std::hypot(c[0] - 0.5, c[1] - 0.5), s.center_radius + 0.2, 1e-12);
}

TEST(StandardBenchmarkTest, ShapesAndRoles) {
  const StandardBenchmarkData b = GenerateStandardBenchmark(0);
  EXPECT_EQ(b.train.size(), 900u);
  EXPECT_EQ(b.id_val.size(), 120u);
  EXPECT_EQ(b.id_test.size(), 1080u);
  EXPECT_EQ(b.ood_near.size(), 600u);
  EXPECT_EQ(b.ood_far.size(), 600u);
  EXPECT_EQ(b.ood_near.manifest.role, DataRole::kOodNear);
  EXPECT_EQ(b.ood_far.manifest.role, DataRole::kOodFar);
  EXPECT_NE(DatasetHash(b.id_val), DatasetHash(GenerateStandardBenchmark(1).id_val));
}

}  // namespace
}  // namespace rosskit

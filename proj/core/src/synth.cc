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
#include <numbers>
#include <random>
#include <string>

#include "rosskit/error.h"

namespace rosskit {

SynthKind ParseSynthKind(std::string_view s) {
  if (s == "blobs") return SynthKind::kBlobs;
  if (s == "ring") return SynthKind::kRing;
  if (s == "uniform") return SynthKind::kUniform;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown synth kind '" + std::string(s) + "'");
}

std::string_view SynthKindName(SynthKind k) {
  switch (k) {
    case SynthKind::kBlobs: return "blobs";
    case SynthKind::kRing: return "ring";
    case SynthKind::kUniform: return "uniform";
  }
  return "unknown";
}

void SynthSpec::Validate() const {
  if (count < 1) throw Error(ErrorCode::kInvalidArgument, "count must be >= 1");
  if (dims < 1) throw Error(ErrorCode::kInvalidArgument, "dims must be >= 1");
  if (classes < 1) {
    throw Error(ErrorCode::kInvalidArgument, "classes must be >= 1");
  }
  if (!(cov_scale >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "cov_scale must be >= 0");
  }
  if (kind == SynthKind::kUniform && !(box_low < box_high)) {
    throw Error(ErrorCode::kInvalidArgument, "uniform box is empty");
  }
}

Vector ClassCenter(const SynthSpec& spec, std::size_t k) {
  Vector c(spec.dims, spec.center);
  const double radius = spec.center_radius + spec.mean_shift;
  const double slot = static_cast<double>(k) + spec.angle_offset;
  if (spec.dims == 1) {
    c[0] += radius * (slot - (static_cast<double>(spec.classes) - 1.0) / 2.0);
    return c;
  }
  const double theta = 2.0 * std::numbers::pi * slot /
                           static_cast<double>(spec.classes) +
                       std::numbers::pi / 2.0;
  c[0] += radius * std::cos(theta);
  c[1] += radius * std::sin(theta);
  return c;
}

Dataset SynthGenerate(const SynthSpec& spec, std::string name, DataRole role) {
  spec.Validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> rows;
  std::vector<int> labels;
  rows.reserve(spec.count);

  switch (spec.kind) {
    case SynthKind::kBlobs: {
      for (std::size_t i = 0; i < spec.count; ++i) {
        const std::size_t k = i % spec.classes;
        Vector x = ClassCenter(spec, k);
        for (double& v : x) v += spec.cov_scale * normal(rng);
        rows.push_back(std::move(x));
        labels.push_back(static_cast<int>(k));
      }
      break;
    }
    case SynthKind::kRing: {
      std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
      const double radius = spec.center_radius + spec.mean_shift;
      for (std::size_t i = 0; i < spec.count; ++i) {
        Vector x(spec.dims, spec.center);
        const double r = radius + spec.cov_scale * normal(rng);
        if (spec.dims == 1) {
          x[0] += (angle(rng) < std::numbers::pi ? r : -r);
        } else {
          const double a = angle(rng);
          x[0] += r * std::cos(a);
          x[1] += r * std::sin(a);
          for (std::size_t d = 2; d < spec.dims; ++d) {
            x[d] += spec.cov_scale * normal(rng);
          }
        }
        rows.push_back(std::move(x));
      }
      break;
    }
    case SynthKind::kUniform: {
      std::uniform_real_distribution<double> u(spec.box_low, spec.box_high);
      std::size_t attempts = 0;
      while (rows.size() < spec.count) {
        if (++attempts > 1000 * spec.count) {
          throw Error(ErrorCode::kInvalidArgument,
                      "uniform box leaves no room outside the clusters");
        }
        Vector x(spec.dims);
        for (double& v : x) v = u(rng);
        bool far_enough = true;
        for (std::size_t k = 0; k < spec.classes && far_enough; ++k) {
          const Vector c = ClassCenter(spec, k);
          double sq = 0.0;
          for (std::size_t d = 0; d < spec.dims; ++d) {
            sq += (x[d] - c[d]) * (x[d] - c[d]);
          }
          far_enough = std::sqrt(sq) >= spec.min_center_distance;
        }
        if (far_enough) rows.push_back(std::move(x));
      }
      break;
    }
  }

  Dataset d;
  d.manifest.name = std::move(name);
  d.manifest.kind = DataKind::kFeatures;
  d.manifest.role = role;
  d.manifest.seed = spec.seed;
  d.manifest.provenance = "synth:" + std::string(SynthKindName(spec.kind));
  d.manifest.metadata = {{"kind", std::string(SynthKindName(spec.kind))},
                         {"dims", spec.dims},
                         {"classes", spec.classes},
                         {"count", spec.count},
                         {"center", spec.center},
                         {"center_radius", spec.center_radius},
                         {"mean_shift", spec.mean_shift},
                         {"angle_offset", spec.angle_offset},
                         {"cov_scale", spec.cov_scale},
                         {"box_low", spec.box_low},
                         {"box_high", spec.box_high},
                         {"min_center_distance", spec.min_center_distance}};
  d.tensors.emplace("data", TensorFromRows(rows));
  d.manifest.shape = d.tensors.at("data").shape;
  if (!labels.empty()) d.tensors.emplace("labels", TensorFromLabels(labels));
  return d;
}

StandardBenchmarkData GenerateStandardBenchmark(std::uint64_t seed) {
  SynthSpec id;
  id.kind = SynthKind::kBlobs;
  id.dims = 2;
  id.classes = 3;
  id.center = 0.5;
  id.center_radius = 0.5;
  id.cov_scale = 0.1;

  StandardBenchmarkData out;
  SynthSpec train = id;
  train.count = 900;
  train.seed = seed * 8 + 1;
  out.train = SynthGenerate(train, "train", DataRole::kId);

  // 10% of the 1200 held-out ID samples form the validation split.
  SynthSpec val = id;
  val.count = 120;
  val.seed = seed * 8 + 2;
  out.id_val = SynthGenerate(val, "id_val", DataRole::kId);

  SynthSpec test = id;
  test.count = 1080;
  test.seed = seed * 8 + 3;
  out.id_test = SynthGenerate(test, "id_test", DataRole::kId);

  SynthSpec near = id;
  near.count = 600;
  near.angle_offset = 0.3;
  near.seed = seed * 8 + 4;
  out.ood_near = SynthGenerate(near, "ood_near", DataRole::kOodNear);

  // A ReLU network extrapolates linearly, so everything outside the ring of
  // clusters is scored as confidently ID. The low-confidence region away
  // from every cluster is the interior of the ring.
  SynthSpec far = id;
  far.kind = SynthKind::kUniform;
  far.count = 600;
  far.box_low = 0.2;
  far.box_high = 0.8;
  far.min_center_distance = 0.3;
  far.seed = seed * 8 + 5;
  out.ood_far = SynthGenerate(far, "ood_far", DataRole::kOodFar);
  return out;
}

}  // namespace rosskit

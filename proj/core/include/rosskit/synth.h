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

#ifndef ROSSKIT_SYNTH_H_
#define ROSSKIT_SYNTH_H_

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "rosskit/io.h"
#include "rosskit/numerics.h"

namespace rosskit {

enum class SynthKind { kBlobs, kRing, kUniform };

SynthKind ParseSynthKind(std::string_view s);
std::string_view SynthKindName(SynthKind k);

// Class centres sit on a circle of `center_radius` around `center` in the
// first two coordinates (on a line for dims == 1). Rotating the centres by
// `angle_offset` class spacings and moving them outward by `mean_shift`
// yields the near-OOD blobs.
struct SynthSpec {
  SynthKind kind = SynthKind::kBlobs;
  std::size_t dims = 2;
  std::size_t classes = 3;
  std::size_t count = 300;  // total samples, split evenly over classes
  double center = 0.5;
  double center_radius = 0.3;
  double mean_shift = 0.0;
  double angle_offset = 0.0;
  double cov_scale = 0.05;  // per-coordinate std dev
  // kUniform: box [box_low, box_high]^dims with points closer than
  // min_center_distance to any class centre rejected.
  double box_low = 0.0;
  double box_high = 1.0;
  double min_center_distance = 0.0;
  std::uint64_t seed = 0;

  void Validate() const;
};

// Class centre k for the given spec (blobs and rejection geometry).
Vector ClassCenter(const SynthSpec& spec, std::size_t k);

// Deterministic given spec.seed. Blobs carry labels; ring and uniform do not.
Dataset SynthGenerate(const SynthSpec& spec, std::string name, DataRole role);

// The standard desk-scale benchmark: 3 Gaussian classes in 2-D, held-out ID
// validation and test splits, rotated blobs as near-OOD and a uniform box
// away from the clusters as far-OOD.
struct StandardBenchmarkData {
  Dataset train;
  Dataset id_val;
  Dataset id_test;
  Dataset ood_near;
  Dataset ood_far;
};

StandardBenchmarkData GenerateStandardBenchmark(std::uint64_t seed);

}  // namespace rosskit

#endif  // ROSSKIT_SYNTH_H_

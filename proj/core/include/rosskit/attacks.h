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

#ifndef ROSSKIT_ATTACKS_H_
#define ROSSKIT_ATTACKS_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rosskit/basescores.h"
#include "rosskit/numerics.h"
#include "rosskit/refmodel.h"

namespace rosskit {

// PGD-min lowers a score (attack on ID inputs); PGD-max raises it (attack on
// OOD inputs).
enum class Direction { kMin, kMax };

std::string_view DirectionName(Direction d);
Direction ParseDirection(std::string_view name);

struct DomainBox {
  double low = 0.0;
  double high = 1.0;
};

struct AttackConfig {
  Direction direction = Direction::kMin;
  double epsilon = 0.0;  // l-inf radius
  int steps = 40;
  double step_size = 0.0;
  std::optional<DomainBox> domain_box;
  std::uint64_t seed = 0;
  bool random_start = false;
  bool record_trace = false;

  // step_size = 2.5 * epsilon / steps.
  static AttackConfig Make(Direction direction, double epsilon,
                           int steps = 40);

  void Validate() const;
};

struct AttackResult {
  Vector x_adv;
  double clean_score = 0.0;
  double adv_score = 0.0;
  std::vector<double> iterate_trace;
};

using ScoreWithGradFn = std::function<InputGradient(std::span<const double>)>;

// {min, max} x {2/255, 4/255, 8/255}, 40 steps each.
std::vector<AttackConfig> DefaultAttackGrid();

// Signed-gradient l-inf PGD. Starts at x (or `start`, which must lie in the
// ball, or a seeded uniform point when cfg.random_start), projects every
// iterate onto the eps-ball around x and the domain box, and returns the
// iterate with the most extreme score seen, the clean point included.
AttackResult Pgd(std::span<const double> x, const ScoreWithGradFn& score,
                 const AttackConfig& cfg,
                 std::optional<std::span<const double>> start = std::nullopt);

enum class SampleRole { kId, kOod };

struct AttackedSet {
  std::vector<Vector> inputs;
  // One entry per input; unattacked inputs carry their clean score in both
  // fields.
  std::vector<double> clean_scores;
  std::vector<double> adv_scores;
  std::vector<bool> attacked;
};

// Attacks only the side matching the direction: PGD-min on ID inputs,
// PGD-max on OOD inputs. Everything else passes through untouched.
// Gradients flow through the base score only. With `warm_start` (one entry
// per input) each attack begins from that point.
AttackedSet AttackDataset(std::span<const Vector> inputs,
                          std::span<const SampleRole> roles,
                          const RefModel& model, const Scorer& scorer,
                          const AttackConfig& cfg, int jobs,
                          std::span<const Vector> warm_start = {});

}  // namespace rosskit

#endif  // ROSSKIT_ATTACKS_H_

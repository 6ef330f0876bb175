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

#include "rosskit/attacks.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "rosskit/error.h"
#include "rosskit/parallel.h"

namespace rosskit {

std::string_view DirectionName(Direction d) {
  return d == Direction::kMin ? "min" : "max";
}

Direction ParseDirection(std::string_view name) {
  if (name == "min") return Direction::kMin;
  if (name == "max") return Direction::kMax;
  throw Error(ErrorCode::kInvalidArgument,
              "direction must be min or max, got '" + std::string(name) + "'");
}

AttackConfig AttackConfig::Make(Direction direction, double epsilon,
                                int steps) {
  AttackConfig cfg;
  cfg.direction = direction;
  cfg.epsilon = epsilon;
  cfg.steps = steps;
  cfg.step_size = steps > 0 ? 2.5 * epsilon / steps : 0.0;
  // Zero radius still needs a positive nominal step to be a valid config.
  if (cfg.step_size == 0.0) cfg.step_size = 1e-12;
  return cfg;
}

void AttackConfig::Validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be >= 0");
  }
  if (steps < 1) throw Error(ErrorCode::kInvalidArgument, "steps must be >= 1");
  if (!(step_size > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "step_size must be > 0");
  }
  if (domain_box && !(domain_box->low <= domain_box->high)) {
    throw Error(ErrorCode::kInvalidArgument, "domain box is empty");
  }
}

std::vector<AttackConfig> DefaultAttackGrid() {
  std::vector<AttackConfig> grid;
  for (Direction d : {Direction::kMin, Direction::kMax}) {
    for (double eps : {2.0 / 255.0, 4.0 / 255.0, 8.0 / 255.0}) {
      grid.push_back(AttackConfig::Make(d, eps, 40));
    }
  }
  return grid;
}

namespace {

double Sign(double g) { return g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0); }

void Project(std::span<const double> origin, const AttackConfig& cfg,
             Vector& v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = std::clamp(v[i], origin[i] - cfg.epsilon, origin[i] + cfg.epsilon);
    if (cfg.domain_box) {
      v[i] = std::clamp(v[i], cfg.domain_box->low, cfg.domain_box->high);
    }
  }
}

bool Better(Direction d, double candidate, double incumbent) {
  return d == Direction::kMin ? candidate < incumbent : candidate > incumbent;
}

}  // namespace

AttackResult Pgd(std::span<const double> x, const ScoreWithGradFn& score,
                 const AttackConfig& cfg,
                 std::optional<std::span<const double>> start) {
  cfg.Validate();
  if (cfg.domain_box) {
    for (double v : x) {
      if (v < cfg.domain_box->low || v > cfg.domain_box->high) {
        throw Error(ErrorCode::kInvalidArgument,
                    "attack origin lies outside the domain box");
      }
    }
  }
  AttackResult result;
  InputGradient current = score(x);
  result.clean_score = current.value;
  result.adv_score = current.value;
  result.x_adv.assign(x.begin(), x.end());

  Vector iterate(x.begin(), x.end());
  bool restarted = false;
  if (start) {
    if (start->size() != x.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "warm start has wrong size");
    }
    iterate.assign(start->begin(), start->end());
    restarted = true;
  } else if (cfg.random_start && cfg.epsilon > 0.0) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(-cfg.epsilon, cfg.epsilon);
    for (std::size_t i = 0; i < iterate.size(); ++i) iterate[i] = x[i] + u(rng);
    restarted = true;
  }
  if (restarted) {
    Project(x, cfg, iterate);
    current = score(iterate);
    if (Better(cfg.direction, current.value, result.adv_score)) {
      result.adv_score = current.value;
      result.x_adv = iterate;
    }
  }
  if (cfg.record_trace) result.iterate_trace.push_back(current.value);

  const double dir = cfg.direction == Direction::kMin ? -1.0 : 1.0;
  for (int t = 0; t < cfg.steps; ++t) {
    if (current.gradient.size() != iterate.size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "score gradient has wrong dimension");
    }
    for (std::size_t i = 0; i < iterate.size(); ++i) {
      iterate[i] += dir * cfg.step_size * Sign(current.gradient[i]);
    }
    Project(x, cfg, iterate);
    current = score(iterate);
    if (cfg.record_trace) result.iterate_trace.push_back(current.value);
    if (Better(cfg.direction, current.value, result.adv_score)) {
      result.adv_score = current.value;
      result.x_adv = iterate;
    }
  }
  return result;
}

AttackedSet AttackDataset(std::span<const Vector> inputs,
                          std::span<const SampleRole> roles,
                          const RefModel& model, const Scorer& scorer,
                          const AttackConfig& cfg, int jobs,
                          std::span<const Vector> warm_start) {
  cfg.Validate();
  if (roles.size() != inputs.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one role per input required");
  }
  if (!warm_start.empty() && warm_start.size() != inputs.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "one warm start per input required");
  }
  const SampleRole target =
      cfg.direction == Direction::kMin ? SampleRole::kId : SampleRole::kOod;
  AttackedSet out;
  out.inputs.resize(inputs.size());
  out.clean_scores.resize(inputs.size());
  out.adv_scores.resize(inputs.size());
  out.attacked.assign(inputs.size(), false);
  std::vector<char> attacked(inputs.size(), 0);

  const ScoreWithGradFn grad = [&](std::span<const double> v) {
    return ScoreInputGradient(model, scorer, v);
  };
  ParallelFor(inputs.size(), jobs, [&](std::size_t i) {
    if (roles[i] != target) {
      out.inputs[i] = inputs[i];
      out.clean_scores[i] = out.adv_scores[i] =
          ScoreInput(model, scorer, inputs[i]);
      return;
    }
    AttackConfig local = cfg;
    local.seed = cfg.seed + i;
    std::optional<std::span<const double>> start;
    if (!warm_start.empty()) start = std::span<const double>(warm_start[i]);
    AttackResult r = Pgd(inputs[i], grad, local, start);
    out.inputs[i] = std::move(r.x_adv);
    out.clean_scores[i] = r.clean_score;
    out.adv_scores[i] = r.adv_score;
    attacked[i] = 1;
  });
  for (std::size_t i = 0; i < inputs.size(); ++i) out.attacked[i] = attacked[i];
  return out;
}

}  // namespace rosskit

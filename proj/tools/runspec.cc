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

#include "runspec.h"

#include <charconv>
#include <cstdlib>
#include <set>
#include <sstream>

#include "rosskit/error.h"
#include "rosskit/bench.h"
#include "rosskit/io.h"

namespace rosskit::cli {
namespace {

const std::set<std::string>& KnownKeys() {
  static const std::set<std::string> keys = {
      "command", "scorer", "n",       "sigma_noise",  "lambda",
      "seed",    "epsilon", "steps",  "direction",    "jobs",
      "grid",    "nested_grid", "random_start", "repeats", "args"};
  return keys;
}

nlohmann::json LoadConfig(const std::optional<std::string>& config) {
  if (!config || *config == "default") return nlohmann::json::object();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(ReadTextFile(*config));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument,
                "config " + *config + " is not valid JSON: " + e.what());
  }
  if (doc.is_object() && doc.contains("run_spec")) doc = doc["run_spec"];
  if (!doc.is_object()) {
    throw Error(ErrorCode::kInvalidArgument,
                "config " + *config + " must be a JSON object");
  }
  for (const auto& [key, value] : doc.items()) {
    if (!KnownKeys().count(key)) {
      throw Error(ErrorCode::kInvalidArgument, "unknown config key " + key);
    }
  }
  return doc;
}

template <typename T>
T Pick(const std::optional<T>& flag, const nlohmann::json& cfg,
       const char* key, T fallback) {
  if (flag) return *flag;
  if (cfg.contains(key) && !cfg[key].is_null()) {
    try {
      return cfg[key].get<T>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string("config key ") + key + " has the wrong type");
    }
  }
  return fallback;
}

std::uint64_t ParseSeed(const char* text) {
  std::uint64_t v = 0;
  const char* end = text + std::char_traits<char>::length(text);
  auto [ptr, ec] = std::from_chars(text, end, v);
  if (ec != std::errc() || ptr != end || ptr == text) {
    throw Error(ErrorCode::kInvalidArgument,
                "ROSSKIT_SEED must be a non-negative integer");
  }
  return v;
}

}  // namespace

nlohmann::json RunSpec::ToJson() const {
  nlohmann::json j;
  j["command"] = command;
  j["scorer"] = ScorerKindName(scorer);
  j["n"] = ross.n_samples;
  j["sigma_noise"] = ross.sigma_noise;
  j["lambda"] = ross.lambda;
  j["seed"] = ross.seed;
  j["steps"] = steps;
  j["epsilon"] = epsilon ? nlohmann::json(*epsilon) : nlohmann::json();
  j["direction"] = direction ? nlohmann::json(DirectionName(*direction))
                             : nlohmann::json();
  j["grid"] = grid;
  j["nested_grid"] = nested_grid;
  j["random_start"] = random_start;
  j["repeats"] = repeats;
  j["args"] = args;
  return j;
}

std::string RunSpec::ArgString(const std::string& name,
                               const std::optional<std::string>& flag,
                               const std::string& fallback) {
  std::string v = fallback;
  if (flag) {
    v = *flag;
  } else if (config_args.contains(name)) {
    v = config_args[name].get<std::string>();
  }
  args[name] = v;
  return v;
}

double RunSpec::ArgDouble(const std::string& name,
                          const std::optional<double>& flag, double fallback) {
  double v = fallback;
  if (flag) {
    v = *flag;
  } else if (config_args.contains(name)) {
    v = config_args[name].get<double>();
  }
  args[name] = v;
  return v;
}

long long RunSpec::ArgInt(const std::string& name,
                          const std::optional<long long>& flag,
                          long long fallback) {
  long long v = fallback;
  if (flag) {
    v = *flag;
  } else if (config_args.contains(name)) {
    v = config_args[name].get<long long>();
  }
  args[name] = v;
  return v;
}

std::vector<std::string> RunSpec::ArgStrings(
    const std::string& name, const std::vector<std::string>& flag) {
  std::vector<std::string> v = flag;
  if (v.empty() && config_args.contains(name)) {
    v = config_args[name].get<std::vector<std::string>>();
  }
  args[name] = v;
  return v;
}

RunSpec ResolveRunSpec(const std::string& command,
                       const std::optional<std::string>& config,
                       const FlagValues& flags, const char* env_seed) {
  const nlohmann::json cfg = LoadConfig(config);
  RunSpec spec;
  spec.command = command;
  spec.scorer = ParseScorerKind(
      Pick<std::string>(flags.scorer, cfg, "scorer",
                        std::string(ScorerKindName(ScorerKind::kGen))));
  spec.ross.n_samples = Pick<int>(flags.n, cfg, "n", spec.ross.n_samples);
  spec.ross.sigma_noise =
      Pick<double>(flags.sigma_noise, cfg, "sigma_noise", spec.ross.sigma_noise);
  spec.ross.lambda = Pick<double>(flags.lambda, cfg, "lambda", spec.ross.lambda);
  std::uint64_t seed = 0;
  if (flags.seed) {
    seed = *flags.seed;
  } else if (cfg.contains("seed")) {
    seed = Pick<std::uint64_t>(std::nullopt, cfg, "seed", 0);
  } else if (env_seed != nullptr && *env_seed != '\0') {
    seed = ParseSeed(env_seed);
  }
  spec.ross.seed = seed;
  spec.ross.Validate();
  spec.steps = Pick<int>(flags.steps, cfg, "steps", 40);
  if (spec.steps < 1) {
    throw Error(ErrorCode::kInvalidArgument, "steps must be >= 1");
  }
  if (flags.epsilon) {
    spec.epsilon = *flags.epsilon;
  } else if (cfg.contains("epsilon") && !cfg["epsilon"].is_null()) {
    spec.epsilon = Pick<double>(std::nullopt, cfg, "epsilon", 0.0);
  }
  if (spec.epsilon && !(*spec.epsilon >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be >= 0");
  }
  if (flags.direction) {
    spec.direction = ParseDirection(*flags.direction);
  } else if (cfg.contains("direction") && !cfg["direction"].is_null()) {
    spec.direction = ParseDirection(cfg["direction"].get<std::string>());
  }
  spec.grid = Pick<std::string>(flags.grid, cfg, "grid", "default");
  spec.nested_grid = Pick<bool>(flags.nested_grid, cfg, "nested_grid", false);
  spec.random_start = Pick<bool>(flags.random_start, cfg, "random_start", false);
  spec.repeats = Pick<int>(flags.repeats, cfg, "repeats", 1);
  if (spec.repeats < 1) {
    throw Error(ErrorCode::kInvalidArgument, "repeats must be >= 1");
  }
  spec.jobs = Pick<int>(flags.jobs, cfg, "jobs", 0);
  if (spec.jobs < 0) {
    throw Error(ErrorCode::kInvalidArgument, "jobs must be >= 0");
  }
  if (cfg.contains("args") && cfg["args"].is_object() &&
      (!cfg.contains("command") || cfg["command"] == command)) {
    spec.config_args = cfg["args"];
  }
  return spec;
}

std::vector<double> ParseNumberList(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "not a number: " + item);
    }
  }
  if (out.empty()) throw Error(ErrorCode::kEmptyInput, "empty number list");
  return out;
}

std::vector<AttackConfig> ResolveGrid(const RunSpec& spec) {
  std::vector<AttackConfig> grid;
  if (spec.epsilon) {
    if (spec.direction) {
      grid.push_back(AttackConfig::Make(*spec.direction, *spec.epsilon,
                                        spec.steps));
    } else {
      const double eps[] = {*spec.epsilon};
      grid = MakeAttackGrid(eps, spec.steps);
    }
  } else {
    std::vector<double> eps;
    if (spec.grid == "default") {
      eps = {2.0 / 255.0, 4.0 / 255.0, 8.0 / 255.0};
    } else if (spec.grid == "standard") {
      eps = {0.025, 0.05, 0.1};
    } else {
      eps = ParseNumberList(spec.grid);
    }
    for (Direction d : {Direction::kMin, Direction::kMax}) {
      if (spec.direction && *spec.direction != d) continue;
      for (double e : eps) grid.push_back(AttackConfig::Make(d, e, spec.steps));
    }
  }
  for (AttackConfig& c : grid) {
    c.seed = spec.ross.seed;
    c.random_start = spec.random_start;
    c.Validate();
  }
  return grid;
}

}  // namespace rosskit::cli

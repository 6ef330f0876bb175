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

#ifndef ROSSKIT_TOOLS_RUNSPEC_H_
#define ROSSKIT_TOOLS_RUNSPEC_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rosskit/attacks.h"
#include "rosskit/basescores.h"
#include "rosskit/ross.h"

namespace rosskit::cli {

// Values given on the command line. Unset fields fall back to the config
// file, then to built-in defaults.
struct FlagValues {
  std::optional<std::string> scorer;
  std::optional<int> n;
  std::optional<double> sigma_noise;
  std::optional<double> lambda;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  std::optional<int> steps;
  std::optional<std::string> direction;
  std::optional<int> jobs;
  std::optional<std::string> grid;
  std::optional<bool> nested_grid;
  std::optional<bool> random_start;
  std::optional<int> repeats;
};

// A fully resolved run. Every seed is explicit. `args` holds the
// command-specific options after resolution.
struct RunSpec {
  std::string command;
  ScorerKind scorer = ScorerKind::kGen;
  RossConfig ross = DefaultRossConfig();
  int steps = 40;
  std::optional<double> epsilon;
  std::optional<Direction> direction;
  std::string grid = "default";
  bool nested_grid = false;
  bool random_start = false;
  int repeats = 1;
  int jobs = 0;
  nlohmann::json args = nlohmann::json::object();

  // Command-specific values from the config file, consulted by the Arg*
  // helpers below when a flag is absent.
  nlohmann::json config_args = nlohmann::json::object();

  // jobs is left out: results do not depend on it.
  nlohmann::json ToJson() const;

  std::string ArgString(const std::string& name,
                        const std::optional<std::string>& flag,
                        const std::string& fallback);
  double ArgDouble(const std::string& name, const std::optional<double>& flag,
                   double fallback);
  long long ArgInt(const std::string& name, const std::optional<long long>& flag,
                   long long fallback);
  std::vector<std::string> ArgStrings(const std::string& name,
                                      const std::vector<std::string>& flag);
};

// config: "default" or a JSON file (a bare object of settings, or a
// previously embedded run_spec). seed precedence: flag, config, the
// ROSSKIT_SEED value passed as env_seed, then 0.
RunSpec ResolveRunSpec(const std::string& command,
                       const std::optional<std::string>& config,
                       const FlagValues& flags, const char* env_seed);

// "default" (2/255, 4/255, 8/255), "standard" (0.025, 0.05, 0.1) or a
// comma-separated list of radii. A single --epsilon overrides the grid and,
// with --direction, selects one cell.
std::vector<AttackConfig> ResolveGrid(const RunSpec& spec);

std::vector<double> ParseNumberList(const std::string& text);

}  // namespace rosskit::cli

#endif  // ROSSKIT_TOOLS_RUNSPEC_H_

// Copyright 2026 The collsteer Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// cli.hpp: configuration and subcommands behind the collsteer executable.

#pragma once

#include "collsteer/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace collsteer::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kInvalidConfig = 2 };

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Everything a subcommand needs. Keys of the config file match the field
/// names below (e.g. `burn_in = 50000`).
struct RunConfig {
  std::string subcommand;

  double gamma = 1.0;
  double omega = 10.0;
  double dt = 1e-3;
  double eta = -1.0;

  std::string scenario = "x";
  std::optional<long long> steps;    // default 10^6, or 10^4 with fast
  long long trajectories = 1000;
  std::optional<long long> burn_in;  // default 50 / (gamma dt)
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  std::string out = ".";
  bool fast = false;
  std::optional<double> tolerance;  // validate: overrides every check tolerance

  // sweep-eta
  double eta_min = -1.0;
  double eta_max = -0.5;
  int eta_points = 11;
  double eta_tolerance = 0.01;
  long long max_trajectories = 16000;

  // concurrence-map
  std::vector<double> dt_grid;
  std::vector<double> eta_grid;

  // protocol
  std::string strategy = "honest";
  std::vector<std::string> scenarios{"x", "y"};
  long long runs = 20000;
  double resolution = 0.25;
  double honesty_tolerance = 0.05;

  /// Throws ConfigError when physical parameters or budgets are invalid.
  model::ModelParams params() const;
  long long effective_steps() const;
  long long effective_burn_in() const;
  /// Fills the seed from std::random_device when absent.
  std::uint64_t resolve_seed();
  void validate() const;

  nlohmann::ordered_json echo() const;
};

/// Reads flat `key = value` lines (`#` starts a comment) into `base`.
/// Unknown keys and malformed values throw ConfigError.
RunConfig load_config_file(const std::string& path, RunConfig base = {});
void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value);

std::vector<double> parse_double_list(const std::string& text);

/// printf("%.17g"), the fixed CSV number format.
std::string format_number(double v);

int cmd_validate(RunConfig config, std::ostream& log);
int cmd_ensemble(RunConfig config, std::ostream& log);
int cmd_steering(RunConfig config, std::ostream& log);
int cmd_sweep_eta(RunConfig config, std::ostream& log);
int cmd_concurrence_map(RunConfig config, std::ostream& log);
int cmd_protocol(RunConfig config, std::ostream& log);

/// Dispatches on config.subcommand. Configuration errors map to exit code 2.
int run(RunConfig config, std::ostream& log, std::ostream& err);

}  // namespace collsteer::cli

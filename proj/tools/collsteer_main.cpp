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

// collsteer: command-line front end.
//
//   collsteer <validate|ensemble|steering|sweep-eta|concurrence-map|protocol> [flags]
//
// Flags override values read with --config (flat `key = value` file).

#include "collsteer/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

struct Flags {
  std::optional<std::string> config;
  std::optional<double> gamma, omega, dt, eta, tolerance;
  std::optional<std::string> scenario, out;
  std::optional<long long> steps, trajectories, burn_in;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  bool fast = false;
  // sweep-eta
  std::optional<double> eta_min, eta_max, eta_tolerance;
  std::optional<int> eta_points;
  std::optional<long long> max_trajectories;
  // concurrence-map
  std::optional<std::string> dt_grid, eta_grid;
  // protocol
  std::optional<std::string> strategy, scenarios;
  std::optional<long long> runs;
  std::optional<double> resolution, honesty_tolerance;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "flat key = value configuration file");
  cmd->add_option("--gamma", f.gamma, "damping rate (default 1)");
  cmd->add_option("--omega", f.omega, "drive frequency (default 10)");
  cmd->add_option("--dt", f.dt, "collision time step (default 1e-3)");
  cmd->add_option("--eta", f.eta, "subenvironment polarization in [-1, 0) (default -1, vacuum)");
  cmd->add_option("--scenario", f.scenario, "x, y, z, adaptive or nonlocal");
  cmd->add_option("--steps", f.steps, "collisions N after burn-in (default 1e6, 1e4 with --fast)");
  cmd->add_option("--trajectories", f.trajectories, "trajectories per ensemble (default 1000)");
  cmd->add_option("--burn-in", f.burn_in, "discarded collisions (default 50/(gamma dt))");
  cmd->add_option("--seed", f.seed, "master seed (random and echoed when absent)");
  cmd->add_option("--workers", f.workers, "worker threads (default 1)");
  cmd->add_option("--out", f.out, "output directory (default .)");
  cmd->add_option("--tolerance", f.tolerance, "validate: override every check tolerance");
  cmd->add_flag("--fast", f.fast, "CI preset: N = 1e4");
}

template <class T>
void set_if(std::optional<T>& target, const std::optional<T>& v) {
  if (v) target = v;
}

template <class T>
void set_if(T& target, const std::optional<T>& v) {
  if (v) target = *v;
}

}  // namespace

int main(int argc, char** argv) {
  using collsteer::cli::RunConfig;

  CLI::App app{"Steering with collision-model quantum trajectories"};
  app.set_version_flag("--version", collsteer::cli::kVersion);
  app.require_subcommand(1);

  Flags f;
  const char* names[] = {"validate", "ensemble", "steering", "sweep-eta", "concurrence-map", "protocol"};
  const char* help[] = {"run the machine-precision identity suite",
                        "write the endpoint ensemble of one scenario",
                        "estimate the three-term steering inequality and Delta S",
                        "tabulate Delta S over eta and bracket eta_crit",
                        "concurrence of one collision over a (dt, eta) grid",
                        "simulate the Alice/Bob verification game"};
  for (int i = 0; i < 6; ++i) {
    CLI::App* cmd = app.add_subcommand(names[i], help[i]);
    add_common(cmd, f);
    const std::string n = names[i];
    if (n == "sweep-eta") {
      cmd->add_option("--eta-min", f.eta_min, "lower end of the sweep (default -1)");
      cmd->add_option("--eta-max", f.eta_max, "upper end of the sweep (default -0.5)");
      cmd->add_option("--eta-points", f.eta_points, "grid points (default 11)");
      cmd->add_option("--eta-tolerance", f.eta_tolerance, "bisection bracket width (default 0.01)");
      cmd->add_option("--max-trajectories", f.max_trajectories, "budget cap per probe (default 16000)");
    } else if (n == "concurrence-map") {
      cmd->add_option("--dt-grid", f.dt_grid, "comma-separated dt values");
      cmd->add_option("--eta-grid", f.eta_grid, "comma-separated eta values");
    } else if (n == "protocol") {
      cmd->add_option("--strategy", f.strategy, "honest, lhs-fixed or announce-without-measuring");
      cmd->add_option("--scenarios", f.scenarios, "comma-separated scenarios Bob may ask for (default x,y)");
      cmd->add_option("--runs", f.runs, "runs per session (default 20000, minimum 600)");
      cmd->add_option("--resolution", f.resolution, "bin quantization per Bloch axis (default 0.25)");
      cmd->add_option("--honesty-tolerance", f.honesty_tolerance, "announcement check tolerance (default 0.05)");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return collsteer::cli::kInvalidConfig;
  }

  RunConfig config;
  try {
    if (f.config) config = collsteer::cli::load_config_file(*f.config);
    set_if(config.gamma, f.gamma);
    set_if(config.omega, f.omega);
    set_if(config.dt, f.dt);
    set_if(config.eta, f.eta);
    set_if(config.scenario, f.scenario);
    set_if(config.steps, f.steps);
    set_if(config.trajectories, f.trajectories);
    set_if(config.burn_in, f.burn_in);
    set_if(config.seed, f.seed);
    set_if(config.workers, f.workers);
    set_if(config.out, f.out);
    set_if(config.tolerance, f.tolerance);
    if (f.fast) config.fast = true;
    set_if(config.eta_min, f.eta_min);
    set_if(config.eta_max, f.eta_max);
    set_if(config.eta_points, f.eta_points);
    set_if(config.eta_tolerance, f.eta_tolerance);
    set_if(config.max_trajectories, f.max_trajectories);
    if (f.dt_grid) config.dt_grid = collsteer::cli::parse_double_list(*f.dt_grid);
    if (f.eta_grid) config.eta_grid = collsteer::cli::parse_double_list(*f.eta_grid);
    set_if(config.strategy, f.strategy);
    if (f.scenarios) collsteer::cli::apply_config_entry(config, "scenarios", *f.scenarios);
    set_if(config.runs, f.runs);
    set_if(config.resolution, f.resolution);
    set_if(config.honesty_tolerance, f.honesty_tolerance);
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return collsteer::cli::kInvalidConfig;
  }
  config.subcommand = app.get_subcommands().front()->get_name();
  return collsteer::cli::run(std::move(config), std::cout, std::cerr);
}

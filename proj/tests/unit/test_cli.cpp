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

#include "collsteer/cli.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace collsteer;
using namespace collsteer::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("collsteer_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::ordered_json read_json(const fs::path& p) { return nlohmann::ordered_json::parse(slurp(p)); }

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

RunConfig small(const std::string& command, const fs::path& out) {
  RunConfig c;
  c.subcommand = command;
  c.out = out.string();
  c.seed = 11;
  c.trajectories = 40;
  c.steps = 500;
  return c;
}

}  // namespace

TEST_CASE("RunConfig defaults mirror the reference parameters") {
  RunConfig c;
  CHECK(c.params().g() == Catch::Approx(std::sqrt(1e-3)));
  CHECK(c.effective_steps() == 1000000);
  CHECK(c.effective_burn_in() == 50000);
  c.fast = true;
  CHECK(c.effective_steps() == 10000);
  c.steps = 123;
  CHECK(c.effective_steps() == 123);

  CHECK_FALSE(c.seed.has_value());
  const std::uint64_t s = c.resolve_seed();
  REQUIRE(c.seed.has_value());
  CHECK(*c.seed == s);
  CHECK(c.resolve_seed() == s);

  const auto echo = c.echo();
  for (const char* key : {"gamma", "omega", "dt", "eta", "scenario", "steps", "trajectories", "burn_in"}) {
    CHECK(echo.contains(key));
  }
}

TEST_CASE("RunConfig validation") {
  RunConfig c;
  c.dt = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RunConfig{};
  c.trajectories = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RunConfig{};
  c.eta = 0.0;
  CHECK_THROWS_AS(c.params(), ConfigError);
  c = RunConfig{};
  c.workers = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_NOTHROW(RunConfig{}.validate());
}

TEST_CASE("config entries and files") {
  RunConfig c;
  apply_config_entry(c, "gamma", "2.5");
  apply_config_entry(c, "burn_in", "123");
  apply_config_entry(c, "fast", "true");
  apply_config_entry(c, "scenarios", "x,adaptive");
  apply_config_entry(c, "dt_grid", "1e-3, 2e-3");
  CHECK(c.gamma == 2.5);
  CHECK(c.burn_in == 123);
  CHECK(c.fast);
  CHECK(c.scenarios == std::vector<std::string>{"x", "adaptive"});
  CHECK(c.dt_grid == std::vector<double>{1e-3, 2e-3});
  CHECK_THROWS_AS(apply_config_entry(c, "colour", "red"), ConfigError);
  CHECK_THROWS_AS(apply_config_entry(c, "gamma", "fast"), ConfigError);
  CHECK_THROWS_AS(apply_config_entry(c, "steps", "12x"), ConfigError);

  const fs::path dir = scratch("config");
  const fs::path file = dir / "run.conf";
  std::ofstream(file) << "# reference run\nomega = 4\n\neta = -0.9  # thermal\nseed = 42\n";
  RunConfig base;
  base.trajectories = 7;
  const RunConfig loaded = load_config_file(file.string(), base);
  CHECK(loaded.omega == 4.0);
  CHECK(loaded.eta == -0.9);
  CHECK(loaded.seed == std::optional<std::uint64_t>(42));
  CHECK(loaded.trajectories == 7);

  std::ofstream(dir / "bad.conf") << "omega 4\n";
  CHECK_THROWS_AS(load_config_file((dir / "bad.conf").string()), ConfigError);
  CHECK_THROWS_AS(load_config_file((dir / "missing.conf").string()), ConfigError);
}

TEST_CASE("number formatting and lists") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(-1.0) == "-1");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(parse_double_list("-1,-0.5, 0.25") == std::vector<double>{-1.0, -0.5, 0.25});
  CHECK_THROWS_AS(parse_double_list("1,,2"), ConfigError);
  CHECK_THROWS_AS(parse_double_list("a"), ConfigError);
}

TEST_CASE("validate subcommand") {
  const fs::path dir = scratch("validate");
  RunConfig c = small("validate", dir);
  std::ostringstream log;
  std::ostringstream err;
  CHECK(run(c, log, err) == kOk);
  const auto j = read_json(dir / "validate.json");
  CHECK(j["failures"] == 0);
  CHECK(j["version"] == kVersion);
  CHECK(j.contains("seed_rule"));

  c.tolerance = 1e-20;
  std::ostringstream strict;
  CHECK(run(c, strict, err) == kCheckFailed);
  CHECK(strict.str().find("FAIL") != std::string::npos);
  CHECK(read_json(dir / "validate.json")["failures"].get<int>() > 0);

  RunConfig bad = small("validate", dir);
  bad.dt = 0.0;
  std::ostringstream bad_err;
  CHECK(run(bad, log, bad_err) == kInvalidConfig);
  CHECK_FALSE(bad_err.str().empty());
}

TEST_CASE("ensemble subcommand") {
  const fs::path dir = scratch("ensemble");
  RunConfig c = small("ensemble", dir);
  std::ostringstream log;
  std::ostringstream err;
  REQUIRE(run(c, log, err) == kOk);
  const auto rows = read_csv(dir / "ensemble_x.csv");
  REQUIRE(rows.size() == 41);
  CHECK(rows[0] == std::vector<std::string>{"trajectory_id", "x", "y", "z", "purity"});
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::abs(std::stod(rows[i][1])) <= 1e-6);
  const std::string first = slurp(dir / "ensemble_x.csv");

  c.workers = 3;
  REQUIRE(run(c, log, err) == kOk);
  CHECK(slurp(dir / "ensemble_x.csv") == first);
  const auto j = read_json(dir / "ensemble_x.json");
  CHECK(j["seed"] == 11);
  CHECK(j["counts"]["trajectories"] == 40);
  CHECK(j.contains("moments"));

  RunConfig a = small("ensemble", dir);
  a.scenario = "adaptive";
  REQUIRE(run(a, log, err) == kOk);
  CHECK(read_json(dir / "ensemble_adaptive.json")["counts"]["quantized_points_0.05"] == 2);

  RunConfig unknown = small("ensemble", dir);
  unknown.scenario = "w";
  CHECK(run(unknown, log, err) == kInvalidConfig);
}

TEST_CASE("steering subcommand echoes its budget") {
  const fs::path dir = scratch("steering");
  RunConfig c = small("steering", dir);
  c.burn_in = 2000;
  std::ostringstream log;
  std::ostringstream err;
  REQUIRE(run(c, log, err) == kOk);
  const auto j = read_json(dir / "steering.json");
  CHECK(j["report"]["budget"]["trajectories"] == 40);
  CHECK(j["report"]["directions"].contains("n"));
  CHECK(j["seed"] == 11);
  CHECK(j["report"]["terms"].size() == 3);
}

TEST_CASE("concurrence-map subcommand") {
  const fs::path dir = scratch("concurrence");
  RunConfig c = small("concurrence-map", dir);
  c.dt_grid = {1e-3};
  c.eta_grid = {-1.0, -0.72};
  std::ostringstream log;
  std::ostringstream err;
  REQUIRE(run(c, log, err) == kOk);
  const auto rows = read_csv(dir / "concurrence_map.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"dt", "eta", "concurrence", "boundary"});
  CHECK(std::stod(rows[1][2]) > 0.0);
  CHECK(std::stod(rows[2][2]) == 0.0);
}

TEST_CASE("protocol subcommand writes one transcript row per run") {
  const fs::path dir = scratch("protocol");
  RunConfig c = small("protocol", dir);
  c.runs = 700;
  c.steps = 100;
  c.burn_in = 0;
  c.strategy = "lhs-fixed";
  std::ostringstream log;
  std::ostringstream err;
  REQUIRE(run(c, log, err) == kOk);
  CHECK(read_csv(dir / "protocol_transcript.csv").size() == 701);
  const auto j = read_json(dir / "protocol.json");
  CHECK(j["runs"] == 700);

  c.strategy = "bribe";
  CHECK(run(c, log, err) == kInvalidConfig);
  c.strategy = "honest";
  c.runs = 10;
  CHECK(run(c, log, err) == kInvalidConfig);
}

TEST_CASE("unknown subcommand is a configuration error") {
  RunConfig c;
  c.subcommand = "plot";
  std::ostringstream log;
  std::ostringstream err;
  CHECK(run(c, log, err) == kInvalidConfig);
}

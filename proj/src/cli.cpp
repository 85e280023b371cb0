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

#include "collsteer/protocol.hpp"
#include "collsteer/scenarios.hpp"
#include "collsteer/seeding.hpp"
#include "collsteer/steering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

namespace collsteer::cli {

using json = nlohmann::ordered_json;
using model::BlochVec;
using model::ModelParams;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_value(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T v{};
  in >> v;
  if (in.fail() || !(in >> std::ws).eof()) throw ConfigError("invalid value for " + key + ": '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("invalid boolean for " + key + ": '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty entry in list '" + text + "'");
    out.push_back(item);
  }
  return out;
}

std::filesystem::path output_dir(const RunConfig& c) {
  std::filesystem::path dir(c.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + c.out + ": " + ec.message());
  return dir;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json bloch_json(const BlochVec& r) { return json::array({r.x, r.y, r.z}); }

json estimate_json(const steering::Estimate& e) { return json{{"value", e.value}, {"stderr", e.error}}; }

json report_header(const RunConfig& c) {
  json j;
  j["version"] = kVersion;
  j["command"] = c.subcommand;
  j["config"] = c.echo();
  j["seed"] = c.seed.value_or(0);
  j["seed_rule"] = std::string(kSeedRule);
  return j;
}

steering::EnsembleConfig ensemble_config(const RunConfig& c) {
  steering::EnsembleConfig e;
  e.trajectories = c.trajectories;
  e.steps = c.effective_steps();
  e.burn_in = c.effective_burn_in();
  e.seed = *c.seed;
  e.workers = c.workers;
  return e;
}

json steering_json(const steering::SteeringReport& r) {
  json j;
  json terms = json::array();
  for (const auto& t : r.terms) {
    terms.push_back({{"scenario", t.scenario}, {"direction", bloch_json(t.direction)}, {"estimate", estimate_json(t.estimate)}});
  }
  j["terms"] = terms;
  j["directions"] = {{"n", bloch_json(r.n)}, {"m", bloch_json(r.m)}, {"k", bloch_json(r.k)}};
  j["lhs"] = estimate_json(r.lhs);
  j["delta_s"] = estimate_json(r.delta_s);
  j["violation"] = r.delta_s.value > 3.0 * r.delta_s.error;
  j["budget"] = {{"trajectories", r.config.trajectories}, {"steps", r.config.steps}, {"burn_in", r.config.burn_in}};
  return j;
}

std::vector<double> default_dt_grid() { return {1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1}; }

std::vector<double> default_eta_grid() {
  std::vector<double> g;
  for (int k = 0; k < 50; ++k) g.push_back(-1.0 + 0.02 * k);
  return g;
}

}  // namespace

// ------------------------------------------------------------- RunConfig

ModelParams RunConfig::params() const {
  try {
    return ModelParams(gamma, omega, dt, eta);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

long long RunConfig::effective_steps() const { return steps.value_or(fast ? 10000 : 1000000); }

long long RunConfig::effective_burn_in() const {
  if (burn_in) return *burn_in;
  return static_cast<long long>(std::ceil(50.0 / (gamma * dt)));
}

std::uint64_t RunConfig::resolve_seed() {
  if (!seed) {
    std::random_device rd;
    seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  return *seed;
}

void RunConfig::validate() const {
  params();
  if (effective_steps() < 0) throw ConfigError("steps must be non-negative");
  if (effective_burn_in() < 0) throw ConfigError("burn_in must be non-negative");
  if (trajectories < 1) throw ConfigError("trajectories must be at least 1");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (tolerance && !(*tolerance >= 0.0)) throw ConfigError("tolerance must be non-negative");
  if (!(eta_min < eta_max) || eta_min < -1.0 || eta_max >= 0.0) throw ConfigError("need -1 <= eta_min < eta_max < 0");
  if (eta_points < 2) throw ConfigError("eta_points must be at least 2");
  if (!(eta_tolerance > 0.0)) throw ConfigError("eta_tolerance must be positive");
  if (max_trajectories < trajectories) throw ConfigError("max_trajectories must be >= trajectories");
  if (runs < 1) throw ConfigError("runs must be at least 1");
  if (!(resolution > 0.0)) throw ConfigError("resolution must be positive");
  if (!(honesty_tolerance >= 0.0)) throw ConfigError("honesty_tolerance must be non-negative");
  if (strategy != "honest" && strategy != "lhs-fixed" && strategy != "announce-without-measuring") {
    throw ConfigError("strategy must be honest, lhs-fixed or announce-without-measuring");
  }
  try {
    scenarios::ScenarioSpec::parse(scenario);
    for (const auto& s : scenarios) scenarios::ScenarioSpec::parse(s);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

json RunConfig::echo() const {
  json j;
  j["gamma"] = gamma;
  j["omega"] = omega;
  j["dt"] = dt;
  j["eta"] = eta;
  j["scenario"] = scenario;
  j["steps"] = effective_steps();
  j["trajectories"] = trajectories;
  j["burn_in"] = effective_burn_in();
  j["workers"] = workers;
  j["fast"] = fast;
  j["out"] = out;
  if (tolerance) j["tolerance"] = *tolerance;
  if (subcommand == "sweep-eta") {
    j["eta_min"] = eta_min;
    j["eta_max"] = eta_max;
    j["eta_points"] = eta_points;
    j["eta_tolerance"] = eta_tolerance;
    j["max_trajectories"] = max_trajectories;
  }
  if (subcommand == "concurrence-map") {
    j["dt_grid"] = dt_grid.empty() ? default_dt_grid() : dt_grid;
    j["eta_grid"] = eta_grid.empty() ? default_eta_grid() : eta_grid;
  }
  if (subcommand == "protocol") {
    j["strategy"] = strategy;
    j["scenarios"] = scenarios;
    j["runs"] = runs;
    j["resolution"] = resolution;
    j["honesty_tolerance"] = honesty_tolerance;
  }
  return j;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_value<double>("list", item));
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

void apply_config_entry(RunConfig& c, const std::string& key, const std::string& value) {
  static const std::map<std::string, std::function<void(RunConfig&, const std::string&)>> setters{
      {"gamma", [](RunConfig& r, const std::string& v) { r.gamma = parse_value<double>("gamma", v); }},
      {"omega", [](RunConfig& r, const std::string& v) { r.omega = parse_value<double>("omega", v); }},
      {"dt", [](RunConfig& r, const std::string& v) { r.dt = parse_value<double>("dt", v); }},
      {"eta", [](RunConfig& r, const std::string& v) { r.eta = parse_value<double>("eta", v); }},
      {"scenario", [](RunConfig& r, const std::string& v) { r.scenario = v; }},
      {"steps", [](RunConfig& r, const std::string& v) { r.steps = parse_value<long long>("steps", v); }},
      {"trajectories", [](RunConfig& r, const std::string& v) { r.trajectories = parse_value<long long>("trajectories", v); }},
      {"burn_in", [](RunConfig& r, const std::string& v) { r.burn_in = parse_value<long long>("burn_in", v); }},
      {"seed", [](RunConfig& r, const std::string& v) { r.seed = parse_value<std::uint64_t>("seed", v); }},
      {"workers", [](RunConfig& r, const std::string& v) { r.workers = parse_value<unsigned>("workers", v); }},
      {"out", [](RunConfig& r, const std::string& v) { r.out = v; }},
      {"fast", [](RunConfig& r, const std::string& v) { r.fast = parse_bool("fast", v); }},
      {"tolerance", [](RunConfig& r, const std::string& v) { r.tolerance = parse_value<double>("tolerance", v); }},
      {"eta_min", [](RunConfig& r, const std::string& v) { r.eta_min = parse_value<double>("eta_min", v); }},
      {"eta_max", [](RunConfig& r, const std::string& v) { r.eta_max = parse_value<double>("eta_max", v); }},
      {"eta_points", [](RunConfig& r, const std::string& v) { r.eta_points = parse_value<int>("eta_points", v); }},
      {"eta_tolerance", [](RunConfig& r, const std::string& v) { r.eta_tolerance = parse_value<double>("eta_tolerance", v); }},
      {"max_trajectories",
       [](RunConfig& r, const std::string& v) { r.max_trajectories = parse_value<long long>("max_trajectories", v); }},
      {"dt_grid", [](RunConfig& r, const std::string& v) { r.dt_grid = parse_double_list(v); }},
      {"eta_grid", [](RunConfig& r, const std::string& v) { r.eta_grid = parse_double_list(v); }},
      {"strategy", [](RunConfig& r, const std::string& v) { r.strategy = v; }},
      {"scenarios", [](RunConfig& r, const std::string& v) { r.scenarios = split_list(v); }},
      {"runs", [](RunConfig& r, const std::string& v) { r.runs = parse_value<long long>("runs", v); }},
      {"resolution", [](RunConfig& r, const std::string& v) { r.resolution = parse_value<double>("resolution", v); }},
      {"honesty_tolerance",
       [](RunConfig& r, const std::string& v) { r.honesty_tolerance = parse_value<double>("honesty_tolerance", v); }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(c, value);
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    apply_config_entry(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// -------------------------------------------------------------- validate

int cmd_validate(RunConfig c, std::ostream& log) {
  c.validate();
  const ModelParams p = c.params();
  const ModelParams vac = p.with_eta(-1.0);

  struct Check {
    std::string name;
    double value;
    double tolerance;
  };
  std::vector<Check> checks;
  auto add = [&](std::string name, double value, double tol) {
    checks.push_back({std::move(name), value, c.tolerance.value_or(tol)});
  };

  std::vector<double> etas{-1.0, -0.9, -0.5};
  if (std::find(etas.begin(), etas.end(), p.eta()) == etas.end()) etas.push_back(p.eta());
  for (double eta : etas) {
    const ModelParams q = p.with_eta(eta);
    const BlochVec ss = model::steady_state(q);
    const qla::QState next = model::step_map(model::state_of(ss), q);
    add("steady_state_fixed_point(eta=" + format_number(eta) + ")", qla::max_abs(next.density() - model::density_of(ss)),
        1e-12);
  }
  {
    const BlochVec v = model::steady_state_vacuum(vac.g(), vac.f());
    const BlochVec t = model::steady_state_thermal(vac.gamma(), vac.omega(), vac.dt(), -1.0);
    add("thermal_equals_vacuum(eta=-1)", (v - t).norm(), 0.0);
  }
  const auto dich = scenarios::verify_dichotomic_conditions(vac);
  add("adaptive_condition_n1", dich.n1, 1e-12);
  add("adaptive_condition_n2", dich.n2, 1e-12);

  const auto gate = scenarios::construct_T_schmidt(vac);
  add("schmidt_T_unitarity", qla::max_abs(gate.t.matrix().adjoint() * gate.t.matrix() - qla::Matrix::Identity(4, 4)),
      1e-12);
  add("schmidt_T_decoupling", scenarios::decoupling_residual(vac, gate), 1e-10);
  add("schmidt_T_fixed_point", scenarios::fixed_point_residual(vac, gate), 1e-9);

  const qla::Matrix theta = model::density_of(scenarios::theta_ss(vac.c()));
  add("two_qubit_generator_annihilates_theta_ss", qla::max_abs(scenarios::two_qubit_gksl(theta, vac)), 1e-10);

  for (const auto& [name, s] : {std::pair{"closed_form_S1_hermitian", scenarios::closed_form_S1(vac)},
                                std::pair{"closed_form_S2_hermitian", scenarios::closed_form_S2(vac)}}) {
    add(name, qla::max_abs(s.matrix() - s.matrix().adjoint()), 1e-12);
  }

  json j = report_header(c);
  json list = json::array();
  int failures = 0;
  for (const auto& ch : checks) {
    const bool pass = ch.value <= ch.tolerance;
    if (!pass) ++failures;
    list.push_back({{"name", ch.name}, {"value", ch.value}, {"tolerance", ch.tolerance}, {"pass", pass}});
    log << (pass ? "PASS " : "FAIL ") << ch.name << " value=" << format_number(ch.value)
        << " tolerance=" << format_number(ch.tolerance) << "\n";
  }
  j["checks"] = list;
  j["failures"] = failures;
  write_json(output_dir(c) / "validate.json", j);
  if (failures > 0) {
    log << failures << " of " << checks.size() << " checks failed\n";
    return kCheckFailed;
  }
  log << "all " << checks.size() << " checks passed\n";
  return kOk;
}

// -------------------------------------------------------------- ensemble

int cmd_ensemble(RunConfig c, std::ostream& log) {
  c.resolve_seed();
  c.validate();
  const ModelParams p = c.params();
  const auto spec = scenarios::ScenarioSpec::parse(c.scenario);
  const auto e = steering::generate_ensemble(spec, p, ensemble_config(c));

  std::string csv = "trajectory_id,x,y,z,purity\n";
  for (std::size_t i = 0; i < e.members.size(); ++i) {
    const auto& m = e.members[i];
    csv += std::to_string(i) + "," + format_number(m.bloch.x) + "," + format_number(m.bloch.y) + "," +
           format_number(m.bloch.z) + "," + format_number(m.purity) + "\n";
  }
  const auto dir = output_dir(c);
  write_text(dir / ("ensemble_" + spec.id() + ".csv"), csv);

  BlochVec mean;
  double purity = 0.0;
  for (const auto& m : e.members) {
    mean = mean + m.weight * m.bloch;
    purity += m.weight * m.purity;
  }
  std::map<std::array<long long, 3>, int> cells;
  for (const auto& m : e.members) {
    ++cells[{std::llround(m.bloch.x / 0.05), std::llround(m.bloch.y / 0.05), std::llround(m.bloch.z / 0.05)}];
  }

  json j = report_header(c);
  j["scenario"] = spec.id();
  j["counts"] = {{"trajectories", e.members.size()},
                 {"distinct_points_1e-6", e.distinct_points(1e-6)},
                 {"quantized_points_0.05", cells.size()}};
  j["moments"] = {{"mean", bloch_json(mean)},
                  {"mean_purity", purity},
                  {"avg_sq_x", estimate_json(steering::ensemble_avg_sq(e, {1.0, 0.0, 0.0}))},
                  {"avg_sq_y", estimate_json(steering::ensemble_avg_sq(e, {0.0, 1.0, 0.0}))},
                  {"avg_sq_z", estimate_json(steering::ensemble_avg_sq(e, {0.0, 0.0, 1.0}))}};
  write_json(dir / ("ensemble_" + spec.id() + ".json"), j);
  log << "wrote " << e.members.size() << " endpoints for scenario " << spec.id() << "\n";
  return kOk;
}

// -------------------------------------------------------------- steering

int cmd_steering(RunConfig c, std::ostream& log) {
  c.resolve_seed();
  c.validate();
  const auto r = steering::delta_S(c.params(), ensemble_config(c));
  json j = report_header(c);
  j["report"] = steering_json(r);
  write_json(output_dir(c) / "steering.json", j);
  log << "Delta S = " << format_number(r.delta_s.value) << " +- " << format_number(r.delta_s.error) << "\n";
  return kOk;
}

// -------------------------------------------------------------- sweep-eta

int cmd_sweep_eta(RunConfig c, std::ostream& log) {
  c.resolve_seed();
  c.validate();
  const ModelParams base = c.params();
  const steering::EnsembleConfig budget = ensemble_config(c);
  const std::uint64_t rows_stream = stream_seed(*c.seed, "sweep-eta-row");

  std::string csv = "eta,delta_s,stderr,trajectories\n";
  json rows = json::array();
  for (int i = 0; i < c.eta_points; ++i) {
    const double eta = c.eta_min + (c.eta_max - c.eta_min) * i / (c.eta_points - 1);
    steering::EnsembleConfig row = budget;
    row.seed = derive_seed(rows_stream, static_cast<std::uint64_t>(i));
    const auto r = steering::delta_S(base.with_eta(eta), row);
    csv += format_number(eta) + "," + format_number(r.delta_s.value) + "," + format_number(r.delta_s.error) + "," +
           std::to_string(row.trajectories) + "\n";
    rows.push_back({{"eta", eta}, {"delta_s", estimate_json(r.delta_s)}});
    log << "eta " << format_number(eta) << "  Delta S " << format_number(r.delta_s.value) << "\n";
  }
  const auto dir = output_dir(c);
  write_text(dir / "sweep_eta.csv", csv);

  json j = report_header(c);
  j["grid"] = rows;
  steering::EtaCritConfig ec;
  ec.lower = c.eta_min;
  ec.upper = c.eta_max;
  ec.tolerance = c.eta_tolerance;
  ec.budget = budget;
  ec.max_trajectories = c.max_trajectories;
  try {
    const auto res = steering::eta_crit_search(base, ec);
    json probes = json::array();
    for (const auto& pr : res.probes) {
      probes.push_back({{"eta", pr.eta}, {"delta_s", estimate_json(pr.delta_s)}, {"trajectories", pr.trajectories}, {"sign", pr.sign}});
    }
    j["eta_crit"] = {{"bracket", json::array({res.lower, res.upper})},
                     {"estimate", res.estimate()},
                     {"uncertainty", res.uncertainty()},
                     {"resolved", res.resolved},
                     {"probes", probes}};
    log << "eta_crit in [" << format_number(res.lower) << ", " << format_number(res.upper) << "]\n";
  } catch (const std::runtime_error& e) {
    j["eta_crit"] = {{"error", e.what()}};
    log << "eta_crit search failed: " << e.what() << "\n";
    write_json(dir / "sweep_eta.json", j);
    return kCheckFailed;
  }
  write_json(dir / "sweep_eta.json", j);
  return kOk;
}

// -------------------------------------------------------- concurrence-map

int cmd_concurrence_map(RunConfig c, std::ostream& log) {
  c.validate();
  const std::vector<double> dts = c.dt_grid.empty() ? default_dt_grid() : c.dt_grid;
  const std::vector<double> etas = c.eta_grid.empty() ? default_eta_grid() : c.eta_grid;
  steering::BoundaryMap map;
  try {
    map = steering::entanglement_boundary(dts, etas, c.gamma, c.omega);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  std::string csv = "dt,eta,concurrence,boundary\n";
  for (const auto& cell : map.cells) {
    bool boundary = false;
    for (const auto& col : map.contour) boundary = boundary || (col.dt == cell.dt && col.first_separable == cell.eta);
    csv += format_number(cell.dt) + "," + format_number(cell.eta) + "," + format_number(cell.concurrence) + "," +
           (boundary ? "1" : "0") + "\n";
  }
  const auto dir = output_dir(c);
  write_text(dir / "concurrence_map.csv", csv);

  json j = report_header(c);
  json contour = json::array();
  for (const auto& col : map.contour) {
    contour.push_back({{"dt", col.dt},
                       {"last_entangled_eta", col.last_entangled ? json(*col.last_entangled) : json(nullptr)},
                       {"first_separable_eta", col.first_separable ? json(*col.first_separable) : json(nullptr)}});
  }
  j["contour"] = contour;
  write_json(dir / "concurrence_map.json", j);
  log << "wrote " << map.cells.size() << " grid cells\n";
  return kOk;
}

// -------------------------------------------------------------- protocol

int cmd_protocol(RunConfig c, std::ostream& log) {
  c.resolve_seed();
  c.validate();
  const ModelParams p = c.params();

  std::vector<scenarios::ScenarioSpec> specs;
  for (const auto& s : c.scenarios) specs.push_back(scenarios::ScenarioSpec::parse(s));
  protocol::AliceStrategy strategy;
  if (c.strategy == "honest") {
    strategy = protocol::Honest{specs};
  } else if (c.strategy == "announce-without-measuring") {
    strategy = protocol::AnnounceWithoutMeasuring{specs};
  } else {
    if (!p.is_vacuum()) throw ConfigError("lhs-fixed strategy uses the vacuum dichotomic ensemble; set eta = -1");
    auto lhs = protocol::LhsFixedEnsemble::dichotomic(p);
    lhs.scenario_ids = c.scenarios;
    strategy = lhs;
  }

  protocol::SessionConfig sc;
  sc.runs = c.runs;
  sc.steps = c.effective_steps();
  sc.burn_in = c.effective_burn_in();
  sc.seed = *c.seed;
  sc.workers = c.workers;
  sc.resolution = c.resolution;
  protocol::Session session;
  try {
    session = protocol::run_session(strategy, p, sc);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const auto dir = output_dir(c);
  {
    std::ostringstream csv;
    protocol::write_transcript_csv(csv, session);
    write_text(dir / "protocol_transcript.csv", csv.str());
  }

  json j = report_header(c);
  j["strategy"] = session.strategy;
  j["runs"] = session.transcript.size();
  j["runs_per_scenario"] = session.runs_per_scenario;
  j["unconditional_state"] = bloch_json(session.unconditional);

  json bins = json::array();
  for (const auto& [key, bin] : session.bins) {
    json tallies = json::object();
    for (int a = 0; a < 3; ++a) {
      tallies[std::string(1, protocol::axis_name(static_cast<protocol::Axis>(a)))] =
          json::array({bin.tallies[a][0], bin.tallies[a][1]});
    }
    bins.push_back({{"scenario", key.scenario},
                    {"cell", key.cell},
                    {"slips", bin.total()},
                    {"exemplar", bloch_json(bin.exemplar)},
                    {"tallies", tallies}});
  }
  j["bins"] = bins;

  json marginals = json::object();
  for (const auto& id : session.scenarios) {
    try {
      const auto t = protocol::pooled_marginal(session.bins, id);
      marginals[id] = {{"estimate", bloch_json(t.estimate)}, {"stderr", t.error}};
    } catch (const std::invalid_argument& e) {
      marginals[id] = {{"error", e.what()}};
    }
  }
  j["pooled_marginals"] = marginals;

  const bool has_x = std::count(c.scenarios.begin(), c.scenarios.end(), "x") > 0;
  const bool has_y = std::count(c.scenarios.begin(), c.scenarios.end(), "y") > 0;
  if (has_x && has_y) {
    const auto r = protocol::evaluate_from_bins(session.bins, protocol::standard_assignment());
    json terms = json::array();
    for (const auto& t : r.terms) {
      terms.push_back({{"scenario", t.assignment.scenario},
                       {"axis", std::string(1, protocol::axis_name(t.assignment.axis))},
                       {"estimate", estimate_json(t.estimate)},
                       {"bins_used", t.bins_used},
                       {"slips_used", t.slips_used}});
    }
    j["report"] = {{"terms", terms},
                   {"lhs", estimate_json(r.lhs)},
                   {"delta_s", estimate_json(r.delta_s)},
                   {"violation", r.delta_s.value > 3.0 * r.delta_s.error}};
    log << "protocol LHS = " << format_number(r.lhs.value) << " +- " << format_number(r.lhs.error) << "\n";
  }

  const auto verdicts = protocol::verify_announcements(session.bins, c.honesty_tolerance);
  long long consistent = 0;
  long long inconsistent = 0;
  long long flagged = 0;
  for (const auto& v : verdicts) {
    if (v.flagged) {
      ++flagged;
    } else if (*v.consistent) {
      ++consistent;
    } else {
      ++inconsistent;
    }
  }
  j["verdicts"] = {{"consistent", consistent},
                   {"inconsistent", inconsistent},
                   {"flagged_insufficient_slips", flagged},
                   {"min_slips", protocol::kMinSlips},
                   {"tolerance", c.honesty_tolerance}};
  write_json(dir / "protocol.json", j);
  log << "wrote transcript with " << session.transcript.size() << " runs\n";
  return kOk;
}

// ---------------------------------------------------------------- dispatch

int run(RunConfig config, std::ostream& log, std::ostream& err) {
  static const std::map<std::string, int (*)(RunConfig, std::ostream&)> commands{
      {"validate", cmd_validate},       {"ensemble", cmd_ensemble},
      {"steering", cmd_steering},       {"sweep-eta", cmd_sweep_eta},
      {"concurrence-map", cmd_concurrence_map}, {"protocol", cmd_protocol},
  };
  const auto it = commands.find(config.subcommand);
  if (it == commands.end()) {
    err << "unknown subcommand '" << config.subcommand << "'\n";
    return kInvalidConfig;
  }
  try {
    return it->second(std::move(config), log);
  } catch (const ConfigError& e) {
    err << "invalid configuration: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const std::invalid_argument& e) {
    err << "invalid configuration: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kCheckFailed;
  }
}

}  // namespace collsteer::cli

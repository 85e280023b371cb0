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

// protocol.hpp: the Alice/Bob verification game.
//
// Each run: Bob names a scenario, Alice runs it on her environment and
// announces the conditional state of Bob's qubit, Bob measures his qubit once
// along a randomly drawn Pauli axis and files the slip into the bin labelled
// by the (quantized) announcement. Bins are later turned into ensembles by
// tomography and checked against the announcements.

#pragma once

#include "collsteer/bloch.hpp"
#include "collsteer/model.hpp"
#include "collsteer/scenarios.hpp"
#include "collsteer/steering.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace collsteer::protocol {

using model::BlochVec;
using model::ModelParams;
using scenarios::ScenarioSpec;
using steering::Estimate;

inline constexpr long long kMinSlips = 600;
inline constexpr double kDefaultResolution = 0.05;

/// Bob's informationally complete set: sharp x, y, z measurements.
enum class Axis { x = 0, y = 1, z = 2 };
char axis_name(Axis a);

struct SlipRecord {
  long long run = 0;
  Axis axis = Axis::z;
  int outcome = 1;
};

struct BinKey {
  std::string scenario;
  std::array<long long, 3> cell{};  // announcement / resolution, rounded
  auto operator<=>(const BinKey&) const = default;
};

struct Bin {
  BinKey key;
  std::array<std::array<long long, 2>, 3> tallies{};  // [axis][0: +1, 1: -1]
  BlochVec exemplar;                                   // first announcement filed
  BlochVec announced_sum;

  long long total() const;
  long long axis_total(Axis a) const;
  BlochVec announced_mean() const;
  void add(const SlipRecord& slip, const BlochVec& announced);
};

using Bins = std::map<BinKey, Bin>;

// ------------------------------------------------------------ strategies

/// Alice runs the named scenario and announces her conditional state.
struct Honest {
  std::vector<ScenarioSpec> scenarios;
};

/// Alice ignores the environment and announces a member drawn from a fixed
/// ensemble, which is also the state Bob's qubit is actually in.
struct LhsFixedEnsemble {
  std::vector<BlochVec> members;
  std::vector<double> weights;
  std::vector<std::string> scenario_ids;

  /// r+ and r- with equal weights, labelled "x" and "y".
  static LhsFixedEnsemble dichotomic(const ModelParams& p);
};

/// Alice announces what the scenario would have produced but never measures;
/// Bob's qubit is in the unconditional state rho_S(N).
struct AnnounceWithoutMeasuring {
  std::vector<ScenarioSpec> scenarios;
};

using AliceStrategy = std::variant<Honest, LhsFixedEnsemble, AnnounceWithoutMeasuring>;

std::vector<std::string> scenario_ids(const AliceStrategy& s);
std::string strategy_name(const AliceStrategy& s);

// ---------------------------------------------------------------- session

struct SessionConfig {
  long long runs = 20000;
  long long steps = 2000;
  long long burn_in = 2000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  double resolution = kDefaultResolution;
  std::optional<BlochVec> initial;  // default: steady state
  long long min_runs = kMinSlips;
};

struct TranscriptRow {
  long long run = 0;
  std::string scenario;
  BlochVec announced;
  Axis axis = Axis::z;
  int outcome = 1;
};

struct Session {
  std::string strategy;
  std::vector<std::string> scenarios;
  Bins bins;
  std::vector<TranscriptRow> transcript;  // ordered by run
  std::map<std::string, long long> runs_per_scenario;
  BlochVec unconditional;  // rho_S(N), Bloch vector

  long long total_slips() const;
};

/// Throws std::invalid_argument when runs < config.min_runs or the strategy
/// is incomplete. Reproducible in (seed, runs) for any worker count.
Session run_session(const AliceStrategy& strategy, const ModelParams& p, const SessionConfig& config);

/// Columns: run,scenario,announced_x,announced_y,announced_z,axis,outcome.
void write_transcript_csv(std::ostream& out, const Session& s);

// ------------------------------------------------------------- tomography

struct Tomography {
  BlochVec estimate;
  std::array<double, 3> error{};
  std::array<long long, 3> counts{};
};

/// Linear inversion per axis, clipped to the unit ball. Throws unless the bin
/// holds at least min_slips slips and every axis at least min_slips / 6.
Tomography tomo_reconstruct(const Bin& bin, long long min_slips = kMinSlips);

/// Pooled axis statistics of every slip with the given scenario.
Tomography pooled_marginal(const Bins& bins, const std::string& scenario);

// ------------------------------------------------------------- evaluation

/// One inequality term: the ensemble of `scenario`, measured along `axis`.
struct TermAssignment {
  std::string scenario;
  Axis axis = Axis::z;
};

struct ProtocolTerm {
  TermAssignment assignment;
  Estimate estimate;
  long long bins_used = 0;
  long long slips_used = 0;
};

struct ProtocolReport {
  std::array<ProtocolTerm, 3> terms;
  Estimate lhs;
  Estimate delta_s;
};

/// Bias-corrected r^2 - (1 - r^2)/(n - 1) from the tallies of one axis;
/// requires n >= 2.
Estimate squared_expectation(long long plus, long long minus);

/// Reconstructed ensembles weighted by slip share, fed into the three-term
/// sum. Axes of the assignment must be pairwise distinct; an empty
/// assignment or a scenario without usable bins is an error.
ProtocolReport evaluate_from_bins(const Bins& bins, const std::vector<TermAssignment>& assignment);

/// x-ensemble along y and z, y-ensemble along x.
std::vector<TermAssignment> standard_assignment();

struct Verdict {
  BinKey key;
  long long slips = 0;
  std::optional<bool> consistent;  // empty when flagged
  bool flagged = false;
  double distance = 0.0;
  double allowance = 0.0;  // tolerance + 3 sigma
};

/// Per-bin check ||r_hat - announced mean|| <= tolerance + 3 sigma. Bins
/// below min_slips are flagged without a verdict.
std::vector<Verdict> verify_announcements(const Bins& bins, double tolerance, long long min_slips = kMinSlips);

}  // namespace collsteer::protocol

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

// steering.hpp: endpoint ensembles and the three-term steering inequality.

#pragma once

#include "collsteer/bloch.hpp"
#include "collsteer/model.hpp"
#include "collsteer/scenarios.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace collsteer::steering {

using model::BlochVec;
using model::ModelParams;
using scenarios::ScenarioSpec;

struct EnsembleMember {
  double weight = 0.0;
  BlochVec bloch;
  double purity = 1.0;
};

/// Weighted set of trajectory endpoints of one scenario.
struct EndpointEnsemble {
  std::string scenario_id;
  std::vector<EnsembleMember> members;
  std::optional<ModelParams> params;
  long long steps = 0;
  long long burn_in = 0;
  std::uint64_t seed = 0;

  /// Equal weights over the given points, each with purity (1 + |r|^2) / 2.
  static EndpointEnsemble uniform(std::string id, const std::vector<BlochVec>& points);

  /// Throws unless weights sum to 1 within 1e-9 and every |r| <= 1 + 1e-9.
  void validate() const;

  /// Number of clusters when points closer than `tol` are merged greedily.
  std::size_t distinct_points(double tol = 1e-6) const;
};

struct EnsembleConfig {
  long long trajectories = 1000;
  long long steps = 10000;
  long long burn_in = 0;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::optional<BlochVec> initial;
};

/// Runs `trajectories` independent trajectories. Trajectory i uses
/// derive_seed(stream_seed(seed, spec.id()), i), so the result is independent
/// of the worker count.
EndpointEnsemble generate_ensemble(const ScenarioSpec& spec, const ModelParams& p, const EnsembleConfig& config);

struct Estimate {
  double value = 0.0;
  double error = 0.0;  // one standard error
};

/// sum_i w_i (n . r_i)^2 with the weighted-sample standard error.
Estimate ensemble_avg_sq(const EndpointEnsemble& e, const BlochVec& n);

/// E1[(n.r)^2] + E2[(m.r)^2] + E3[(k.r)^2]. Values above 1 certify steering.
/// Throws unless n, m, k are pairwise orthogonal within 1e-12.
double inequality_lhs(const EndpointEnsemble& e1, const EndpointEnsemble& e2, const EndpointEnsemble& e3,
                      const BlochVec& n, const BlochVec& m, const BlochVec& k);

/// Same sum with a standard error that accounts for terms sharing an ensemble.
Estimate inequality_lhs_estimate(const EndpointEnsemble& e1, const EndpointEnsemble& e2,
                                 const EndpointEnsemble& e3, const BlochVec& n, const BlochVec& m,
                                 const BlochVec& k);

struct SteeringTerm {
  std::string scenario;
  BlochVec direction;
  Estimate estimate;
};

struct SteeringReport {
  std::array<SteeringTerm, 3> terms;
  Estimate lhs;
  Estimate delta_s;  // lhs - 1
  BlochVec n, m, k;
  ModelParams params = ModelParams::reference();
  EnsembleConfig config;
};

/// x-ensemble measured along y and z, y-ensemble measured along x.
SteeringReport delta_S(const ModelParams& p, const EnsembleConfig& config);

// --------------------------------------------------------------- eta_crit

struct EtaCritConfig {
  double lower = -1.0;
  double upper = -0.5;
  double tolerance = 0.01;  // stop when the bracket is this narrow
  EnsembleConfig budget;    // starting budget per probe
  long long max_trajectories = 16000;
};

struct EtaProbe {
  double eta = 0.0;
  Estimate delta_s;
  long long trajectories = 0;
  int sign = 0;  // +1, -1, or 0 when undecided at the cap
};

struct EtaCritResult {
  double lower = 0.0;  // Delta S > 0 here
  double upper = 0.0;  // Delta S < 0 here
  bool resolved = true;
  std::vector<EtaProbe> probes;

  double estimate() const { return 0.5 * (lower + upper); }
  double uncertainty() const { return 0.5 * (upper - lower); }
};

/// Signed Delta S at eta: declared only when |Delta S| > 3 stderr, doubling
/// the trajectory count up to the cap otherwise. `index` selects the seed.
EtaProbe probe_delta_s(const ModelParams& base, double eta, const EtaCritConfig& config, std::uint64_t index);

/// Bisection on the sign of Delta S. Throws if the end points do not carry
/// opposite, statistically resolved signs. A midpoint left undecided at the
/// budget cap ends the search with resolved = false.
EtaCritResult eta_crit_search(const ModelParams& base, const EtaCritConfig& config);

// ----------------------------------------------------------- entanglement

/// Two-qubit concurrence from the square roots of the eigenvalues of
/// rho (sy sy) rho* (sy sy), obtained as the singular values of W^T (sy sy) W
/// with rho = W W^dagger. Results below 1e-12 are clamped to 0.
double concurrence(const qla::Matrix& rho4);
double concurrence(const qla::QState& rho4);

/// Concurrence of Q (rho_ss (x) rho_A) Q^dagger with rho_ss the thermal
/// steady state.
double collision_concurrence(const ModelParams& p);

struct BoundaryCell {
  double dt = 0.0;
  double eta = 0.0;
  double concurrence = 0.0;
};

struct BoundaryContour {
  double dt = 0.0;
  std::optional<double> last_entangled;  // largest grid eta with C > 0 before the first zero
  std::optional<double> first_separable;
};

struct BoundaryMap {
  std::vector<BoundaryCell> cells;  // dt-major, eta ascending
  std::vector<BoundaryContour> contour;
};

BoundaryMap entanglement_boundary(const std::vector<double>& dt_grid, const std::vector<double>& eta_grid,
                                  double gamma, double omega);

// --------------------------------------------------------------- nonlocal

struct NonlocalViolation {
  double lhs = 0.0;
  std::array<BlochVec, 3> bob_directions;      // x, y, z
  std::array<BlochVec, 3> control_directions;  // optimized per term
  std::array<double, 3> terms{};
};

/// Unit vectors on a Fibonacci sphere.
std::vector<BlochVec> fibonacci_sphere(int count);

/// Maximizes each term sum_s p_s (n . r_s)^2 of the steered ensembles over the
/// control measurement direction: a Fibonacci grid of `grid` points followed
/// by a pattern search down to 1e-6 in the spherical angles.
NonlocalViolation nonlocal_violation(const qla::Matrix& rho_sc, int grid = 400);
NonlocalViolation nonlocal_violation(const ModelParams& p, int grid = 400);

}  // namespace collsteer::steering

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

// scenarios.hpp: measurement scenarios on the subenvironments.
//
// Three families are supported: a fixed sharp spin measurement on every
// subenvironment (non-adaptive), the two-direction adaptive scheme that
// produces a dichotomic endpoint ensemble, and the nonlocal scheme in which
// each subenvironment is swapped into a control qubit by a T-gate and only the
// control is measured at the end.

#pragma once

#include "collsteer/bloch.hpp"
#include "collsteer/model.hpp"
#include "collsteer/qla.hpp"
#include "collsteer/seeding.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace collsteer::scenarios {

using model::BlochVec;
using model::ModelParams;

/// Sharp spin observable n.sigma with outcomes +1 and -1.
class SpinObservable {
 public:
  /// Throws unless |n| = 1 within 1e-12.
  explicit SpinObservable(const BlochVec& n);

  static SpinObservable x() { return SpinObservable({1.0, 0.0, 0.0}); }
  static SpinObservable y() { return SpinObservable({0.0, 1.0, 0.0}); }
  static SpinObservable z() { return SpinObservable({0.0, 0.0, 1.0}); }

  const BlochVec& direction() const { return n_; }
  /// (1 + outcome n.sigma) / 2, a rank-one projector.
  qla::Matrix effect(int outcome) const;
  /// Unit ket spanning effect(outcome).
  qla::Vector eigenvector(int outcome) const;

 private:
  BlochVec n_;
};

enum class ScenarioKind { nonadaptive, adaptive, nonlocal };
enum class GateProvenance { schmidt_constructed, closed_form };

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::nonadaptive;
  BlochVec direction{0.0, 0.0, 1.0};          // non-adaptive measurement axis
  BlochVec control_direction{0.0, 0.0, 1.0};  // nonlocal final control measurement
  GateProvenance gate = GateProvenance::schmidt_constructed;

  static ScenarioSpec nonadaptive(const BlochVec& n);
  static ScenarioSpec adaptive();
  static ScenarioSpec nonlocal(const BlochVec& m,
                               GateProvenance gate = GateProvenance::schmidt_constructed);
  /// "x", "y", "z", "adaptive" or "nonlocal" (control measured along z).
  static ScenarioSpec parse(const std::string& name);

  /// Short label used for bins, file names and reports.
  std::string id() const;
};

// ------------------------------------------------------------ measurement

struct MeasurementResult {
  int outcome = 0;
  double probability = 0.0;
  qla::QState conditional;
};

/// Measures the subenvironment (second qubit) of a system (x) subenvironment
/// state along n. Outcome +1 is selected when u < p(+1).
MeasurementResult measure_subenv(const qla::QState& joint, const SpinObservable& n, double u);

/// Both branches of measure_subenv: {p(+1), rho_+|} and {p(-1), rho_-|}.
/// A branch with probability below 1e-15 carries the unconditional marginal.
std::array<std::pair<double, qla::Matrix>, 2> subenv_branches(const qla::Matrix& joint,
                                                              const SpinObservable& n);

// ------------------------------------------------------- fast collisions

/// Collision followed by a sharp measurement of the subenvironment, in Kraus
/// form on the 2x2 system state. Precomputed once per (params, direction).
class CollisionKernel {
 public:
  CollisionKernel(const ModelParams& p, const SpinObservable& n);

  /// p(outcome) for the current state.
  double probability(const Eigen::Matrix2cd& rho, int outcome) const;
  /// Samples an outcome with u in [0, 1), updates rho to the normalized
  /// conditional state and returns the outcome.
  int step(Eigen::Matrix2cd& rho, double u) const;
  /// Unconditional map (outcome-averaged), equal to step_map.
  Eigen::Matrix2cd average(const Eigen::Matrix2cd& rho) const;

 private:
  // kraus_[0] for outcome +1, kraus_[1] for outcome -1; weights folded in.
  std::array<std::vector<Eigen::Matrix2cd>, 2> kraus_;
  Eigen::Matrix2cd plus_effect_;
};

// ---------------------------------------------------------- trajectories

struct ControlGate {
  qla::QOperator t = qla::QOperator::identity(4);  // control (x) subenvironment
  GateProvenance provenance = GateProvenance::schmidt_constructed;
};

/// Collision plus T-gate, traced over the subenvironment: the map on the
/// 4x4 system (x) control state. Vacuum only.
class NonlocalKernel {
 public:
  NonlocalKernel(const ModelParams& p, const ControlGate& gate);
  Eigen::Matrix4cd apply(const Eigen::Matrix4cd& rho_sc) const;

 private:
  std::array<Eigen::Matrix4cd, 2> kraus_;
};

struct PlainPayload {
  Eigen::Matrix2cd rho;
};
struct AdaptivePayload {
  Eigen::Matrix2cd rho;
  int direction_index = 1;  // 1 -> n1, 2 -> n2
};
struct NonlocalPayload {
  Eigen::Matrix4cd rho_sc;
};

/// State of one discrete trajectory. Owned by a single worker.
class TrajectoryState {
 public:
  static TrajectoryState plain(const qla::Matrix& rho_s, std::uint64_t seed);
  static TrajectoryState adaptive(const qla::Matrix& rho_s, std::uint64_t seed, int direction_index = 1);
  static TrajectoryState nonlocal(const qla::Matrix& rho_sc, std::uint64_t seed);

  ScenarioKind kind() const;
  long long steps() const { return steps_; }
  void count_step() { ++steps_; }
  Rng& rng() { return rng_; }

  /// Conditional system state (for nonlocal, the system marginal).
  Eigen::Matrix2cd system_density() const;
  qla::QState system_state() const;
  BlochVec system_bloch() const;

  std::variant<PlainPayload, AdaptivePayload, NonlocalPayload>& payload() { return payload_; }
  const std::variant<PlainPayload, AdaptivePayload, NonlocalPayload>& payload() const { return payload_; }

 private:
  TrajectoryState(std::variant<PlainPayload, AdaptivePayload, NonlocalPayload> payload, std::uint64_t seed)
      : payload_(std::move(payload)), rng_(seed) {}

  std::variant<PlainPayload, AdaptivePayload, NonlocalPayload> payload_;
  long long steps_ = 0;
  Rng rng_;
};

/// One collision + measurement along the kernel's fixed direction.
/// Returns the outcome.
int nonadaptive_step(TrajectoryState& t, const CollisionKernel& kernel);

struct AdaptiveKernels {
  CollisionKernel along_n1;
  CollisionKernel along_n2;
  explicit AdaptiveKernels(const ModelParams& p);
};

/// Measures along the current direction, keeps it on -1 and switches to the
/// other direction on +1. Returns the outcome.
int adaptive_step(TrajectoryState& t, const AdaptiveKernels& kernels);

void nonlocal_step(TrajectoryState& t, const NonlocalKernel& kernel);

// ------------------------------------------------------------- adaptive

/// n1 = (0, sin g, cos g), n2 = (0, -sin g, cos g).
std::pair<BlochVec, BlochVec> adaptive_directions(const ModelParams& p);

/// r+- = (+-sqrt(1 - y_ss^2 - z_ss^2), y_ss, z_ss). Vacuum only.
std::pair<BlochVec, BlochVec> dichotomic_targets(const ModelParams& p);

/// Worst max-abs distance between the two conditional states produced by one
/// collision from `held` measured along `direction`, and their targets:
/// outcome -1 must return `held`, outcome +1 must produce `jumped`.
double dichotomic_residual(const ModelParams& p, const BlochVec& direction, const BlochVec& held,
                           const BlochVec& jumped);

struct DichotomicResiduals {
  double n1 = 0.0;
  double n2 = 0.0;
};

/// Residuals of the two dichotomic closure conditions. Under the
/// {|1>,|0>} basis convention n1 holds r- (and jumps it to r+), n2 holds r+
/// (and jumps it to r-).
DichotomicResiduals verify_dichotomic_conditions(const ModelParams& p);

// ------------------------------------------------------------- nonlocal

/// Pure system (x) control steady-state ansatz with system marginal r_ss,
/// control marginal (0, 0, cos a) and a = arccos|r_ss|, b = atan2(y_ss, z_ss) + pi.
/// Vacuum only; z_ss = 0 is rejected.
model::ThetaRep theta_star(const ModelParams& p);
/// Ket of the theta_star state, global phase fixed by a real positive
/// largest-modulus amplitude.
qla::QState theta_star_state(const ModelParams& p);

/// T-gate that maps the control-subenvironment Schmidt vectors of
/// Q(|psi*> (x) |0_A>) onto the control Schmidt vectors of |psi*> times |0_A>.
ControlGate construct_T_schmidt(const ModelParams& p);

/// Appendix generators in the {|11>,|10>,|01>,|00>} control (x) subenvironment basis.
qla::QOperator closed_form_S1(const ModelParams& p);
qla::QOperator closed_form_S2(const ModelParams& p);
/// exp(-i omega dt S2) exp(-i sqrt(gamma dt) S1).
ControlGate closed_form_T(const ModelParams& p);

/// Norm of the part of (1 (x) T) Q |psi*, 0_A> left outside |0_A>.
double decoupling_residual(const ModelParams& p, const ControlGate& gate);
/// max-abs distance between Tr_A[T Q (rho* (x) |0><0|) Q^dag T^dag] and rho*,
/// computed with the full 8x8 matrices.
double fixed_point_residual(const ModelParams& p, const ControlGate& gate);

/// Two-qubit (system (x) control) GKSL generator -i[H, rho] + D[L] rho.
qla::Matrix two_qubit_gksl(const qla::Matrix& rho_sc, const ModelParams& p);
/// Closed-form steady state of two_qubit_gksl for c = omega / gamma.
model::ThetaRep theta_ss(double c);

/// Effect on A_1..A_N realized by measuring C_k on the control after the
/// T-gates, with the control starting in |0>. Requires gates.size() == n <= 3.
qla::QOperator effective_nonlocal_povm(std::span<const ControlGate> gates, const qla::Matrix& control_effect,
                                       int n);

struct SteeredBranch {
  double probability = 0.0;
  BlochVec bloch;
};

/// Ensemble Bob's system is steered to when the control is measured along m.
std::array<SteeredBranch, 2> steered_ensembles_from_control(const qla::Matrix& rho_sc, const BlochVec& m);

// --------------------------------------------------------- trajectory runs

struct TrajectoryOptions {
  long long steps = 10000;
  long long burn_in = 0;
  std::optional<BlochVec> initial;  // default: steady state of the reduced dynamics
};

struct Endpoint {
  BlochVec bloch;
  double purity = 1.0;
  long long plus_outcomes = 0;
};

/// Runs trajectories of one scenario. Kernels are built once; run() is const
/// and may be called concurrently.
class TrajectoryRunner {
 public:
  TrajectoryRunner(const ScenarioSpec& spec, const ModelParams& p, TrajectoryOptions options);

  long long total_steps() const { return options_.burn_in + options_.steps; }

  Endpoint run(std::uint64_t seed) const;
  /// Endpoints after each of the given (ascending) collision counts.
  std::vector<Endpoint> run_checkpoints(std::uint64_t seed, std::span<const long long> checkpoints) const;

  const ScenarioSpec& spec() const { return spec_; }
  const ModelParams& params() const { return params_; }

 private:
  ScenarioSpec spec_;
  ModelParams params_;
  TrajectoryOptions options_;
  qla::Matrix initial_;
  std::optional<CollisionKernel> fixed_;
  std::optional<AdaptiveKernels> adaptive_;
  std::optional<NonlocalKernel> nonlocal_;
};

}  // namespace collsteer::scenarios

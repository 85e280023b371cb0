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

// model.hpp: the driven, damped qubit as a collision model.
//
// One collision applies Q = W (U (x) 1_A) to system (x) subenvironment, with
//   W = exp(-i g (s+ (x) s- + s- (x) s+)),   U = exp(-i f sx),
// g = sqrt(gamma dt), f = omega dt, and every subenvironment prepared in
// (1 + eta sz) / 2. eta = -1 is the vacuum |0><0|.

#pragma once

#include "collsteer/bloch.hpp"
#include "collsteer/qla.hpp"

namespace collsteer::model {

/// Physical and discretization parameters. Immutable once validated.
class ModelParams {
 public:
  /// Throws std::invalid_argument unless gamma > 0, dt > 0, -1 <= eta < 0 and
  /// all values are finite.
  ModelParams(double gamma, double omega, double dt, double eta = -1.0);

  /// gamma = 1, omega = 10, dt = 1e-3, vacuum.
  static ModelParams reference(double eta = -1.0) { return ModelParams(1.0, 10.0, 1e-3, eta); }

  double gamma() const { return gamma_; }
  double omega() const { return omega_; }
  double dt() const { return dt_; }
  double eta() const { return eta_; }
  bool is_vacuum() const { return eta_ == -1.0; }

  double g() const;    // sqrt(gamma dt)
  double f() const;    // omega dt
  double c() const;    // omega / gamma
  double r33() const;  // -gamma / sqrt(gamma^2 + 16 omega^2)

  /// Collisions per damping time, 1 / (gamma dt).
  double mixing_steps() const { return 1.0 / (gamma_ * dt_); }

  ModelParams with_eta(double eta) const { return ModelParams(gamma_, omega_, dt_, eta); }
  ModelParams with_dt(double dt) const { return ModelParams(gamma_, omega_, dt, eta_); }

 private:
  double gamma_;
  double omega_;
  double dt_;
  double eta_;
};

qla::QOperator build_W(const ModelParams& p);
qla::QOperator build_U(const ModelParams& p);
/// Q = W (U (x) 1_A), system factor first.
qla::QOperator build_Q(const ModelParams& p);

/// (1 + eta sz) / 2 for one subenvironment.
qla::QState env_state(const ModelParams& p);
qla::QState env_state(double eta);

/// Tr_A[Q (rho_S (x) rho_A) Q^dagger].
qla::QState step_map(const qla::QState& rho_s, const ModelParams& p);

/// Closed-form fixed point of step_map. Uses the thermal expression, which is
/// (-eta) times the vacuum one.
BlochVec steady_state(const ModelParams& p);

/// Vacuum steady state written in the coupling angles (g, f). Throws for g = 0.
BlochVec steady_state_vacuum(double g, double f);

/// Thermal steady state written in (gamma, omega, dt, eta).
BlochVec steady_state_thermal(double gamma, double omega, double dt, double eta);

/// Right-hand side of the thermal resonance-fluorescence master equation
///   -i omega [sx, rho] + gamma (1 - eta)/2 D[s-] rho + gamma (1 + eta)/2 D[s+] rho,
/// D[L] rho = L rho L^dagger - {rho, L^dagger L} / 2.
qla::Matrix gksl_rhs(const qla::Matrix& rho_s, const ModelParams& p);
qla::Matrix gksl_rhs(const qla::QState& rho_s, const ModelParams& p);

/// max-abs norm of (step_map(rho) - rho) / dt - gksl_rhs(rho).
double continuum_residual(const ModelParams& p, const qla::QState& rho_s);

inline constexpr int kMaxJointCollisions = 3;

/// Q_N ... Q_1 (rho_S (x) rho_A1 (x) ... (x) rho_AN) Q_1^dagger ... Q_N^dagger,
/// ordered system first, then A_1 .. A_N. The result is pure when rho_S is
/// pure and the bath is the vacuum. Throws for n > 3.
qla::QState joint_state(const qla::QState& rho_s0, const ModelParams& p, int n);

/// Embeds a two-qubit operator acting on qubits (first, second) into an
/// n_qubits register, with qubit 0 the most significant.
qla::Matrix embed_two_qubit(const qla::Matrix& op4, int first, int second, int n_qubits);

}  // namespace collsteer::model

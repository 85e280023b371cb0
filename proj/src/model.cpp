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

#include "collsteer/model.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace collsteer::model {

ModelParams::ModelParams(double gamma, double omega, double dt, double eta)
    : gamma_(gamma), omega_(omega), dt_(dt), eta_(eta) {
  if (!std::isfinite(gamma) || !std::isfinite(omega) || !std::isfinite(dt) || !std::isfinite(eta)) {
    throw std::invalid_argument("ModelParams: parameters must be finite");
  }
  if (!(gamma > 0.0)) throw std::invalid_argument("ModelParams: gamma must be > 0");
  if (!(dt > 0.0)) throw std::invalid_argument("ModelParams: dt must be > 0");
  if (!(eta >= -1.0 && eta < 0.0)) {
    throw std::invalid_argument("ModelParams: eta must lie in [-1, 0), got " + std::to_string(eta));
  }
}

double ModelParams::g() const { return std::sqrt(gamma_ * dt_); }
double ModelParams::f() const { return omega_ * dt_; }
double ModelParams::c() const { return omega_ / gamma_; }
double ModelParams::r33() const {
  return -gamma_ / std::sqrt(gamma_ * gamma_ + 16.0 * omega_ * omega_);
}

qla::QOperator build_W(const ModelParams& p) {
  const auto sp = qla::sigma_plus();
  const auto sm = qla::sigma_minus();
  const auto exchange = qla::kron(sp, sm) + qla::kron(sm, sp);
  return qla::expm_hermitian(exchange, p.g());
}

qla::QOperator build_U(const ModelParams& p) { return qla::expm_hermitian(qla::pauli_x(), p.f()); }

qla::QOperator build_Q(const ModelParams& p) {
  return build_W(p) * qla::kron(build_U(p), qla::pauli_i());
}

qla::QState env_state(double eta) {
  if (!(eta >= -1.0 && eta < 0.0)) {
    throw std::invalid_argument("env_state: eta must lie in [-1, 0)");
  }
  qla::Matrix rho = qla::Matrix::Zero(2, 2);
  rho(0, 0) = 0.5 * (1.0 + eta);
  rho(1, 1) = 0.5 * (1.0 - eta);
  return qla::QState::mixed(rho);
}

qla::QState env_state(const ModelParams& p) { return env_state(p.eta()); }

qla::QState step_map(const qla::QState& rho_s, const ModelParams& p) {
  if (rho_s.dim() != 2) throw std::invalid_argument("step_map: system state must be a qubit");
  const qla::Matrix q = build_Q(p).matrix();
  const qla::Matrix joint = q * qla::kron(rho_s.density(), env_state(p).density()) * q.adjoint();
  constexpr std::array<int, 2> dims{2, 2};
  constexpr std::array<int, 1> keep{0};
  return qla::QState::normalized(qla::partial_trace(joint, dims, keep));
}

BlochVec steady_state_vacuum(double g, double f) {
  if (g == 0.0) {
    throw std::invalid_argument("steady_state: g = 0 leaves the map a pure rotation");
  }
  // With s = sin(g/2) and 1 - cos g = 2 s^2 the denominator has no cancellation.
  const double s2 = std::sin(g / 2.0) * std::sin(g / 2.0);
  const double sf2 = std::sin(f) * std::sin(f);
  const double cg = std::cos(g);
  const double denom = 8.0 * s2 * s2 + 4.0 * cg * sf2;
  const double y = 4.0 * s2 * cg * std::sin(2.0 * f) / denom;
  const double z = -8.0 * s2 * (s2 + cg * sf2) / denom;
  return {0.0, y, z};
}

BlochVec steady_state_thermal(double gamma, double omega, double dt, double eta) {
  const double rg = std::sqrt(gamma * dt);
  if (rg == 0.0) {
    throw std::invalid_argument("steady_state: g = 0 leaves the map a pure rotation");
  }
  const double s2 = std::sin(rg / 2.0) * std::sin(rg / 2.0);
  const double sw2 = std::sin(dt * omega) * std::sin(dt * omega);
  const double cg = std::cos(rg);
  const double denom = 8.0 * s2 * s2 + 4.0 * cg * sw2;
  const double y = -eta * (4.0 * s2 * cg * std::sin(2.0 * dt * omega) / denom);
  const double z = -eta * (-8.0 * s2 * (s2 + cg * sw2) / denom);
  return {0.0, y, z};
}

BlochVec steady_state(const ModelParams& p) {
  return steady_state_thermal(p.gamma(), p.omega(), p.dt(), p.eta());
}

namespace {

qla::Matrix dissipator(const qla::Matrix& l, const qla::Matrix& rho) {
  const qla::Matrix ldl = l.adjoint() * l;
  return l * rho * l.adjoint() - 0.5 * (rho * ldl + ldl * rho);
}

}  // namespace

qla::Matrix gksl_rhs(const qla::Matrix& rho, const ModelParams& p) {
  if (rho.rows() != 2 || rho.cols() != 2) {
    throw std::invalid_argument("gksl_rhs: system state must be 2x2");
  }
  const qla::Matrix sx = qla::pauli_x().matrix();
  const qla::Matrix sp = qla::sigma_plus().matrix();
  const qla::Matrix sm = qla::sigma_minus().matrix();
  const qla::Complex mi(0.0, -1.0);
  const double down = p.gamma() * (1.0 - p.eta()) / 2.0;
  const double up = p.gamma() * (1.0 + p.eta()) / 2.0;
  qla::Matrix out = mi * p.omega() * (sx * rho - rho * sx) + down * dissipator(sm, rho);
  if (up != 0.0) out += up * dissipator(sp, rho);
  return out;
}

qla::Matrix gksl_rhs(const qla::QState& rho_s, const ModelParams& p) {
  return gksl_rhs(rho_s.density(), p);
}

double continuum_residual(const ModelParams& p, const qla::QState& rho_s) {
  const qla::Matrix rho = rho_s.density();
  const qla::Matrix next = step_map(rho_s, p).density();
  return qla::max_abs((next - rho) / p.dt() - gksl_rhs(rho, p));
}

qla::Matrix embed_two_qubit(const qla::Matrix& op4, int first, int second, int n_qubits) {
  if (op4.rows() != 4 || op4.cols() != 4) {
    throw std::invalid_argument("embed_two_qubit: operator must be 4x4");
  }
  if (first == second || first < 0 || second < 0 || first >= n_qubits || second >= n_qubits) {
    throw std::invalid_argument("embed_two_qubit: invalid qubit positions");
  }
  const int dim = 1 << n_qubits;
  const int sf = n_qubits - 1 - first;
  const int ss = n_qubits - 1 - second;
  const int mask = (1 << sf) | (1 << ss);
  qla::Matrix out = qla::Matrix::Zero(dim, dim);
  for (int r = 0; r < dim; ++r) {
    const int rl = (((r >> sf) & 1) << 1) | ((r >> ss) & 1);
    for (int c = 0; c < dim; ++c) {
      if ((r & ~mask) != (c & ~mask)) continue;
      const int cl = (((c >> sf) & 1) << 1) | ((c >> ss) & 1);
      out(r, c) = op4(rl, cl);
    }
  }
  return out;
}

qla::QState joint_state(const qla::QState& rho_s0, const ModelParams& p, int n) {
  if (n < 0 || n > kMaxJointCollisions) {
    throw std::invalid_argument("joint_state: at most 3 collisions are supported");
  }
  if (rho_s0.dim() != 2) throw std::invalid_argument("joint_state: system state must be a qubit");
  const int qubits = n + 1;
  const qla::Matrix q = build_Q(p).matrix();

  if (rho_s0.is_pure_kind() && p.is_vacuum()) {
    qla::Vector psi = rho_s0.amplitudes();
    qla::Vector ground(2);
    ground << 0.0, 1.0;
    for (int i = 0; i < n; ++i) psi = qla::kron(psi, ground);
    for (int i = 1; i <= n; ++i) psi = embed_two_qubit(q, 0, i, qubits) * psi;
    return qla::QState::pure(psi / psi.norm());
  }

  qla::Matrix rho = rho_s0.density();
  const qla::Matrix env = env_state(p).density();
  for (int i = 0; i < n; ++i) rho = qla::kron(rho, env);
  for (int i = 1; i <= n; ++i) {
    const qla::Matrix qi = embed_two_qubit(q, 0, i, qubits);
    rho = qi * rho * qi.adjoint();
  }
  return qla::QState::normalized(rho);
}

}  // namespace collsteer::model

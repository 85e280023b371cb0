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

#include "collsteer/bloch.hpp"

#include <array>
#include <stdexcept>

namespace collsteer::model {

namespace {

const std::array<qla::Matrix, 4>& paulis() {
  static const std::array<qla::Matrix, 4> p = {
      qla::pauli_i().matrix(), qla::pauli_x().matrix(), qla::pauli_y().matrix(),
      qla::pauli_z().matrix()};
  return p;
}

}  // namespace

BlochVec bloch_of(const qla::Matrix& rho) {
  if (rho.rows() != 2 || rho.cols() != 2) {
    throw std::invalid_argument("bloch_of: expected a 2x2 matrix");
  }
  // Tr[rho sx] = 2 Re rho01, Tr[rho sy] = -2 Im rho01 (with rho01 = <1|rho|0>).
  return {2.0 * rho(0, 1).real(), -2.0 * rho(0, 1).imag(), (rho(0, 0) - rho(1, 1)).real()};
}

BlochVec bloch_of(const qla::QState& state) { return bloch_of(state.density()); }

qla::Matrix density_of(const BlochVec& r) {
  qla::Matrix m(2, 2);
  m << 0.5 * (1.0 + r.z), qla::Complex(0.5 * r.x, -0.5 * r.y), qla::Complex(0.5 * r.x, 0.5 * r.y),
      0.5 * (1.0 - r.z);
  return m;
}

qla::QState state_of(const BlochVec& r) { return qla::QState::mixed(density_of(r)); }

qla::Matrix spin_operator(const BlochVec& n) {
  const auto& p = paulis();
  return n.x * p[1] + n.y * p[2] + n.z * p[3];
}

qla::Matrix density_of(const ThetaRep& t) {
  const auto& p = paulis();
  qla::Matrix rho = qla::Matrix::Zero(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (t.theta(i, j) != 0.0) rho += t.theta(i, j) * qla::kron(p[i], p[j]);
    }
  }
  return 0.25 * rho;
}

ThetaRep theta_of(const qla::Matrix& rho4) {
  if (rho4.rows() != 4 || rho4.cols() != 4) {
    throw std::invalid_argument("theta_of: expected a 4x4 matrix");
  }
  const auto& p = paulis();
  ThetaRep t;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      t.theta(i, j) = (rho4 * qla::kron(p[i], p[j])).trace().real();
    }
  }
  return t;
}

}  // namespace collsteer::model

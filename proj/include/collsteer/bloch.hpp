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

// One- and two-qubit real parameterizations.

#pragma once

#include "collsteer/qla.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace collsteer::model {

struct BlochVec {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  double dot(const BlochVec& o) const { return x * o.x + y * o.y + z * o.z; }
  double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }

  friend BlochVec operator+(const BlochVec& a, const BlochVec& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
  }
  friend BlochVec operator-(const BlochVec& a, const BlochVec& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  friend BlochVec operator*(double s, const BlochVec& a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const BlochVec&, const BlochVec&) = default;
};

inline double distance(const BlochVec& a, const BlochVec& b) { return (a - b).norm(); }

inline BlochVec cross(const BlochVec& a, const BlochVec& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

/// (Tr[rho sx], Tr[rho sy], Tr[rho sz]) of a 2x2 density matrix.
BlochVec bloch_of(const qla::Matrix& rho);
BlochVec bloch_of(const qla::QState& state);

/// (1 + r.sigma) / 2. No validation: callers may pass |r| slightly above 1.
qla::Matrix density_of(const BlochVec& r);
qla::QState state_of(const BlochVec& r);

/// n.sigma for a direction n.
qla::Matrix spin_operator(const BlochVec& n);

/// Two-qubit Fano form rho = 1/4 sum_ij theta(i, j) sigma_i (x) sigma_j, with
/// sigma_0 = 1. Row index belongs to the first (system) qubit, column index to
/// the second (control) qubit, so column 0 holds the system Bloch vector and
/// row 0 the control Bloch vector.
struct ThetaRep {
  Eigen::Matrix4d theta = Eigen::Matrix4d::Zero();

  BlochVec first_marginal() const { return {theta(1, 0), theta(2, 0), theta(3, 0)}; }
  BlochVec second_marginal() const { return {theta(0, 1), theta(0, 2), theta(0, 3)}; }
};

qla::Matrix density_of(const ThetaRep& t);
ThetaRep theta_of(const qla::Matrix& rho4);

}  // namespace collsteer::model

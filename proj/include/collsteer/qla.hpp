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

// qla.hpp: small dense complex linear algebra for 1..4 qubits.
//
// Basis convention: every qubit is ordered {|1>, |0>} (excited first), and
// in a product space the left factor is the more significant index, so two
// qubits read {|11>, |10>, |01>, |00>}. With this ordering
//   sigma_z = diag(+1, -1),  sigma_+ = |1><0| = [[0, 1], [0, 0]],
// and the ground state |0> is the -1 eigenvector of sigma_z.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <vector>

namespace collsteer::qla {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr int kMaxDim = 16;
inline constexpr double kUnitaryTol = 1e-12;
inline constexpr double kHermitianTol = 1e-12;

/// Largest absolute entry; the residual norm used throughout the library.
template <class Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// Dense square operator on a 2^n dimensional space, n = 1..4.
class QOperator {
 public:
  explicit QOperator(Matrix m);

  static QOperator identity(int dim);
  static QOperator zero(int dim);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  Complex operator()(int row, int col) const { return m_(row, col); }

  QOperator adjoint() const { return QOperator(m_.adjoint()); }
  bool is_unitary(double tol = kUnitaryTol) const;
  bool is_hermitian(double tol = kHermitianTol) const;

  /// Action on a column vector of matching dimension.
  Vector apply(const Vector& v) const;

  QOperator& operator+=(const QOperator& rhs);
  QOperator& operator-=(const QOperator& rhs);
  QOperator& operator*=(Complex s);

  friend QOperator operator*(const QOperator& a, const QOperator& b);
  friend QOperator operator+(QOperator a, const QOperator& b) { return a += b; }
  friend QOperator operator-(QOperator a, const QOperator& b) { return a -= b; }
  friend QOperator operator*(Complex s, QOperator a) { return a *= s; }

 private:
  Matrix m_;
};

enum class StateKind { pure, mixed };

/// A normalized quantum state, either a ket or a density matrix.
///
/// Construction validates the state: kets must have unit norm (1e-12), density
/// matrices unit trace (1e-12), Hermiticity (1e-12) and eigenvalues >= -1e-10.
class QState {
 public:
  static QState pure(Vector amplitudes);
  static QState mixed(Matrix density);
  /// Mixed state from a matrix that is a state up to rounding: the matrix is
  /// Hermitian-symmetrized and divided by its trace before validation.
  static QState normalized(const Matrix& unnormalized);
  static QState basis(int dim, int index);
  static QState maximally_mixed(int dim);

  StateKind kind() const { return kind_; }
  bool is_pure_kind() const { return kind_ == StateKind::pure; }
  int dim() const;

  /// Amplitudes; only valid for pure kind.
  const Vector& amplitudes() const;
  /// Density matrix, computed from the ket for pure kind.
  Matrix density() const;
  double purity() const;
  double trace_real() const;

 private:
  QState(StateKind kind, Vector psi, Matrix rho);

  StateKind kind_;
  Vector psi_;
  Matrix rho_;
};

struct SchmidtDecomposition {
  std::vector<double> coefficients;  // descending, > 0
  std::vector<Vector> left;
  std::vector<Vector> right;

  int rank() const { return static_cast<int>(coefficients.size()); }
  /// Sum_k lambda_k |left_k> (x) |right_k>.
  Vector reconstruct() const;
};

QOperator kron(const QOperator& a, const QOperator& b);
QState kron(const QState& a, const QState& b);
Matrix kron(const Matrix& a, const Matrix& b);

/// Reduced state on the subsystems listed in `keep` (ascending or not; the
/// result keeps them in their original order).
QState partial_trace(const QState& state, std::span<const int> dims, std::span<const int> keep);
Matrix partial_trace(const Matrix& rho, std::span<const int> dims, std::span<const int> keep);

/// exp(-i * scale * h) through the eigendecomposition of the Hermitian h.
QOperator expm_hermitian(const QOperator& h, double scale);

/// Schmidt decomposition of a pure bipartite state with left dimension
/// d_left. Coefficients below 1e-13 are dropped. Phase convention: the first
/// entry of each left vector with modulus above 1e-12 is real positive.
SchmidtDecomposition schmidt(const QState& state, int d_left, int d_right);

// Single-qubit operators in the {|1>, |0>} ordering.
QOperator pauli_i();
QOperator pauli_x();
QOperator pauli_y();
QOperator pauli_z();
QOperator sigma_plus();
QOperator sigma_minus();

/// Hermitian-symmetric part (A + A^dagger) / 2.
Matrix hermitian_part(const Matrix& a);

/// Sorted (ascending) eigenvalues of a Hermitian matrix.
Eigen::VectorXd hermitian_eigenvalues(const Matrix& a);

}  // namespace collsteer::qla

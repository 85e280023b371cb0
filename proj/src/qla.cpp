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

#include "collsteer/qla.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>
#include <string>

namespace collsteer::qla {

namespace {

bool is_power_of_two_dim(Eigen::Index d) {
  return d >= 2 && d <= kMaxDim && (d & (d - 1)) == 0;
}

void require_dim(Eigen::Index d, const char* what) {
  if (!is_power_of_two_dim(d)) {
    throw std::invalid_argument(std::string(what) + ": dimension " + std::to_string(d) +
                                " is not a supported power of two (2..16)");
  }
}

constexpr double kDropSchmidt = 1e-13;

}  // namespace

Matrix hermitian_part(const Matrix& a) { return 0.5 * (a + a.adjoint()); }

Eigen::VectorXd hermitian_eigenvalues(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian_part(a), Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

// ---------------------------------------------------------------- QOperator

QOperator::QOperator(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) {
    throw std::invalid_argument("QOperator: matrix must be square");
  }
  require_dim(m_.rows(), "QOperator");
}

QOperator QOperator::identity(int dim) { return QOperator(Matrix::Identity(dim, dim)); }

QOperator QOperator::zero(int dim) { return QOperator(Matrix::Zero(dim, dim)); }

bool QOperator::is_unitary(double tol) const {
  return max_abs(m_.adjoint() * m_ - Matrix::Identity(dim(), dim())) <= tol;
}

bool QOperator::is_hermitian(double tol) const { return max_abs(m_ - m_.adjoint()) <= tol; }

Vector QOperator::apply(const Vector& v) const {
  if (v.size() != m_.cols()) {
    throw std::invalid_argument("QOperator::apply: dimension mismatch");
  }
  return m_ * v;
}

QOperator& QOperator::operator+=(const QOperator& rhs) {
  if (rhs.dim() != dim()) throw std::invalid_argument("QOperator: dimension mismatch in +");
  m_ += rhs.m_;
  return *this;
}

QOperator& QOperator::operator-=(const QOperator& rhs) {
  if (rhs.dim() != dim()) throw std::invalid_argument("QOperator: dimension mismatch in -");
  m_ -= rhs.m_;
  return *this;
}

QOperator& QOperator::operator*=(Complex s) {
  m_ *= s;
  return *this;
}

QOperator operator*(const QOperator& a, const QOperator& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("QOperator: dimension mismatch in *");
  return QOperator(a.m_ * b.m_);
}

// ------------------------------------------------------------------- QState

QState::QState(StateKind kind, Vector psi, Matrix rho)
    : kind_(kind), psi_(std::move(psi)), rho_(std::move(rho)) {}

QState QState::pure(Vector amplitudes) {
  require_dim(amplitudes.size(), "QState::pure");
  if (std::abs(amplitudes.norm() - 1.0) > 1e-12) {
    throw std::invalid_argument("QState::pure: amplitudes are not normalized");
  }
  return QState(StateKind::pure, std::move(amplitudes), Matrix());
}

QState QState::mixed(Matrix density) {
  if (density.rows() != density.cols()) {
    throw std::invalid_argument("QState::mixed: density matrix must be square");
  }
  require_dim(density.rows(), "QState::mixed");
  if (std::abs(density.trace() - Complex(1.0, 0.0)) > 1e-12) {
    throw std::invalid_argument("QState::mixed: trace is not 1");
  }
  if (max_abs(density - density.adjoint()) > 1e-12) {
    throw std::invalid_argument("QState::mixed: density matrix is not Hermitian");
  }
  if (hermitian_eigenvalues(density).minCoeff() < -1e-10) {
    throw std::invalid_argument("QState::mixed: density matrix has a negative eigenvalue");
  }
  return QState(StateKind::mixed, Vector(), std::move(density));
}

QState QState::normalized(const Matrix& unnormalized) {
  Matrix h = hermitian_part(unnormalized);
  const double tr = h.trace().real();
  if (!(tr > 0.0)) {
    throw std::invalid_argument("QState::normalized: non-positive trace");
  }
  return mixed(h / tr);
}

QState QState::basis(int dim, int index) {
  if (index < 0 || index >= dim) throw std::out_of_range("QState::basis: index out of range");
  Vector v = Vector::Zero(dim);
  v(index) = 1.0;
  return pure(std::move(v));
}

QState QState::maximally_mixed(int dim) {
  return mixed(Matrix::Identity(dim, dim) / static_cast<double>(dim));
}

int QState::dim() const {
  return static_cast<int>(kind_ == StateKind::pure ? psi_.size() : rho_.rows());
}

const Vector& QState::amplitudes() const {
  if (kind_ != StateKind::pure) {
    throw std::logic_error("QState::amplitudes: state is mixed");
  }
  return psi_;
}

Matrix QState::density() const {
  if (kind_ == StateKind::pure) return psi_ * psi_.adjoint();
  return rho_;
}

double QState::purity() const {
  if (kind_ == StateKind::pure) return 1.0;
  return (rho_ * rho_).trace().real();
}

double QState::trace_real() const {
  if (kind_ == StateKind::pure) return psi_.squaredNorm();
  return rho_.trace().real();
}

Vector SchmidtDecomposition::reconstruct() const {
  if (coefficients.empty()) return Vector();
  const auto dl = left.front().size();
  const auto dr = right.front().size();
  Vector out = Vector::Zero(dl * dr);
  for (std::size_t k = 0; k < coefficients.size(); ++k) {
    for (Eigen::Index i = 0; i < dl; ++i) {
      out.segment(i * dr, dr) += coefficients[k] * left[k](i) * right[k];
    }
  }
  return out;
}

// ------------------------------------------------------------------ kron

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

QOperator kron(const QOperator& a, const QOperator& b) {
  if (a.dim() * b.dim() > kMaxDim) {
    throw std::invalid_argument("kron: product dimension exceeds 16");
  }
  return QOperator(kron(a.matrix(), b.matrix()));
}

QState kron(const QState& a, const QState& b) {
  if (a.dim() * b.dim() > kMaxDim) {
    throw std::invalid_argument("kron: product dimension exceeds 16");
  }
  if (a.is_pure_kind() && b.is_pure_kind()) {
    const Vector& x = a.amplitudes();
    const Vector& y = b.amplitudes();
    Vector out(x.size() * y.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) out.segment(i * y.size(), y.size()) = x(i) * y;
    return QState::pure(out / out.norm());
  }
  return QState::normalized(kron(a.density(), b.density()));
}

// ---------------------------------------------------------- partial trace

Matrix partial_trace(const Matrix& rho, std::span<const int> dims, std::span<const int> keep) {
  const int n = static_cast<int>(dims.size());
  int total = 1;
  for (int d : dims) {
    if (d < 1) throw std::invalid_argument("partial_trace: subsystem dimension must be positive");
    total *= d;
  }
  if (rho.rows() != total || rho.cols() != total) {
    throw std::invalid_argument("partial_trace: product of dims does not match state dimension");
  }
  std::vector<bool> kept(n, false);
  for (int k : keep) {
    if (k < 0 || k >= n || kept[k]) {
      throw std::invalid_argument("partial_trace: invalid keep index");
    }
    kept[k] = true;
  }

  // Split a full index into (kept index, traced index), both mixed-radix with
  // the left subsystem most significant.
  auto split = [&](int idx, int& kidx, int& tidx) {
    std::vector<int> digits(n);
    for (int j = n - 1; j >= 0; --j) {
      digits[j] = idx % dims[j];
      idx /= dims[j];
    }
    kidx = 0;
    tidx = 0;
    for (int j = 0; j < n; ++j) {
      if (kept[j]) {
        kidx = kidx * dims[j] + digits[j];
      } else {
        tidx = tidx * dims[j] + digits[j];
      }
    }
  };

  int kdim = 1;
  for (int j = 0; j < n; ++j) {
    if (kept[j]) kdim *= dims[j];
  }
  std::vector<int> kpart(total), tpart(total);
  for (int i = 0; i < total; ++i) split(i, kpart[i], tpart[i]);

  Matrix out = Matrix::Zero(kdim, kdim);
  for (int r = 0; r < total; ++r) {
    for (int c = 0; c < total; ++c) {
      if (tpart[r] == tpart[c]) out(kpart[r], kpart[c]) += rho(r, c);
    }
  }
  return out;
}

QState partial_trace(const QState& state, std::span<const int> dims, std::span<const int> keep) {
  return QState::normalized(partial_trace(state.density(), dims, keep));
}

// ------------------------------------------------------------ exponentials

QOperator expm_hermitian(const QOperator& h, double scale) {
  if (!h.is_hermitian()) {
    throw std::invalid_argument("expm_hermitian: operator is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian_part(h.matrix()));
  const Matrix& v = solver.eigenvectors();
  Vector phases(h.dim());
  for (int k = 0; k < h.dim(); ++k) {
    phases(k) = std::exp(Complex(0.0, -scale * solver.eigenvalues()(k)));
  }
  return QOperator(v * phases.asDiagonal() * v.adjoint());
}

// ---------------------------------------------------------------- Schmidt

SchmidtDecomposition schmidt(const QState& state, int d_left, int d_right) {
  if (!state.is_pure_kind()) {
    throw std::invalid_argument("schmidt: state must be pure");
  }
  if (d_left < 1 || d_right < 1 || d_left * d_right != state.dim()) {
    throw std::invalid_argument("schmidt: d_left * d_right must equal the state dimension");
  }
  const Vector& psi = state.amplitudes();
  Matrix m(d_left, d_right);
  for (int i = 0; i < d_left; ++i) {
    for (int j = 0; j < d_right; ++j) m(i, j) = psi(i * d_right + j);
  }
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);

  SchmidtDecomposition out;
  const auto& sv = svd.singularValues();
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    if (sv(k) <= kDropSchmidt) continue;
    Vector u = svd.matrixU().col(k);
    Vector w = svd.matrixV().col(k).conjugate();
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      if (std::abs(u(i)) > 1e-12) {
        const Complex phase = u(i) / std::abs(u(i));
        u /= phase;
        w *= phase;
        break;
      }
    }
    out.coefficients.push_back(sv(k));
    out.left.push_back(std::move(u));
    out.right.push_back(std::move(w));
  }
  return out;
}

// ----------------------------------------------------------------- Paulis

QOperator pauli_i() { return QOperator::identity(2); }

QOperator pauli_x() {
  Matrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return QOperator(m);
}

QOperator pauli_y() {
  Matrix m(2, 2);
  m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
  return QOperator(m);
}

QOperator pauli_z() {
  Matrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return QOperator(m);
}

QOperator sigma_plus() {  // |1><0|
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = 1.0;
  return QOperator(m);
}

QOperator sigma_minus() {  // |0><1|
  Matrix m = Matrix::Zero(2, 2);
  m(1, 0) = 1.0;
  return QOperator(m);
}

}  // namespace collsteer::qla

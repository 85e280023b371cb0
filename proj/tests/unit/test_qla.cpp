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

#include "generators.hpp"

#include <catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

using namespace collsteer;
using qla::Complex;
using qla::Matrix;
using qla::QOperator;
using qla::QState;
using qla::Vector;

namespace {

const Complex I(0.0, 1.0);

Vector ket(std::initializer_list<Complex> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  int i = 0;
  for (auto x : xs) v(i++) = x;
  return v;
}

// Direct index contraction, independent of the mixed-radix implementation.
Matrix trace_out_middle(const Matrix& rho) {
  Matrix out = Matrix::Zero(4, 4);
  for (int a = 0; a < 2; ++a)
    for (int c = 0; c < 2; ++c)
      for (int a2 = 0; a2 < 2; ++a2)
        for (int c2 = 0; c2 < 2; ++c2)
          for (int b = 0; b < 2; ++b) out(2 * a + c, 2 * a2 + c2) += rho(4 * a + 2 * b + c, 4 * a2 + 2 * b + c2);
  return out;
}

}  // namespace

TEST_CASE("QOperator validates its shape") {
  CHECK_THROWS_AS(QOperator(Matrix::Zero(3, 3)), std::invalid_argument);
  CHECK_THROWS_AS(QOperator(Matrix::Zero(2, 4)), std::invalid_argument);
  CHECK_THROWS_AS(QOperator(Matrix::Zero(32, 32)), std::invalid_argument);
  CHECK(QOperator::identity(8).is_unitary());
  CHECK(qla::pauli_y().is_hermitian());
  CHECK_FALSE(qla::sigma_plus().is_hermitian());
}

TEST_CASE("QState validation") {
  CHECK_THROWS_AS(QState::pure(ket({1.0, 1.0})), std::invalid_argument);
  CHECK_THROWS_AS(QState::mixed(Matrix::Identity(2, 2)), std::invalid_argument);
  Matrix neg(2, 2);
  neg << 1.5, 0.0, 0.0, -0.5;
  CHECK_THROWS_AS(QState::mixed(neg), std::invalid_argument);
  Matrix nonherm(2, 2);
  nonherm << 0.5, 0.1, 0.0, 0.5;
  CHECK_THROWS_AS(QState::mixed(nonherm), std::invalid_argument);
  CHECK(QState::maximally_mixed(4).purity() == Catch::Approx(0.25));
  CHECK(QState::basis(2, 1).density()(1, 1) == Complex(1.0));
}

TEST_CASE("kron follows the excited-first basis") {
  const Matrix id4 = qla::kron(QOperator::identity(2), QOperator::identity(2)).matrix();
  CHECK(qla::max_abs(id4 - Matrix::Identity(4, 4)) == 0.0);

  const Matrix zi = qla::kron(qla::pauli_z(), qla::pauli_i()).matrix();
  Matrix expected = Matrix::Zero(4, 4);
  expected.diagonal() << 1.0, 1.0, -1.0, -1.0;
  CHECK(qla::max_abs(zi - expected) == 0.0);

  // <10| (s+ s- + s- s+) |01> with |10> at index 1 and |01> at index 2.
  const Matrix flip = (qla::kron(qla::sigma_plus(), qla::sigma_minus()) + qla::kron(qla::sigma_minus(), qla::sigma_plus())).matrix();
  CHECK(flip(1, 2) == Complex(1.0));
  CHECK(flip(2, 1) == Complex(1.0));
  CHECK(qla::max_abs(flip - flip.adjoint()) == 0.0);

  CHECK_THROWS_AS(qla::kron(QOperator::identity(16), QOperator::identity(2)), std::invalid_argument);
}

TEST_CASE("partial_trace examples") {
  const std::array<int, 2> dims{2, 2};
  const std::array<int, 1> keep_a{1};
  const std::array<int, 1> keep_s{0};
  const QState ground = QState::basis(4, 3);  // |00>
  const QState reduced = qla::partial_trace(ground, dims, keep_a);
  CHECK(qla::max_abs(reduced.density() - QState::basis(2, 1).density()) == 0.0);

  const QState bell = QState::pure(ket({1.0 / std::sqrt(2.0), 0.0, 0.0, 1.0 / std::sqrt(2.0)}));
  CHECK(qla::max_abs(qla::partial_trace(bell, dims, keep_s).density() - 0.5 * Matrix::Identity(2, 2)) < 1e-15);

  const std::array<int, 2> bad_dims{2, 4};
  CHECK_THROWS_AS(qla::partial_trace(ground, bad_dims, keep_a), std::invalid_argument);
}

TEST_CASE("partial_trace property: trace and index contraction", "[property]") {
  testgen::Gen gen(11);
  const std::array<int, 3> dims{2, 2, 2};
  const std::array<int, 2> keep{0, 2};
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix rho = gen.density(8);
    const Matrix r = qla::partial_trace(rho, dims, keep);
    CHECK(std::abs(r.trace() - Complex(1.0)) < 1e-14);
    CHECK(qla::max_abs(r - r.adjoint()) < 1e-15);
    CHECK(qla::max_abs(r - trace_out_middle(rho)) < 1e-15);
  }
}

TEST_CASE("partial_trace of kron returns the kept factor", "[property]") {
  testgen::Gen gen(12);
  const std::array<int, 2> dims{2, 4};
  const std::array<int, 1> keep_l{0};
  const std::array<int, 1> keep_r{1};
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix a = gen.density(2);
    const Matrix b = gen.density(4);
    const Matrix ab = qla::kron(a, b);
    CHECK(qla::max_abs(qla::partial_trace(ab, dims, keep_l) - a) <= 1e-14);
    CHECK(qla::max_abs(qla::partial_trace(ab, dims, keep_r) - b) <= 1e-14);
  }
}

TEST_CASE("expm_hermitian examples") {
  testgen::Gen gen(13);
  const QOperator h(gen.hermitian(4));
  CHECK(qla::max_abs(qla::expm_hermitian(h, 0.0).matrix() - Matrix::Identity(4, 4)) < 1e-14);

  // cos(pi/2) 1 - i sin(pi/2) sx
  const Matrix u = qla::expm_hermitian(qla::pauli_x(), std::numbers::pi / 2).matrix();
  CHECK(qla::max_abs(u - (-I) * qla::pauli_x().matrix()) < 1e-15);

  const QOperator flip = qla::kron(qla::sigma_plus(), qla::sigma_minus()) + qla::kron(qla::sigma_minus(), qla::sigma_plus());
  const double g = 0.37;
  const Matrix w = qla::expm_hermitian(flip, g).matrix();
  Matrix block(2, 2);
  block << w(1, 1), w(1, 2), w(2, 1), w(2, 2);
  Matrix rot(2, 2);
  rot << std::cos(g), -I * std::sin(g), -I * std::sin(g), std::cos(g);
  CHECK(qla::max_abs(block - rot) < 1e-15);
  CHECK(std::abs(w(0, 0) - Complex(1.0)) < 1e-15);
  CHECK(std::abs(w(3, 3) - Complex(1.0)) < 1e-15);

  CHECK_THROWS_AS(qla::expm_hermitian(qla::sigma_plus(), 1.0), std::invalid_argument);
}

TEST_CASE("expm_hermitian is unitary", "[property]") {
  testgen::Gen gen(14);
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = 2 << (trial % 3);
    const QOperator u = qla::expm_hermitian(QOperator(gen.hermitian(dim)), gen.uniform(-5.0, 5.0));
    CHECK(qla::max_abs(u.matrix().adjoint() * u.matrix() - Matrix::Identity(dim, dim)) <= 1e-12);
  }
}

TEST_CASE("schmidt examples") {
  const QState product = qla::kron(QState::pure(ket({0.6, 0.8})), QState::pure(ket({I, 0.0})));
  const auto p = qla::schmidt(product, 2, 2);
  REQUIRE(p.rank() == 1);
  CHECK(p.coefficients[0] == Catch::Approx(1.0).epsilon(1e-14));

  const QState bell = QState::pure(ket({1.0 / std::sqrt(2.0), 0.0, 0.0, 1.0 / std::sqrt(2.0)}));
  const auto b = qla::schmidt(bell, 2, 2);
  REQUIRE(b.rank() == 2);
  CHECK(std::abs(b.coefficients[0] - 1.0 / std::sqrt(2.0)) < 1e-15);
  CHECK(std::abs(b.coefficients[1] - 1.0 / std::sqrt(2.0)) < 1e-15);

  CHECK_THROWS_AS(qla::schmidt(QState::maximally_mixed(4), 2, 2), std::invalid_argument);
  CHECK_THROWS_AS(qla::schmidt(bell, 2, 4), std::invalid_argument);
}

TEST_CASE("schmidt property: reconstruction, orthonormality, reduced spectrum", "[property]") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    testgen::Gen gen(1000 + seed);
    const QState psi = QState::pure(gen.ket(8));
    const auto s = qla::schmidt(psi, 2, 4);
    double norm = 0.0;
    for (double l : s.coefficients) norm += l * l;
    CHECK(std::abs(norm - 1.0) <= 1e-10);
    CHECK(qla::max_abs(Vector(s.reconstruct() - psi.amplitudes())) <= 1e-10);
    for (int i = 0; i < s.rank(); ++i) {
      for (int j = 0; j < s.rank(); ++j) {
        const double delta = i == j ? 1.0 : 0.0;
        CHECK(std::abs(s.left[i].dot(s.left[j]) - delta) < 1e-12);
        CHECK(std::abs(s.right[i].dot(s.right[j]) - delta) < 1e-12);
      }
      // Phase convention: first significant entry of each left vector is real positive.
      for (int k = 0; k < 2; ++k) {
        if (std::abs(s.left[i](k)) > 1e-12) {
          CHECK(std::abs(s.left[i](k).imag()) < 1e-14);
          CHECK(s.left[i](k).real() > 0.0);
          break;
        }
      }
    }
    // Oracle: eigenvalues of the reduced state of the left factor.
    const std::array<int, 2> dims{2, 4};
    const std::array<int, 1> keep{0};
    const Eigen::VectorXd ev = qla::hermitian_eigenvalues(qla::partial_trace(psi, dims, keep).density());
    for (int i = 0; i < s.rank(); ++i) {
      CHECK(std::abs(s.coefficients[i] * s.coefficients[i] - ev(1 - i)) <= 1e-10);
    }
  }
}

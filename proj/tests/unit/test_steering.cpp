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

#include "collsteer/parallel.hpp"
#include "collsteer/scenarios.hpp"
#include "collsteer/steering.hpp"

#include "generators.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

using namespace collsteer;
using namespace collsteer::steering;
using model::BlochVec;
using model::ModelParams;
using qla::Matrix;
using qla::QState;
using qla::Vector;

namespace {

const BlochVec kX{1.0, 0.0, 0.0};
const BlochVec kY{0.0, 1.0, 0.0};
const BlochVec kZ{0.0, 0.0, 1.0};

std::vector<BlochVec> circle_around_x(int count, double phase = 0.0) {
  std::vector<BlochVec> pts;
  for (int i = 0; i < count; ++i) {
    const double t = phase + 2.0 * std::numbers::pi * i / count;
    pts.push_back({0.0, std::cos(t), std::sin(t)});
  }
  return pts;
}

Vector bell_ket() {
  Vector v = Vector::Zero(4);
  v(0) = v(3) = 1.0 / std::sqrt(2.0);
  return v;
}

Matrix random_product(testgen::Gen& gen) { return qla::kron(gen.density(2), gen.density(2)); }

EnsembleConfig small_budget(long long trajectories, std::uint64_t seed) {
  EnsembleConfig c;
  c.trajectories = trajectories;
  c.steps = 2000;
  c.burn_in = 2000;
  c.seed = seed;
  c.workers = default_workers();
  return c;
}

}  // namespace

TEST_CASE("EndpointEnsemble validation and clustering") {
  EndpointEnsemble e = EndpointEnsemble::uniform("t", {kX, kX, kY});
  CHECK_NOTHROW(e.validate());
  CHECK(e.distinct_points() == 2);
  CHECK(e.members[0].purity == Catch::Approx(1.0));
  e.members[0].weight = 0.5;
  CHECK_THROWS_AS(e.validate(), std::invalid_argument);
  EndpointEnsemble outside = EndpointEnsemble::uniform("t", {{1.1, 0.0, 0.0}});
  CHECK_THROWS_AS(outside.validate(), std::invalid_argument);
}

TEST_CASE("ensemble_avg_sq examples") {
  const Estimate pole = ensemble_avg_sq(EndpointEnsemble::uniform("p", {kX}), kX);
  CHECK(pole.value == 1.0);

  const Estimate circle = ensemble_avg_sq(EndpointEnsemble::uniform("c", circle_around_x(360, 0.3)), kY);
  CHECK(circle.value == Catch::Approx(0.5).margin(1e-14));

  const ModelParams p = ModelParams::reference();
  const auto [rp, rm] = scenarios::dichotomic_targets(p);
  const Estimate dich = ensemble_avg_sq(EndpointEnsemble::uniform("d", {rp, rm}), kX);
  const BlochVec ss = model::steady_state(p);
  CHECK(dich.value == Catch::Approx(1.0 - ss.y * ss.y - ss.z * ss.z).margin(1e-15));
  CHECK(dich.error == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("ensemble_avg_sq is a commutative aggregate", "[property]") {
  testgen::Gen gen(60);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<BlochVec> pts;
    for (int i = 0; i < 20; ++i) pts.push_back(gen.ball_vector());
    const BlochVec n = gen.unit_vector();
    const double base = ensemble_avg_sq(EndpointEnsemble::uniform("a", pts), n).value;

    std::vector<BlochVec> shuffled = pts;
    std::reverse(shuffled.begin(), shuffled.end());
    std::swap(shuffled[0], shuffled[7]);
    CHECK(ensemble_avg_sq(EndpointEnsemble::uniform("b", shuffled), n).value == Catch::Approx(base).margin(1e-15));

    EndpointEnsemble split = EndpointEnsemble::uniform("c", pts);
    const EnsembleMember half{split.members[3].weight / 2.0, split.members[3].bloch, split.members[3].purity};
    split.members[3] = half;
    split.members.push_back(half);
    CHECK_NOTHROW(split.validate());
    CHECK(ensemble_avg_sq(split, n).value == Catch::Approx(base).margin(1e-15));
  }
}

TEST_CASE("pure great-circle ensembles saturate the y and z terms", "[property]") {
  testgen::Gen gen(61);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<BlochVec> pts;
    for (int i = 0; i < 30; ++i) {
      const double t = gen.uniform(0.0, 2.0 * std::numbers::pi);
      pts.push_back({0.0, std::cos(t), std::sin(t)});
    }
    const EndpointEnsemble e = EndpointEnsemble::uniform("x", pts);
    CHECK(std::abs(ensemble_avg_sq(e, kY).value + ensemble_avg_sq(e, kZ).value - 1.0) <= 1e-9);
  }
}

TEST_CASE("inequality_lhs examples") {
  const EndpointEnsemble mixed = EndpointEnsemble::uniform("m", {{0.0, 0.0, 0.0}});
  CHECK(inequality_lhs(mixed, mixed, mixed, kX, kY, kZ) == 0.0);

  testgen::Gen gen(62);
  for (int i = 0; i < 20; ++i) {
    const EndpointEnsemble pure = EndpointEnsemble::uniform("p", {gen.unit_vector()});
    const BlochVec n = gen.unit_vector();
    BlochVec m = model::cross(n, gen.unit_vector());
    m = (1.0 / m.norm()) * m;
    const BlochVec k = model::cross(n, m);
    CHECK(inequality_lhs(pure, pure, pure, n, m, k) == Catch::Approx(1.0).margin(1e-14));
  }

  const EndpointEnsemble circle = EndpointEnsemble::uniform("x", circle_around_x(100));
  const EndpointEnsemble poles = EndpointEnsemble::uniform("y", {kX, {-1.0, 0.0, 0.0}});
  const Estimate est = inequality_lhs_estimate(circle, circle, poles, kY, kZ, kX);
  CHECK(est.value == Catch::Approx(2.0).margin(1e-14));
  CHECK(est.error == Catch::Approx(0.0).margin(1e-12));

  CHECK_THROWS_AS(inequality_lhs(mixed, mixed, mixed, kX, {0.0, 1.0, 1e-6}, kZ), std::invalid_argument);
  CHECK_THROWS_AS(inequality_lhs(mixed, mixed, mixed, kX, kY, {0.0, 0.0, 2.0}), std::invalid_argument);
}

TEST_CASE("ensembles do not depend on the worker count") {
  const ModelParams p = ModelParams::reference();
  EnsembleConfig c;
  c.trajectories = 40;
  c.steps = 300;
  c.burn_in = 100;
  c.seed = 17;
  c.workers = 1;
  const EndpointEnsemble a = generate_ensemble(scenarios::ScenarioSpec::parse("y"), p, c);
  c.workers = 4;
  const EndpointEnsemble b = generate_ensemble(scenarios::ScenarioSpec::parse("y"), p, c);
  REQUIRE(a.members.size() == 40);
  for (std::size_t i = 0; i < a.members.size(); ++i) CHECK(a.members[i].bloch == b.members[i].bloch);
  c.seed = 18;
  const EndpointEnsemble other = generate_ensemble(scenarios::ScenarioSpec::parse("y"), p, c);
  CHECK_FALSE(other.members[0].bloch == a.members[0].bloch);
}

TEST_CASE("delta_S is reproducible and ordered in eta") {
  const ModelParams p = ModelParams::reference();
  const SteeringReport r1 = delta_S(p, small_budget(200, 5));
  const SteeringReport r2 = delta_S(p, small_budget(200, 5));
  CHECK(r1.delta_s.value == r2.delta_s.value);
  CHECK(r1.delta_s.error == r2.delta_s.error);
  CHECK(r1.delta_s.value == r1.lhs.value - 1.0);
  CHECK(r1.terms[0].scenario == "x");
  CHECK(r1.terms[2].scenario == "y");


  std::vector<SteeringReport> sweep;
  for (double eta : {-0.95, -0.8, -0.6}) sweep.push_back(delta_S(p.with_eta(eta), small_budget(2000, 6)));
  for (int i = 0; i < 2; ++i) {
    const double gap = sweep[i].delta_s.value - sweep[i + 1].delta_s.value;
    const double sigma = std::hypot(sweep[i].delta_s.error, sweep[i + 1].delta_s.error);
    CHECK(gap > 3.0 * sigma);
  }
}

TEST_CASE("vacuum x-ensemble saturates the great-circle identity after burn-in") {
  const ModelParams p = ModelParams::reference();
  EnsembleConfig c = small_budget(100, 8);
  c.burn_in = static_cast<long long>(50.0 / (p.gamma() * p.dt()));
  const EndpointEnsemble e = generate_ensemble(scenarios::ScenarioSpec::parse("x"), p, c);
  CHECK(std::abs(ensemble_avg_sq(e, kY).value + ensemble_avg_sq(e, kZ).value - 1.0) <= 1e-6);
}

TEST_CASE("eta_crit_search rejects brackets without a sign change") {
  EtaCritConfig c;
  c.lower = -1.0;
  c.upper = -0.95;
  c.budget = small_budget(300, 7);
  c.max_trajectories = 300;
  CHECK_THROWS(eta_crit_search(ModelParams::reference(), c));
}

TEST_CASE("concurrence examples") {
  CHECK(concurrence(QState::pure(bell_ket())) == Catch::Approx(1.0).margin(1e-12));
  testgen::Gen gen(63);
  for (int i = 0; i < 50; ++i) {
    CHECK(concurrence(random_product(gen)) == 0.0);
    const Vector prod = qla::kron(gen.ket(2), gen.ket(2));
    CHECK(concurrence(QState::pure(prod)) == 0.0);
  }

  // Werner family: C = max(0, (3p - 1) / 2).
  for (double w : {0.0, 0.2, 1.0 / 3.0, 0.5, 0.8, 1.0}) {
    const Matrix rho = w * bell_ket() * bell_ket().adjoint() + (1.0 - w) * Matrix::Identity(4, 4) / 4.0;
    CHECK(concurrence(rho) == Catch::Approx(std::max(0.0, (3.0 * w - 1.0) / 2.0)).margin(1e-12));
  }

  const ModelParams p = ModelParams::reference();
  const double r = model::steady_state(p).norm();
  CHECK(concurrence(scenarios::theta_star_state(p)) == Catch::Approx(std::sqrt(1.0 - r * r)).margin(1e-10));
}

TEST_CASE("concurrence of pure states is twice the Schmidt product", "[property]") {
  testgen::Gen gen(64);
  for (int i = 0; i < 100; ++i) {
    const QState psi = QState::pure(gen.ket(4));
    const auto s = qla::schmidt(psi, 2, 2);
    const double expected = s.rank() == 2 ? 2.0 * s.coefficients[0] * s.coefficients[1] : 0.0;
    CHECK(concurrence(psi) == Catch::Approx(expected).margin(1e-10));
  }
}

TEST_CASE("separable mixtures have zero concurrence", "[property]") {
  testgen::Gen gen(65);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix rho = Matrix::Zero(4, 4);
    double total = 0.0;
    for (int k = 0; k < 10; ++k) {
      const double w = gen.uniform();
      total += w;
      const Vector a = gen.ket(2);
      const Vector b = gen.ket(2);
      const Vector ab = qla::kron(a, b);
      rho += w * ab * ab.adjoint();
    }
    CHECK(concurrence(Matrix(rho / total)) == 0.0);
  }
}

TEST_CASE("collision concurrence and the entanglement boundary") {
  const ModelParams p = ModelParams::reference();
  CHECK(collision_concurrence(p) > 0.0);
  CHECK(collision_concurrence(p.with_eta(-0.72)) == 0.0);

  const std::vector<double> dts{1e-3, 1e-2, 5e-2, 1e-1};
  std::vector<double> etas;
  for (int k = 0; k < 50; ++k) etas.push_back(-1.0 + 0.02 * k);
  const BoundaryMap map = entanglement_boundary(dts, etas, 1.0, 10.0);
  CHECK(map.cells.size() == dts.size() * etas.size());
  REQUIRE(map.contour.size() == dts.size());
  for (const BoundaryCell& c : map.cells) {
    CHECK(c.concurrence >= 0.0);
    CHECK(c.concurrence <= 1.0);
  }
  for (std::size_t i = 0; i < dts.size(); ++i) {
    REQUIRE(map.contour[i].first_separable.has_value());
    CHECK(*map.contour[i].first_separable <= -0.72);
    if (i > 0) CHECK(*map.contour[i].first_separable >= *map.contour[i - 1].first_separable);
  }
}

TEST_CASE("fibonacci_sphere covers the sphere with unit vectors") {
  const auto pts = fibonacci_sphere(400);
  REQUIRE(pts.size() == 400);
  BlochVec sum{};
  for (const auto& v : pts) {
    CHECK(v.norm() == Catch::Approx(1.0).margin(1e-14));
    sum = sum + v;
  }
  CHECK(sum.norm() / 400.0 < 1e-2);
}

TEST_CASE("nonlocal_violation examples") {
  const NonlocalViolation bell = nonlocal_violation(Matrix(bell_ket() * bell_ket().adjoint()));
  CHECK(bell.lhs == Catch::Approx(3.0).margin(1e-9));

  testgen::Gen gen(66);
  const BlochVec rs = gen.ball_vector();
  const NonlocalViolation product = nonlocal_violation(qla::kron(model::density_of(rs), gen.density(2)), 312);
  CHECK(product.lhs == Catch::Approx(rs.dot(rs)).margin(1e-12));

  const NonlocalViolation star = nonlocal_violation(ModelParams::reference());
  CHECK(star.lhs >= 2.9);
  CHECK(star.lhs <= 3.0 + 1e-12);

  CHECK_THROWS_AS(nonlocal_violation(Matrix(bell_ket() * bell_ket().adjoint()), 100), std::invalid_argument);
}

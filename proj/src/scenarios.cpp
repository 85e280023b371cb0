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

#include "collsteer/scenarios.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace collsteer::scenarios {

namespace {

constexpr double kMinBranchProbability = 1e-15;

qla::Vector ground_ket() {
  qla::Vector v(2);
  v << 0.0, 1.0;  // |0> is the second basis vector
  return v;
}

qla::Vector excited_ket() {
  qla::Vector v(2);
  v << 1.0, 0.0;
  return v;
}

Eigen::Matrix2cd to_fixed2(const qla::Matrix& m) { return Eigen::Matrix2cd(m); }

Eigen::Matrix2cd normalize_state(const Eigen::Matrix2cd& m) {
  Eigen::Matrix2cd h = 0.5 * (m + m.adjoint());
  return h / h.trace().real();
}

// Orthonormal completion of `given` (unit, mutually orthogonal) to a basis of
// C^dim by Gram-Schmidt over the canonical basis vectors in index order.
std::vector<qla::Vector> complete_basis(const std::vector<qla::Vector>& given, int dim) {
  std::vector<qla::Vector> basis = given;
  std::vector<qla::Vector> extra;
  for (int k = 0; k < dim && static_cast<int>(basis.size()) < dim; ++k) {
    qla::Vector v = qla::Vector::Zero(dim);
    v(k) = 1.0;
    for (const auto& b : basis) v -= b.dot(v) * b;  // Eigen's dot conjugates the left factor
    const double nv = v.norm();
    if (nv > 1e-8) {
      v /= nv;
      basis.push_back(v);
      extra.push_back(v);
    }
  }
  if (static_cast<int>(basis.size()) != dim) {
    throw std::runtime_error("complete_basis: could not complete basis");
  }
  return extra;
}

qla::Matrix density_from_ket(const qla::Vector& v) { return v * v.adjoint(); }

qla::Matrix trace_out_last_qubit(const qla::Matrix& rho) {
  const int n = static_cast<int>(rho.rows()) / 2;
  qla::Matrix out = qla::Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out(i, j) = rho(2 * i, 2 * j) + rho(2 * i + 1, 2 * j + 1);
  }
  return out;
}

}  // namespace

// --------------------------------------------------------- SpinObservable

SpinObservable::SpinObservable(const BlochVec& n) : n_(n) {
  if (std::abs(n.norm() - 1.0) > 1e-12) {
    throw std::invalid_argument("SpinObservable: direction must be a unit vector");
  }
}

qla::Matrix SpinObservable::effect(int outcome) const {
  if (outcome != 1 && outcome != -1) throw std::invalid_argument("SpinObservable: outcome must be +1 or -1");
  return 0.5 * (qla::Matrix::Identity(2, 2) + static_cast<double>(outcome) * model::spin_operator(n_));
}

qla::Vector SpinObservable::eigenvector(int outcome) const {
  const qla::Matrix e = effect(outcome);
  const int col = e.col(0).norm() >= e.col(1).norm() ? 0 : 1;
  qla::Vector v = e.col(col);
  return v / v.norm();
}

// ----------------------------------------------------------- ScenarioSpec

ScenarioSpec ScenarioSpec::nonadaptive(const BlochVec& n) {
  SpinObservable check(n);
  ScenarioSpec s;
  s.kind = ScenarioKind::nonadaptive;
  s.direction = check.direction();
  return s;
}

ScenarioSpec ScenarioSpec::adaptive() {
  ScenarioSpec s;
  s.kind = ScenarioKind::adaptive;
  return s;
}

ScenarioSpec ScenarioSpec::nonlocal(const BlochVec& m, GateProvenance gate) {
  SpinObservable check(m);
  ScenarioSpec s;
  s.kind = ScenarioKind::nonlocal;
  s.control_direction = m;
  s.gate = gate;
  return s;
}

ScenarioSpec ScenarioSpec::parse(const std::string& name) {
  if (name == "x") return nonadaptive({1.0, 0.0, 0.0});
  if (name == "y") return nonadaptive({0.0, 1.0, 0.0});
  if (name == "z") return nonadaptive({0.0, 0.0, 1.0});
  if (name == "adaptive") return adaptive();
  if (name == "nonlocal") return nonlocal({0.0, 0.0, 1.0});
  throw std::invalid_argument("unknown scenario '" + name + "' (expected x, y, z, adaptive or nonlocal)");
}

std::string ScenarioSpec::id() const {
  switch (kind) {
    case ScenarioKind::adaptive:
      return "adaptive";
    case ScenarioKind::nonlocal:
      return "nonlocal";
    case ScenarioKind::nonadaptive:
      break;
  }
  if (direction == BlochVec{1.0, 0.0, 0.0}) return "x";
  if (direction == BlochVec{0.0, 1.0, 0.0}) return "y";
  if (direction == BlochVec{0.0, 0.0, 1.0}) return "z";
  char buf[96];
  std::snprintf(buf, sizeof buf, "n(%.6g,%.6g,%.6g)", direction.x, direction.y, direction.z);
  return buf;
}

// ------------------------------------------------------------ measurement

std::array<std::pair<double, qla::Matrix>, 2> subenv_branches(const qla::Matrix& joint,
                                                              const SpinObservable& n) {
  if (joint.rows() != 4 || joint.cols() != 4) {
    throw std::invalid_argument("measure_subenv: joint state must be system (x) subenvironment");
  }
  const qla::Matrix marginal = trace_out_last_qubit(joint);
  std::array<std::pair<double, qla::Matrix>, 2> out;
  for (int b = 0; b < 2; ++b) {
    const int outcome = b == 0 ? 1 : -1;
    const qla::Matrix proj = qla::kron(qla::Matrix::Identity(2, 2), n.effect(outcome));
    const qla::Matrix reduced = trace_out_last_qubit(proj * joint * proj);
    const double p = reduced.trace().real();
    out[b].first = p;
    out[b].second = p < kMinBranchProbability ? marginal : qla::Matrix(qla::hermitian_part(reduced) / p);
  }
  return out;
}

MeasurementResult measure_subenv(const qla::QState& joint, const SpinObservable& n, double u) {
  const auto branches = subenv_branches(joint.density(), n);
  if (branches[0].first < kMinBranchProbability && branches[1].first < kMinBranchProbability) {
    throw std::invalid_argument("measure_subenv: both outcome probabilities vanish");
  }
  const int b = u < branches[0].first ? 0 : 1;
  return {b == 0 ? 1 : -1, branches[b].first, qla::QState::normalized(branches[b].second)};
}

// -------------------------------------------------------- CollisionKernel

CollisionKernel::CollisionKernel(const ModelParams& p, const SpinObservable& n) {
  const qla::Matrix q = model::build_Q(p).matrix();
  const std::array<double, 2> population{0.5 * (1.0 + p.eta()), 0.5 * (1.0 - p.eta())};
  for (int b = 0; b < 2; ++b) {
    const qla::Vector e = n.eigenvector(b == 0 ? 1 : -1);
    for (int a = 0; a < 2; ++a) {
      if (population[a] <= 0.0) continue;
      Eigen::Matrix2cd k = Eigen::Matrix2cd::Zero();
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          for (int bb = 0; bb < 2; ++bb) k(i, j) += std::conj(e(bb)) * q(2 * i + bb, 2 * j + a);
        }
      }
      kraus_[b].push_back(std::sqrt(population[a]) * k);
    }
  }
  plus_effect_.setZero();
  for (const auto& k : kraus_[0]) plus_effect_ += k.adjoint() * k;
}

double CollisionKernel::probability(const Eigen::Matrix2cd& rho, int outcome) const {
  const double plus = (plus_effect_ * rho).trace().real();
  return outcome == 1 ? plus : 1.0 - plus;
}

int CollisionKernel::step(Eigen::Matrix2cd& rho, double u) const {
  const double plus = (plus_effect_ * rho).trace().real();
  const int b = u < plus ? 0 : 1;
  Eigen::Matrix2cd next = Eigen::Matrix2cd::Zero();
  for (const auto& k : kraus_[b]) next.noalias() += k * rho * k.adjoint();
  const double tr = next.trace().real();
  if (!(tr > kMinBranchProbability)) {
    throw std::runtime_error("CollisionKernel::step: sampled a vanishing branch");
  }
  rho = 0.5 * (next + next.adjoint()) / tr;
  return b == 0 ? 1 : -1;
}

Eigen::Matrix2cd CollisionKernel::average(const Eigen::Matrix2cd& rho) const {
  Eigen::Matrix2cd out = Eigen::Matrix2cd::Zero();
  for (const auto& branch : kraus_) {
    for (const auto& k : branch) out += k * rho * k.adjoint();
  }
  return out;
}

// --------------------------------------------------------- NonlocalKernel

namespace {

qla::Matrix collision_with_gate(const ModelParams& p, const ControlGate& gate) {
  // Register order: system, control, subenvironment.
  const qla::Matrix q3 = model::embed_two_qubit(model::build_Q(p).matrix(), 0, 2, 3);
  const qla::Matrix t3 = model::embed_two_qubit(gate.t.matrix(), 1, 2, 3);
  return t3 * q3;
}

}  // namespace

NonlocalKernel::NonlocalKernel(const ModelParams& p, const ControlGate& gate) {
  if (!p.is_vacuum()) {
    throw std::invalid_argument("nonlocal scenario requires a vacuum bath (eta = -1)");
  }
  const qla::Matrix v = collision_with_gate(p, gate);
  for (int a = 0; a < 2; ++a) {
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) kraus_[a](r, c) = v(2 * r + a, 2 * c + 1);
    }
  }
}

Eigen::Matrix4cd NonlocalKernel::apply(const Eigen::Matrix4cd& rho_sc) const {
  Eigen::Matrix4cd out = Eigen::Matrix4cd::Zero();
  for (const auto& k : kraus_) out.noalias() += k * rho_sc * k.adjoint();
  return 0.5 * (out + out.adjoint()) / out.trace().real();
}

// -------------------------------------------------------- TrajectoryState

TrajectoryState TrajectoryState::plain(const qla::Matrix& rho_s, std::uint64_t seed) {
  return TrajectoryState(PlainPayload{to_fixed2(rho_s)}, seed);
}

TrajectoryState TrajectoryState::adaptive(const qla::Matrix& rho_s, std::uint64_t seed, int direction_index) {
  if (direction_index != 1 && direction_index != 2) {
    throw std::invalid_argument("TrajectoryState::adaptive: direction index must be 1 or 2");
  }
  return TrajectoryState(AdaptivePayload{to_fixed2(rho_s), direction_index}, seed);
}

TrajectoryState TrajectoryState::nonlocal(const qla::Matrix& rho_sc, std::uint64_t seed) {
  if (rho_sc.rows() != 4 || rho_sc.cols() != 4) {
    throw std::invalid_argument("TrajectoryState::nonlocal: expected a system (x) control state");
  }
  return TrajectoryState(NonlocalPayload{Eigen::Matrix4cd(rho_sc)}, seed);
}

ScenarioKind TrajectoryState::kind() const {
  switch (payload_.index()) {
    case 0:
      return ScenarioKind::nonadaptive;
    case 1:
      return ScenarioKind::adaptive;
    default:
      return ScenarioKind::nonlocal;
  }
}

Eigen::Matrix2cd TrajectoryState::system_density() const {
  if (const auto* p = std::get_if<PlainPayload>(&payload_)) return p->rho;
  if (const auto* a = std::get_if<AdaptivePayload>(&payload_)) return a->rho;
  const auto& n = std::get<NonlocalPayload>(payload_);
  return Eigen::Matrix2cd(trace_out_last_qubit(n.rho_sc));
}

qla::QState TrajectoryState::system_state() const { return qla::QState::normalized(system_density()); }

BlochVec TrajectoryState::system_bloch() const { return model::bloch_of(qla::Matrix(system_density())); }

int nonadaptive_step(TrajectoryState& t, const CollisionKernel& kernel) {
  auto* p = std::get_if<PlainPayload>(&t.payload());
  if (p == nullptr) throw std::invalid_argument("nonadaptive_step: trajectory is not non-adaptive");
  const int outcome = kernel.step(p->rho, t.rng().uniform());
  t.count_step();
  return outcome;
}

AdaptiveKernels::AdaptiveKernels(const ModelParams& p)
    : along_n1(p, SpinObservable(adaptive_directions(p).first)),
      along_n2(p, SpinObservable(adaptive_directions(p).second)) {}

int adaptive_step(TrajectoryState& t, const AdaptiveKernels& kernels) {
  auto* a = std::get_if<AdaptivePayload>(&t.payload());
  if (a == nullptr) throw std::invalid_argument("adaptive_step: trajectory is not adaptive");
  const CollisionKernel& k = a->direction_index == 1 ? kernels.along_n1 : kernels.along_n2;
  const int outcome = k.step(a->rho, t.rng().uniform());
  if (outcome == 1) a->direction_index = 3 - a->direction_index;
  t.count_step();
  return outcome;
}

void nonlocal_step(TrajectoryState& t, const NonlocalKernel& kernel) {
  auto* n = std::get_if<NonlocalPayload>(&t.payload());
  if (n == nullptr) throw std::invalid_argument("nonlocal_step: trajectory is not nonlocal");
  n->rho_sc = kernel.apply(n->rho_sc);
  t.count_step();
}

// -------------------------------------------------------------- adaptive

std::pair<BlochVec, BlochVec> adaptive_directions(const ModelParams& p) {
  const double g = p.g();
  return {{0.0, std::sin(g), std::cos(g)}, {0.0, -std::sin(g), std::cos(g)}};
}

std::pair<BlochVec, BlochVec> dichotomic_targets(const ModelParams& p) {
  if (!p.is_vacuum()) {
    throw std::invalid_argument("dichotomic_targets: defined for the vacuum bath only");
  }
  const BlochVec ss = model::steady_state(p);
  const double x = std::sqrt(std::max(0.0, 1.0 - ss.y * ss.y - ss.z * ss.z));
  return {{x, ss.y, ss.z}, {-x, ss.y, ss.z}};
}

double dichotomic_residual(const ModelParams& p, const BlochVec& direction, const BlochVec& held,
                           const BlochVec& jumped) {
  const qla::Matrix q = model::build_Q(p).matrix();
  const qla::Matrix joint = q * qla::kron(model::density_of(held), model::env_state(p).density()) * q.adjoint();
  const auto branches = subenv_branches(joint, SpinObservable(direction));
  const double plus = qla::max_abs(branches[0].second - model::density_of(jumped));
  const double minus = qla::max_abs(branches[1].second - model::density_of(held));
  return std::max(plus, minus);
}

DichotomicResiduals verify_dichotomic_conditions(const ModelParams& p) {
  const auto [n1, n2] = adaptive_directions(p);
  const auto [rp, rm] = dichotomic_targets(p);
  return {dichotomic_residual(p, n1, rm, rp), dichotomic_residual(p, n2, rp, rm)};
}

// -------------------------------------------------------------- nonlocal

model::ThetaRep theta_star(const ModelParams& p) {
  if (!p.is_vacuum()) throw std::invalid_argument("theta_star: defined for the vacuum bath only");
  const BlochVec r = model::steady_state(p);
  if (r.z == 0.0) throw std::invalid_argument("theta_star: z_ss = 0 leaves the ansatz angle undefined");
  const double alpha = std::acos(std::min(1.0, r.norm()));
  const double beta = std::atan2(r.y, r.z) + std::numbers::pi;
  const double sa = std::sin(alpha);
  const double cb = std::cos(beta);
  const double sb = std::sin(beta);

  model::ThetaRep t;
  t.theta << 1.0, 0.0, 0.0, std::cos(alpha),  //
      r.x, 0.0, sa, 0.0,                       //
      r.y, -sa * cb, 0.0, -sb,                 //
      r.z, sa * sb, 0.0, -cb;
  return t;
}

qla::QState theta_star_state(const ModelParams& p) {
  const qla::Matrix rho = model::density_of(theta_star(p));
  Eigen::SelfAdjointEigenSolver<qla::Matrix> solver(qla::hermitian_part(rho));
  if (solver.eigenvalues()(3) < 1.0 - 1e-10) {
    throw std::runtime_error("theta_star_state: ansatz is not pure");
  }
  qla::Vector v = solver.eigenvectors().col(3);
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  v *= std::abs(v(imax)) / v(imax);
  return qla::QState::pure(v / v.norm());
}

ControlGate construct_T_schmidt(const ModelParams& p) {
  const qla::QState star = theta_star_state(p);
  const auto sc = qla::schmidt(star, 2, 2);

  const qla::Vector primed =
      model::embed_two_qubit(model::build_Q(p).matrix(), 0, 2, 3) * qla::kron(star.amplitudes(), ground_ket());
  const auto sca = qla::schmidt(qla::QState::pure(primed / primed.norm()), 2, 4);
  if (sca.rank() > 2) throw std::runtime_error("construct_T_schmidt: Schmidt rank above 2");
  if (sca.rank() != sc.rank()) {
    throw std::runtime_error("construct_T_schmidt: Schmidt ranks of psi* and psi' differ");
  }

  // Control-side targets: the control Schmidt vectors of psi*, completed.
  std::vector<qla::Vector> controls = sc.right;
  for (auto& v : complete_basis(sc.right, 2)) controls.push_back(v);

  std::vector<qla::Vector> sources;
  std::vector<qla::Complex> phases;
  for (int k = 0; k < sca.rank(); ++k) {
    const qla::Complex overlap = sc.left[k].dot(sca.left[k]);
    if (std::abs(overlap) < 0.5) {
      throw std::runtime_error("construct_T_schmidt: system Schmidt vectors do not match (degenerate spectrum?)");
    }
    phases.push_back(overlap / std::abs(overlap));
    sources.push_back(sca.right[k]);
  }
  const auto completion = complete_basis(sources, 4);

  qla::Matrix t = qla::Matrix::Zero(4, 4);
  for (int k = 0; k < sca.rank(); ++k) {
    t += std::conj(phases[k]) * qla::kron(controls[k], ground_ket()) * sources[k].adjoint();
  }
  // Remaining targets in order: control vectors not yet used with |0_A>,
  // then all control vectors with |1_A>.
  std::vector<qla::Vector> targets;
  for (int k = sca.rank(); k < 2; ++k) targets.push_back(qla::kron(controls[k], ground_ket()));
  for (int k = 0; k < 2; ++k) targets.push_back(qla::kron(controls[k], excited_ket()));
  for (std::size_t j = 0; j < completion.size(); ++j) t += targets[j] * completion[j].adjoint();

  return {qla::QOperator(t), GateProvenance::schmidt_constructed};
}

qla::QOperator closed_form_S1(const ModelParams& p) {
  const double r = p.r33();
  const qla::Complex i(0.0, 1.0);
  const qla::Complex a = 2.0 * i * r * p.omega() / p.gamma();
  qla::Matrix s(4, 4);
  s << 0.0, -a, 0.0, -0.5 * i * (r - 1.0),  //
      a, 0.0, 0.5 * i * (r + 1.0), 0.0,      //
      0.0, -0.5 * i * (r + 1.0), 0.0, a,     //
      0.5 * i * (r - 1.0), 0.0, -a, 0.0;
  return qla::QOperator(s);
}

qla::QOperator closed_form_S2(const ModelParams& p) {
  const double r = p.r33();
  const qla::Complex i(0.0, 1.0);
  qla::Matrix s(4, 4);
  s << 0.0, 0.0, i * r, 0.0,  //
      0.0, 0.0, 0.0, i,       //
      -i * r, 0.0, 0.0, 0.0,  //
      0.0, -i, 0.0, 0.0;
  return qla::QOperator(s);
}

ControlGate closed_form_T(const ModelParams& p) {
  const auto t2 = qla::expm_hermitian(closed_form_S2(p), p.omega() * p.dt());
  const auto t1 = qla::expm_hermitian(closed_form_S1(p), std::sqrt(p.gamma() * p.dt()));
  return {t2 * t1, GateProvenance::closed_form};
}

double decoupling_residual(const ModelParams& p, const ControlGate& gate) {
  const qla::QState star = theta_star_state(p);
  const qla::Vector out = collision_with_gate(p, gate) * qla::kron(star.amplitudes(), ground_ket());
  double leak = 0.0;
  for (int i = 0; i < 4; ++i) leak += std::norm(out(2 * i));  // subenvironment in |1>
  return std::sqrt(leak);
}

double fixed_point_residual(const ModelParams& p, const ControlGate& gate) {
  const qla::Matrix star = theta_star_state(p).density();
  const qla::Matrix v = collision_with_gate(p, gate);
  const qla::Matrix big = v * qla::kron(star, density_from_ket(ground_ket())) * v.adjoint();
  return qla::max_abs(trace_out_last_qubit(big) - star);
}

qla::Matrix two_qubit_gksl(const qla::Matrix& rho, const ModelParams& p) {
  if (rho.rows() != 4 || rho.cols() != 4) throw std::invalid_argument("two_qubit_gksl: expected a 4x4 state");
  const qla::Matrix id = qla::Matrix::Identity(2, 2);
  const qla::Matrix sx = qla::pauli_x().matrix();
  const qla::Matrix sy = qla::pauli_y().matrix();
  const qla::Matrix sz = qla::pauli_z().matrix();
  const qla::Matrix sm = qla::sigma_minus().matrix();
  const double w = p.omega();
  const double gm = p.gamma();
  const double r = p.r33();
  const double sg = std::sqrt(gm);
  const qla::Complex i(0.0, 1.0);

  const qla::Matrix h = -w * qla::kron(id, sy) + w * r * qla::kron(sx, sz) + w * qla::kron(sx, id) +
                        0.25 * r * gm * qla::kron(sx, sx) + 0.25 * gm * qla::kron(sy, sy);
  const qla::Matrix l = -(2.0 * r * w / sg) * qla::kron(id, sz) - 0.5 * r * sg * qla::kron(id, sx) +
                        0.5 * i * sg * qla::kron(id, sy) - i * sg * qla::kron(sm, id);
  const qla::Matrix ldl = l.adjoint() * l;
  return -i * (h * rho - rho * h) + l * rho * l.adjoint() - 0.5 * (ldl * rho + rho * ldl);
}

model::ThetaRep theta_ss(double c) {
  const double d = 8.0 * c * c + 1.0;
  const double s = std::sqrt(16.0 * c * c + 1.0);
  model::ThetaRep t;
  t.theta << 1.0, 0.0, 0.0, s / d,                                      //
      0.0, 0.0, 8.0 * c * c / d, 0.0,                                   //
      4.0 * c / d, -8.0 * c * c / (d * s), 0.0, 4.0 * c / s,            //
      -1.0 / d, -32.0 * c * c * c / (d * s), 0.0, -1.0 / s;
  return t;
}

qla::QOperator effective_nonlocal_povm(std::span<const ControlGate> gates, const qla::Matrix& control_effect,
                                       int n) {
  if (n < 1 || n > model::kMaxJointCollisions) {
    throw std::invalid_argument("effective_nonlocal_povm: 1 <= N <= 3 required");
  }
  if (static_cast<int>(gates.size()) != n) {
    throw std::invalid_argument("effective_nonlocal_povm: need one gate per subenvironment");
  }
  if (control_effect.rows() != 2 || control_effect.cols() != 2) {
    throw std::invalid_argument("effective_nonlocal_povm: control effect must be 2x2");
  }
  // Register order: A_1 .. A_N, control.
  const int qubits = n + 1;
  const int dim = 1 << qubits;
  qla::Matrix total = qla::Matrix::Identity(dim, dim);
  for (int i = 0; i < n; ++i) {
    total = model::embed_two_qubit(gates[i].t.matrix(), n, i, qubits) * total;
  }
  const qla::Matrix probe = qla::kron(qla::Matrix::Identity(dim / 2, dim / 2), control_effect);
  const qla::Matrix x = total.adjoint() * probe * total;
  qla::Matrix out(dim / 2, dim / 2);
  for (int r = 0; r < dim / 2; ++r) {
    for (int c = 0; c < dim / 2; ++c) out(r, c) = x(2 * r + 1, 2 * c + 1);  // control in |0>
  }
  return qla::QOperator(out);
}

std::array<SteeredBranch, 2> steered_ensembles_from_control(const qla::Matrix& rho_sc, const BlochVec& m) {
  if (rho_sc.rows() != 4 || rho_sc.cols() != 4) {
    throw std::invalid_argument("steered_ensembles_from_control: expected a 4x4 state");
  }
  const SpinObservable obs(m);
  const auto branches = subenv_branches(rho_sc, obs);
  return {SteeredBranch{branches[0].first, model::bloch_of(branches[0].second)},
          SteeredBranch{branches[1].first, model::bloch_of(branches[1].second)}};
}

// ----------------------------------------------------------- trajectories

TrajectoryRunner::TrajectoryRunner(const ScenarioSpec& spec, const ModelParams& p, TrajectoryOptions options)
    : spec_(spec), params_(p), options_(std::move(options)) {
  if (options_.steps < 0 || options_.burn_in < 0) {
    throw std::invalid_argument("TrajectoryRunner: steps and burn-in must be non-negative");
  }
  const BlochVec start = options_.initial.value_or(model::steady_state(p));
  if (start.norm() > 1.0 + 1e-10) throw std::invalid_argument("TrajectoryRunner: initial Bloch vector outside the ball");
  initial_ = model::density_of(start);
  switch (spec.kind) {
    case ScenarioKind::nonadaptive:
      fixed_.emplace(p, SpinObservable(spec.direction));
      break;
    case ScenarioKind::adaptive:
      adaptive_.emplace(p);
      break;
    case ScenarioKind::nonlocal:
      nonlocal_.emplace(p, spec.gate == GateProvenance::closed_form ? closed_form_T(p) : construct_T_schmidt(p));
      break;
  }
}

Endpoint TrajectoryRunner::run(std::uint64_t seed) const {
  const long long total = total_steps();
  return run_checkpoints(seed, std::span<const long long>(&total, 1)).front();
}

std::vector<Endpoint> TrajectoryRunner::run_checkpoints(std::uint64_t seed,
                                                        std::span<const long long> checkpoints) const {
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end())) {
    throw std::invalid_argument("run_checkpoints: checkpoints must be ascending");
  }
  std::vector<Endpoint> out;
  out.reserve(checkpoints.size());
  long long plus = 0;

  auto record = [&](const Eigen::Matrix2cd& rho) {
    const Eigen::Matrix2cd r = normalize_state(rho);
    out.push_back({model::bloch_of(qla::Matrix(r)), (r * r).trace().real(), plus});
  };

  TrajectoryState t = [&] {
    switch (spec_.kind) {
      case ScenarioKind::adaptive:
        return TrajectoryState::adaptive(initial_, seed, 1);
      case ScenarioKind::nonlocal:
        return TrajectoryState::nonlocal(qla::kron(initial_, density_from_ket(ground_ket())), seed);
      default:
        return TrajectoryState::plain(initial_, seed);
    }
  }();

  std::size_t next = 0;
  for (long long step = 0;; ++step) {
    while (next < checkpoints.size() && checkpoints[next] == step) {
      if (spec_.kind == ScenarioKind::nonlocal) {
        const auto& n = std::get<NonlocalPayload>(t.payload());
        const auto branches = subenv_branches(qla::Matrix(n.rho_sc), SpinObservable(spec_.control_direction));
        const int b = t.rng().uniform() < branches[0].first ? 0 : 1;
        record(Eigen::Matrix2cd(branches[b].second));
      } else {
        record(t.system_density());
      }
      ++next;
    }
    if (next == checkpoints.size()) break;
    switch (spec_.kind) {
      case ScenarioKind::nonadaptive:
        if (nonadaptive_step(t, *fixed_) == 1) ++plus;
        break;
      case ScenarioKind::adaptive:
        if (adaptive_step(t, *adaptive_) == 1) ++plus;
        break;
      case ScenarioKind::nonlocal:
        nonlocal_step(t, *nonlocal_);
        break;
    }
  }
  return out;
}

}  // namespace collsteer::scenarios

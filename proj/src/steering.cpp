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

#include "collsteer/steering.hpp"

#include "collsteer/parallel.hpp"
#include "collsteer/seeding.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace collsteer::steering {

namespace {

void require_orthogonal(const BlochVec& n, const BlochVec& m, const BlochVec& k) {
  for (const BlochVec* v : {&n, &m, &k}) {
    if (std::abs(v->norm() - 1.0) > 1e-12) throw std::invalid_argument("inequality_lhs: directions must be unit vectors");
  }
  if (std::abs(n.dot(m)) > 1e-12 || std::abs(m.dot(k)) > 1e-12 || std::abs(n.dot(k)) > 1e-12) {
    throw std::invalid_argument("inequality_lhs: directions must be pairwise orthogonal");
  }
}

// Weighted mean of q with the standard error of a weighted sample mean.
Estimate weighted_mean(const std::vector<double>& w, const std::vector<double>& q) {
  double mu = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) mu += w[i] * q[i];
  const double n = static_cast<double>(q.size());
  if (q.size() < 2) return {mu, 0.0};
  double var = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) var += w[i] * w[i] * (q[i] - mu) * (q[i] - mu);
  return {mu, std::sqrt(var * n / (n - 1.0))};
}

std::vector<double> weights_of(const EndpointEnsemble& e) {
  std::vector<double> w;
  w.reserve(e.members.size());
  for (const auto& m : e.members) w.push_back(m.weight);
  return w;
}

}  // namespace

// ------------------------------------------------------------ ensembles

EndpointEnsemble EndpointEnsemble::uniform(std::string id, const std::vector<BlochVec>& points) {
  if (points.empty()) throw std::invalid_argument("EndpointEnsemble::uniform: no points");
  EndpointEnsemble e;
  e.scenario_id = std::move(id);
  const double w = 1.0 / static_cast<double>(points.size());
  for (const auto& r : points) e.members.push_back({w, r, 0.5 * (1.0 + r.dot(r))});
  return e;
}

void EndpointEnsemble::validate() const {
  if (members.empty()) throw std::invalid_argument("EndpointEnsemble: no members");
  double total = 0.0;
  for (const auto& m : members) {
    if (!(m.weight >= 0.0)) throw std::invalid_argument("EndpointEnsemble: negative weight");
    if (m.bloch.norm() > 1.0 + 1e-9) throw std::invalid_argument("EndpointEnsemble: Bloch vector outside the ball");
    total += m.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("EndpointEnsemble: weights do not sum to 1");
}

std::size_t EndpointEnsemble::distinct_points(double tol) const {
  std::vector<BlochVec> centers;
  for (const auto& m : members) {
    const bool known = std::any_of(centers.begin(), centers.end(),
                                   [&](const BlochVec& c) { return model::distance(c, m.bloch) <= tol; });
    if (!known) centers.push_back(m.bloch);
  }
  return centers.size();
}

EndpointEnsemble generate_ensemble(const ScenarioSpec& spec, const ModelParams& p, const EnsembleConfig& config) {
  if (config.trajectories < 1) throw std::invalid_argument("generate_ensemble: need at least one trajectory");
  const scenarios::TrajectoryRunner runner(spec, p, {config.steps, config.burn_in, config.initial});
  const std::uint64_t base = stream_seed(config.seed, spec.id());

  std::vector<scenarios::Endpoint> ends(static_cast<std::size_t>(config.trajectories));
  parallel_for(ends.size(), config.workers, [&](std::size_t i) { ends[i] = runner.run(derive_seed(base, i)); });

  EndpointEnsemble e;
  e.scenario_id = spec.id();
  e.params = p;
  e.steps = config.steps;
  e.burn_in = config.burn_in;
  e.seed = config.seed;
  const double w = 1.0 / static_cast<double>(ends.size());
  e.members.reserve(ends.size());
  for (const auto& end : ends) e.members.push_back({w, end.bloch, end.purity});
  return e;
}

Estimate ensemble_avg_sq(const EndpointEnsemble& e, const BlochVec& n) {
  e.validate();
  std::vector<double> q;
  q.reserve(e.members.size());
  for (const auto& m : e.members) {
    const double s = n.dot(m.bloch);
    q.push_back(s * s);
  }
  return weighted_mean(weights_of(e), q);
}

Estimate inequality_lhs_estimate(const EndpointEnsemble& e1, const EndpointEnsemble& e2, const EndpointEnsemble& e3,
                                 const BlochVec& n, const BlochVec& m, const BlochVec& k) {
  require_orthogonal(n, m, k);
  // Terms drawn from the same ensemble are correlated; sum them per member.
  std::map<const EndpointEnsemble*, std::vector<BlochVec>> groups;
  groups[&e1].push_back(n);
  groups[&e2].push_back(m);
  groups[&e3].push_back(k);

  Estimate total;
  double var = 0.0;
  for (const auto& [e, dirs] : groups) {
    e->validate();
    std::vector<double> q;
    q.reserve(e->members.size());
    for (const auto& mem : e->members) {
      double s = 0.0;
      for (const auto& d : dirs) s += d.dot(mem.bloch) * d.dot(mem.bloch);
      q.push_back(s);
    }
    const Estimate part = weighted_mean(weights_of(*e), q);
    total.value += part.value;
    var += part.error * part.error;
  }
  total.error = std::sqrt(var);
  return total;
}

double inequality_lhs(const EndpointEnsemble& e1, const EndpointEnsemble& e2, const EndpointEnsemble& e3,
                      const BlochVec& n, const BlochVec& m, const BlochVec& k) {
  return inequality_lhs_estimate(e1, e2, e3, n, m, k).value;
}

SteeringReport delta_S(const ModelParams& p, const EnsembleConfig& config) {
  const BlochVec ex{1.0, 0.0, 0.0};
  const BlochVec ey{0.0, 1.0, 0.0};
  const BlochVec ez{0.0, 0.0, 1.0};
  const EndpointEnsemble x = generate_ensemble(ScenarioSpec::nonadaptive(ex), p, config);
  const EndpointEnsemble y = generate_ensemble(ScenarioSpec::nonadaptive(ey), p, config);

  SteeringReport r;
  r.n = ey;
  r.m = ez;
  r.k = ex;
  r.terms = {SteeringTerm{x.scenario_id, ey, ensemble_avg_sq(x, ey)},
             SteeringTerm{x.scenario_id, ez, ensemble_avg_sq(x, ez)},
             SteeringTerm{y.scenario_id, ex, ensemble_avg_sq(y, ex)}};
  r.lhs = inequality_lhs_estimate(x, x, y, ey, ez, ex);
  r.delta_s = {r.lhs.value - 1.0, r.lhs.error};
  r.params = p;
  r.config = config;
  return r;
}

// --------------------------------------------------------------- eta_crit

EtaProbe probe_delta_s(const ModelParams& base, double eta, const EtaCritConfig& config, std::uint64_t index) {
  const ModelParams p = base.with_eta(eta);
  const std::uint64_t stream = stream_seed(config.budget.seed, "eta-probe");
  EnsembleConfig budget = config.budget;
  EtaProbe probe;
  probe.eta = eta;
  for (std::uint64_t attempt = 0;; ++attempt) {
    budget.seed = derive_seed(stream, index * 64 + attempt);
    const SteeringReport r = delta_S(p, budget);
    probe.delta_s = r.delta_s;
    probe.trajectories = budget.trajectories;
    if (std::abs(r.delta_s.value) > 3.0 * r.delta_s.error) {
      probe.sign = r.delta_s.value > 0.0 ? 1 : -1;
      return probe;
    }
    if (budget.trajectories * 2 > config.max_trajectories) {
      probe.sign = 0;
      return probe;
    }
    budget.trajectories *= 2;
  }
}

EtaCritResult eta_crit_search(const ModelParams& base, const EtaCritConfig& config) {
  if (!(config.lower < config.upper)) throw std::invalid_argument("eta_crit_search: empty bracket");
  if (!(config.tolerance > 0.0)) throw std::invalid_argument("eta_crit_search: tolerance must be positive");
  EtaCritResult out;
  std::uint64_t index = 0;
  const EtaProbe lo = probe_delta_s(base, config.lower, config, index++);
  const EtaProbe hi = probe_delta_s(base, config.upper, config, index++);
  out.probes = {lo, hi};
  if (lo.sign == 0 && hi.sign == 0) {
    throw std::runtime_error("eta_crit_search: Delta S indistinguishable from 0 across the bracket at this budget");
  }
  if (lo.sign != 1 || hi.sign != -1) {
    throw std::runtime_error("eta_crit_search: bracket end points do not show Delta S > 0 then Delta S < 0");
  }
  out.lower = config.lower;
  out.upper = config.upper;
  while (out.upper - out.lower > config.tolerance) {
    const double mid = 0.5 * (out.lower + out.upper);
    const EtaProbe probe = probe_delta_s(base, mid, config, index++);
    out.probes.push_back(probe);
    if (probe.sign == 1) {
      out.lower = mid;
    } else if (probe.sign == -1) {
      out.upper = mid;
    } else {
      out.resolved = false;
      break;
    }
  }
  return out;
}

// ----------------------------------------------------------- entanglement

double concurrence(const qla::Matrix& rho) {
  if (rho.rows() != 4 || rho.cols() != 4) throw std::invalid_argument("concurrence: expected a two-qubit state");
  // The singular values of W^T (sy sy) W, with rho = W W^dagger, are the square
  // roots of the eigenvalues of rho (sy sy) rho* (sy sy).
  const qla::Matrix yy = qla::kron(qla::pauli_y().matrix(), qla::pauli_y().matrix());
  Eigen::SelfAdjointEigenSolver<qla::Matrix> eig(qla::hermitian_part(rho));
  qla::Matrix w = eig.eigenvectors();
  for (int i = 0; i < 4; ++i) w.col(i) *= std::sqrt(std::max(0.0, eig.eigenvalues()(i)));
  Eigen::JacobiSVD<qla::Matrix> svd(w.transpose() * yy * w);
  std::array<double, 4> lam{};
  for (int i = 0; i < 4; ++i) lam[i] = svd.singularValues()(i);
  std::sort(lam.begin(), lam.end(), std::greater<>());
  const double c = lam[0] - lam[1] - lam[2] - lam[3];
  return c < 1e-12 ? 0.0 : std::min(1.0, c);
}

double concurrence(const qla::QState& rho) { return concurrence(rho.density()); }

double collision_concurrence(const ModelParams& p) {
  const qla::Matrix q = model::build_Q(p).matrix();
  const qla::Matrix rho_s = model::density_of(model::steady_state(p));
  return concurrence(qla::Matrix(q * qla::kron(rho_s, model::env_state(p).density()) * q.adjoint()));
}

BoundaryMap entanglement_boundary(const std::vector<double>& dt_grid, const std::vector<double>& eta_grid,
                                  double gamma, double omega) {
  if (dt_grid.empty() || eta_grid.empty()) throw std::invalid_argument("entanglement_boundary: empty grid");
  std::vector<double> etas = eta_grid;
  std::sort(etas.begin(), etas.end());
  BoundaryMap out;
  for (double dt : dt_grid) {
    BoundaryContour contour;
    contour.dt = dt;
    bool seen_positive = false;
    for (double eta : etas) {
      const double c = collision_concurrence(ModelParams(gamma, omega, dt, eta));
      out.cells.push_back({dt, eta, c});
      if (c > 0.0) {
        seen_positive = true;
        if (!contour.first_separable) contour.last_entangled = eta;
      } else if (seen_positive && !contour.first_separable) {
        contour.first_separable = eta;
      }
    }
    out.contour.push_back(contour);
  }
  return out;
}

// --------------------------------------------------------------- nonlocal

std::vector<BlochVec> fibonacci_sphere(int count) {
  if (count < 1) throw std::invalid_argument("fibonacci_sphere: count must be positive");
  std::vector<BlochVec> pts;
  pts.reserve(count);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / count;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    pts.push_back({rho * std::cos(phi), rho * std::sin(phi), z});
  }
  return pts;
}

namespace {

BlochVec from_angles(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

double steered_term(const qla::Matrix& rho_sc, const BlochVec& control, const BlochVec& bob) {
  double s = 0.0;
  for (const auto& b : scenarios::steered_ensembles_from_control(rho_sc, control)) {
    const double v = bob.dot(b.bloch);
    s += b.probability * v * v;
  }
  return s;
}

}  // namespace

NonlocalViolation nonlocal_violation(const qla::Matrix& rho_sc, int grid) {
  if (grid < 312) throw std::invalid_argument("nonlocal_violation: grid needs at least 312 points");
  const auto sphere = fibonacci_sphere(grid);
  NonlocalViolation out;
  out.bob_directions = {BlochVec{1.0, 0.0, 0.0}, BlochVec{0.0, 1.0, 0.0}, BlochVec{0.0, 0.0, 1.0}};
  for (int a = 0; a < 3; ++a) {
    const BlochVec& bob = out.bob_directions[a];
    double best = -1.0;
    BlochVec start;
    for (const auto& c : sphere) {
      const double v = steered_term(rho_sc, c, bob);
      if (v > best) {
        best = v;
        start = c;
      }
    }
    double theta = std::acos(std::clamp(start.z, -1.0, 1.0));
    double phi = std::atan2(start.y, start.x);
    for (double step = 0.1; step >= 1e-6;) {
      bool improved = false;
      for (const auto& [dt, dp] : {std::pair{step, 0.0}, {-step, 0.0}, {0.0, step}, {0.0, -step}}) {
        const double v = steered_term(rho_sc, from_angles(theta + dt, phi + dp), bob);
        if (v > best) {
          best = v;
          theta += dt;
          phi += dp;
          improved = true;
          break;
        }
      }
      if (!improved) step *= 0.5;
    }
    out.control_directions[a] = from_angles(theta, phi);
    out.terms[a] = best;
    out.lhs += best;
  }
  return out;
}

NonlocalViolation nonlocal_violation(const ModelParams& p, int grid) {
  return nonlocal_violation(scenarios::theta_star_state(p).density(), grid);
}

}  // namespace collsteer::steering

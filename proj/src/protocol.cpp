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

#include "collsteer/protocol.hpp"

#include "collsteer/parallel.hpp"
#include "collsteer/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <stdexcept>

namespace collsteer::protocol {

namespace {

constexpr std::array<Axis, 3> kAxes{Axis::x, Axis::y, Axis::z};

int idx(Axis a) { return static_cast<int>(a); }

double component(const BlochVec& r, Axis a) { return r[idx(a)]; }

struct RunOutcome {
  int scenario = 0;
  BlochVec announced;
  Axis axis = Axis::z;
  int outcome = 1;
};

BinKey key_for(const std::string& scenario, const BlochVec& r, double resolution) {
  return {scenario,
          {std::llround(r.x / resolution), std::llround(r.y / resolution), std::llround(r.z / resolution)}};
}

BlochVec unconditional_state(const ModelParams& p, const BlochVec& start, long long collisions) {
  const scenarios::CollisionKernel kernel(p, scenarios::SpinObservable::z());
  Eigen::Matrix2cd rho = Eigen::Matrix2cd(model::density_of(start));
  for (long long i = 0; i < collisions; ++i) rho = kernel.average(rho);
  return model::bloch_of(qla::Matrix(rho));
}

}  // namespace

char axis_name(Axis a) { return "xyz"[idx(a)]; }

// ------------------------------------------------------------------- bins

long long Bin::total() const {
  long long n = 0;
  for (const auto& t : tallies) n += t[0] + t[1];
  return n;
}

long long Bin::axis_total(Axis a) const { return tallies[idx(a)][0] + tallies[idx(a)][1]; }

BlochVec Bin::announced_mean() const {
  const long long n = total();
  return n == 0 ? exemplar : (1.0 / static_cast<double>(n)) * announced_sum;
}

void Bin::add(const SlipRecord& slip, const BlochVec& announced) {
  if (slip.outcome != 1 && slip.outcome != -1) throw std::invalid_argument("Bin::add: outcome must be +1 or -1");
  if (total() == 0) exemplar = announced;
  ++tallies[idx(slip.axis)][slip.outcome == 1 ? 0 : 1];
  announced_sum = announced_sum + announced;
}

// ------------------------------------------------------------- strategies

LhsFixedEnsemble LhsFixedEnsemble::dichotomic(const ModelParams& p) {
  const auto [rp, rm] = scenarios::dichotomic_targets(p);
  return {{rp, rm}, {0.5, 0.5}, {"x", "y"}};
}

std::vector<std::string> scenario_ids(const AliceStrategy& s) {
  std::vector<std::string> ids;
  if (const auto* l = std::get_if<LhsFixedEnsemble>(&s)) return l->scenario_ids;
  const auto& specs = std::holds_alternative<Honest>(s) ? std::get<Honest>(s).scenarios
                                                         : std::get<AnnounceWithoutMeasuring>(s).scenarios;
  for (const auto& spec : specs) ids.push_back(spec.id());
  return ids;
}

std::string strategy_name(const AliceStrategy& s) {
  switch (s.index()) {
    case 0:
      return "honest";
    case 1:
      return "lhs-fixed-ensemble";
    default:
      return "announce-without-measuring";
  }
}

long long Session::total_slips() const {
  long long n = 0;
  for (const auto& [key, bin] : bins) n += bin.total();
  return n;
}

// ---------------------------------------------------------------- session

Session run_session(const AliceStrategy& strategy, const ModelParams& p, const SessionConfig& config) {
  if (config.runs < config.min_runs) {
    throw std::invalid_argument("run_session: at least " + std::to_string(config.min_runs) + " runs required");
  }
  if (!(config.resolution > 0.0)) throw std::invalid_argument("run_session: resolution must be positive");

  Session session;
  session.strategy = strategy_name(strategy);
  session.scenarios = scenario_ids(strategy);
  if (session.scenarios.empty()) throw std::invalid_argument("run_session: strategy names no scenario");
  if (std::set<std::string>(session.scenarios.begin(), session.scenarios.end()).size() != session.scenarios.size()) {
    throw std::invalid_argument("run_session: duplicate scenario");
  }

  const BlochVec start = config.initial.value_or(model::steady_state(p));
  std::vector<scenarios::TrajectoryRunner> runners;
  std::vector<double> cumulative;
  const LhsFixedEnsemble* lhs = std::get_if<LhsFixedEnsemble>(&strategy);
  if (lhs != nullptr) {
    if (lhs->members.empty()) throw std::invalid_argument("run_session: LHS ensemble has no members");
    std::vector<double> w = lhs->weights;
    if (w.empty()) w.assign(lhs->members.size(), 1.0 / static_cast<double>(lhs->members.size()));
    if (w.size() != lhs->members.size()) throw std::invalid_argument("run_session: one weight per member required");
    double acc = 0.0;
    BlochVec mean;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!(w[i] >= 0.0)) throw std::invalid_argument("run_session: negative weight");
      if (lhs->members[i].norm() > 1.0 + 1e-9) throw std::invalid_argument("run_session: member outside the ball");
      acc += w[i];
      cumulative.push_back(acc);
      mean = mean + w[i] * lhs->members[i];
    }
    if (std::abs(acc - 1.0) > 1e-9) throw std::invalid_argument("run_session: weights must sum to 1");
    session.unconditional = mean;
  } else {
    const auto& specs = std::holds_alternative<Honest>(strategy) ? std::get<Honest>(strategy).scenarios
                                                                  : std::get<AnnounceWithoutMeasuring>(strategy).scenarios;
    for (const auto& spec : specs) runners.emplace_back(spec, p, scenarios::TrajectoryOptions{config.steps, config.burn_in, start});
    session.unconditional = unconditional_state(p, start, config.burn_in + config.steps);
  }
  const bool bob_unconditional = std::holds_alternative<AnnounceWithoutMeasuring>(strategy);

  const std::uint64_t bob_stream = stream_seed(config.seed, "protocol");
  const std::uint64_t alice_stream = stream_seed(config.seed, "protocol-trajectory");
  const int n_scenarios = static_cast<int>(session.scenarios.size());

  std::vector<RunOutcome> outcomes(static_cast<std::size_t>(config.runs));
  parallel_for(outcomes.size(), config.workers, [&](std::size_t i) {
    Rng rng(derive_seed(bob_stream, i));
    RunOutcome& o = outcomes[i];
    o.scenario = rng.below(n_scenarios);
    BlochVec bob;
    if (lhs != nullptr) {
      const double u = rng.uniform();
      const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
      const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), lhs->members.size() - 1);
      o.announced = lhs->members[m];
      bob = o.announced;
    } else {
      o.announced = runners[o.scenario].run(derive_seed(alice_stream, i)).bloch;
      bob = bob_unconditional ? session.unconditional : o.announced;
    }
    o.axis = kAxes[rng.below(3)];
    o.outcome = rng.uniform() < 0.5 * (1.0 + component(bob, o.axis)) ? 1 : -1;
  });

  session.transcript.reserve(outcomes.size());
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const RunOutcome& o = outcomes[i];
    const std::string& id = session.scenarios[o.scenario];
    const long long run = static_cast<long long>(i);
    session.transcript.push_back({run, id, o.announced, o.axis, o.outcome});
    ++session.runs_per_scenario[id];
    const BinKey key = key_for(id, o.announced, config.resolution);
    Bin& bin = session.bins[key];
    bin.key = key;
    bin.add({run, o.axis, o.outcome}, o.announced);
  }
  return session;
}

void write_transcript_csv(std::ostream& out, const Session& s) {
  out << "run,scenario,announced_x,announced_y,announced_z,axis,outcome\n";
  char buf[256];
  for (const auto& row : s.transcript) {
    std::snprintf(buf, sizeof buf, "%lld,%s,%.17g,%.17g,%.17g,%c,%d\n", row.run, row.scenario.c_str(),
                  row.announced.x, row.announced.y, row.announced.z, axis_name(row.axis), row.outcome);
    out << buf;
  }
}

// ------------------------------------------------------------- tomography

namespace {

Tomography invert(const std::array<std::array<long long, 2>, 3>& tallies) {
  Tomography t;
  for (int a = 0; a < 3; ++a) {
    const long long n = tallies[a][0] + tallies[a][1];
    t.counts[a] = n;
    const double r = n == 0 ? 0.0 : static_cast<double>(tallies[a][0] - tallies[a][1]) / static_cast<double>(n);
    t.error[a] = n == 0 ? 1.0 : std::sqrt(std::max(0.0, 1.0 - r * r) / static_cast<double>(n));
    (a == 0 ? t.estimate.x : a == 1 ? t.estimate.y : t.estimate.z) = r;
  }
  const double norm = t.estimate.norm();
  if (norm > 1.0) t.estimate = (1.0 / norm) * t.estimate;
  return t;
}

}  // namespace

Tomography tomo_reconstruct(const Bin& bin, long long min_slips) {
  if (bin.total() < min_slips) {
    throw std::invalid_argument("tomo_reconstruct: " + std::to_string(bin.total()) + " slips, " +
                                std::to_string(min_slips) + " required");
  }
  for (Axis a : kAxes) {
    if (6 * bin.axis_total(a) < min_slips) {
      throw std::invalid_argument(std::string("tomo_reconstruct: too few slips on axis ") + axis_name(a));
    }
  }
  return invert(bin.tallies);
}

Tomography pooled_marginal(const Bins& bins, const std::string& scenario) {
  std::array<std::array<long long, 2>, 3> tallies{};
  for (const auto& [key, bin] : bins) {
    if (key.scenario != scenario) continue;
    for (int a = 0; a < 3; ++a) {
      tallies[a][0] += bin.tallies[a][0];
      tallies[a][1] += bin.tallies[a][1];
    }
  }
  for (const auto& t : tallies) {
    if (t[0] + t[1] == 0) throw std::invalid_argument("pooled_marginal: no slips on some axis for " + scenario);
  }
  return invert(tallies);
}

// ------------------------------------------------------------- evaluation

Estimate squared_expectation(long long plus, long long minus) {
  const long long n = plus + minus;
  if (n < 2) throw std::invalid_argument("squared_expectation: need at least two slips");
  const double nd = static_cast<double>(n);
  const double r = static_cast<double>(plus - minus) / nd;
  const double s = 1.0 - r * r;
  const double q = r * r - s / (nd - 1.0);
  const double var = 4.0 * r * r * s / nd + 2.0 * s * s / (nd * (nd - 1.0));
  return {q, std::sqrt(var)};
}

std::vector<TermAssignment> standard_assignment() {
  return {{"x", Axis::y}, {"x", Axis::z}, {"y", Axis::x}};
}

namespace {

// P(at least two of n slips land on a given axis) when axes are drawn
// uniformly from three.
double usable_probability(long long n) {
  if (n < 2) return 0.0;
  const double nd = static_cast<double>(n);
  return 1.0 - std::pow(2.0 / 3.0, nd) - nd / 3.0 * std::pow(2.0 / 3.0, nd - 1.0);
}

struct TermSums {
  ProtocolTerm term;
  double within_var = 0.0;
};

// Bins with a single slip can never be used and are dropped; the others are
// weighted by slip share and reweighted by the inverse probability that the
// axis received at least two of their slips.
TermSums evaluate_term(const Bins& bins, const TermAssignment& a) {
  TermSums out{{a, {}, 0, 0}, 0.0};
  long long slips = 0;
  for (const auto& [key, bin] : bins) {
    if (key.scenario == a.scenario && bin.total() >= 2) slips += bin.total();
  }
  if (slips == 0) throw std::invalid_argument("evaluate_from_bins: no usable bins for scenario " + a.scenario);
  out.term.slips_used = slips;
  const double total = static_cast<double>(slips);

  std::vector<std::pair<double, double>> selected;  // (weight, q)
  for (const auto& [key, bin] : bins) {
    if (key.scenario != a.scenario || bin.total() < 2 || bin.axis_total(a.axis) < 2) continue;
    const double w = static_cast<double>(bin.total()) / total;
    const double pi = usable_probability(bin.total());
    const Estimate q = squared_expectation(bin.tallies[idx(a.axis)][0], bin.tallies[idx(a.axis)][1]);
    out.term.estimate.value += w * q.value / pi;
    out.within_var += w * w * (q.value * q.value * (1.0 - pi) + q.error * q.error) / (pi * pi);
    selected.emplace_back(w, q.value);
    ++out.term.bins_used;
  }
  const double mu = out.term.estimate.value;
  double spread = 0.0;
  double wsum = 0.0;
  for (const auto& [w, q] : selected) {
    spread += w * (q - mu) * (q - mu);
    wsum += w;
  }
  const double between = wsum > 0.0 ? spread / wsum / total : 0.0;
  out.term.estimate.error = std::sqrt(out.within_var + between);
  return out;
}

}  // namespace

ProtocolReport evaluate_from_bins(const Bins& bins, const std::vector<TermAssignment>& assignment) {
  if (assignment.empty()) throw std::invalid_argument("evaluate_from_bins: empty scenario assignment");
  if (assignment.size() != 3) throw std::invalid_argument("evaluate_from_bins: three terms required");
  std::set<int> axes;
  for (const auto& t : assignment) axes.insert(idx(t.axis));
  if (axes.size() != 3) throw std::invalid_argument("evaluate_from_bins: axes must be pairwise orthogonal");

  ProtocolReport report;
  std::map<std::string, std::vector<int>> groups;
  double within_var = 0.0;
  for (int t = 0; t < 3; ++t) {
    const TermSums sums = evaluate_term(bins, assignment[t]);
    report.terms[t] = sums.term;
    report.lhs.value += sums.term.estimate.value;
    within_var += sums.within_var;
    groups[assignment[t].scenario].push_back(t);
  }

  // Between-bin spread from the multinomial bin occupation, one group per
  // scenario so that terms sharing an ensemble are summed before squaring.
  double between_var = 0.0;
  for (const auto& [scenario, terms] : groups) {
    std::vector<std::pair<double, double>> per_bin;  // (slips, summed q)
    double slips = 0.0;
    for (const auto& [key, bin] : bins) {
      if (key.scenario != scenario) continue;
      bool usable = true;
      for (int t : terms) usable = usable && bin.axis_total(assignment[t].axis) >= 2;
      if (!usable) continue;
      double q = 0.0;
      for (int t : terms) {
        const Axis ax = assignment[t].axis;
        q += squared_expectation(bin.tallies[idx(ax)][0], bin.tallies[idx(ax)][1]).value;
      }
      per_bin.emplace_back(static_cast<double>(bin.total()), q);
      slips += static_cast<double>(bin.total());
    }
    if (slips == 0.0) continue;
    double mu = 0.0;
    for (const auto& [n, q] : per_bin) mu += n / slips * q;
    double spread = 0.0;
    for (const auto& [n, q] : per_bin) spread += n / slips * (q - mu) * (q - mu);
    between_var += spread / static_cast<double>(report.terms[terms.front()].slips_used);
  }

  report.lhs.error = std::sqrt(within_var + between_var);
  report.delta_s = {report.lhs.value - 1.0, report.lhs.error};
  return report;
}

std::vector<Verdict> verify_announcements(const Bins& bins, double tolerance, long long min_slips) {
  if (!(tolerance >= 0.0)) throw std::invalid_argument("verify_announcements: tolerance must be non-negative");
  std::vector<Verdict> out;
  for (const auto& [key, bin] : bins) {
    Verdict v;
    v.key = key;
    v.slips = bin.total();
    bool enough = v.slips >= min_slips && v.slips > 0;
    for (Axis a : kAxes) enough = enough && 6 * bin.axis_total(a) >= min_slips && bin.axis_total(a) > 0;
    if (!enough) {
      v.flagged = true;
      out.push_back(v);
      continue;
    }
    const Tomography t = tomo_reconstruct(bin, min_slips);
    const double sigma = std::sqrt(t.error[0] * t.error[0] + t.error[1] * t.error[1] + t.error[2] * t.error[2]);
    v.distance = model::distance(t.estimate, bin.announced_mean());
    v.allowance = tolerance + 3.0 * sigma;
    v.consistent = v.distance <= v.allowance;
    out.push_back(v);
  }
  return out;
}

}  // namespace collsteer::protocol

/* SPDX-License-Identifier: Apache-2.0 */
#include "sgdiff/edge_diffusion.hpp"

#include <cmath>
#include <stdexcept>

namespace sgdiff {

std::string to_string(NoisingKind kind) {
  switch (kind) {
    case NoisingKind::absorbing: return "absorbing";
    case NoisingKind::uniform: return "uniform";
    case NoisingKind::marginal: return "marginal";
  }
  return "absorbing";
}

NoisingKind parse_noising_kind(const std::string& name) {
  if (name == "absorbing") return NoisingKind::absorbing;
  if (name == "uniform") return NoisingKind::uniform;
  if (name == "marginal") return NoisingKind::marginal;
  throw std::invalid_argument("unknown noising '" + name + "' (expected absorbing|uniform|marginal)");
}

TransitionModel TransitionModel::absorbing(int classes) {
  if (classes < 2) throw std::invalid_argument("transition model needs at least two classes");
  TransitionModel tm;
  tm.kind_ = NoisingKind::absorbing;
  tm.target_ = Eigen::VectorXd::Unit(classes, 0);
  return tm;
}

TransitionModel TransitionModel::uniform(int classes) {
  if (classes < 2) throw std::invalid_argument("transition model needs at least two classes");
  TransitionModel tm;
  tm.kind_ = NoisingKind::uniform;
  tm.target_ = Eigen::VectorXd::Constant(classes, 1.0 / classes);
  return tm;
}

TransitionModel TransitionModel::marginal(const Eigen::VectorXd& frequencies) {
  if (frequencies.size() < 2) throw std::invalid_argument("transition model needs at least two classes");
  if ((frequencies.array() < 0.0).any() || !(frequencies.sum() > 0.0)) {
    throw std::invalid_argument("marginal frequencies must be non-negative with positive sum");
  }
  TransitionModel tm;
  tm.kind_ = NoisingKind::marginal;
  tm.target_ = frequencies / frequencies.sum();
  return tm;
}

EdgeState::EdgeState(int nodes) : nodes_(nodes), classes_(PairIndex::count(nodes), 0) {}

EdgeState EdgeState::from_graph(const SpatialGraph& g, int classes) {
  EdgeState e(g.node_count());
  for (const auto& edge : g.edges()) {
    if (edge.label >= classes) {
      throw GraphError("edge label " + std::to_string(edge.label) + " exceeds class count " +
                       std::to_string(classes));
    }
    e.set(edge.i, edge.j, static_cast<std::uint8_t>(edge.label));
  }
  return e;
}

SpatialGraph EdgeState::to_graph(const Coords& coords) const {
  if (coords.rows() != nodes_) throw GraphError("EdgeState::to_graph: coordinate count mismatch");
  SpatialGraph g(coords);
  std::size_t p = 0;
  for (int i = 0; i < nodes_; ++i)
    for (int j = i + 1; j < nodes_; ++j, ++p)
      if (classes_[p] != 0) g.add_edge(i, j, classes_[p]);
  return g;
}

std::size_t EdgeState::edge_count() const {
  std::size_t total = 0;
  for (auto c : classes_) total += c != 0 ? 1 : 0;
  return total;
}

namespace {

Eigen::MatrixXd mix_with_target(const TransitionModel& tm, double keep) {
  const int c = tm.classes();
  Eigen::MatrixXd q = keep * Eigen::MatrixXd::Identity(c, c);
  q.rowwise() += (1.0 - keep) * tm.target().transpose();
  return q;
}

void check_step(int t, const DiffusionSchedule& sched) {
  if (t < 1 || t > sched.steps()) {
    throw std::out_of_range("step " + std::to_string(t) + " outside 1.." + std::to_string(sched.steps()));
  }
}

EdgeState draw_rows(const EdgeState& from, const Eigen::MatrixXd& kernel, const CounterRng& rng) {
  EdgeState out = from;
  std::vector<double> row(static_cast<std::size_t>(kernel.cols()));
  for (std::size_t p = 0; p < from.pair_count(); ++p) {
    const auto src = static_cast<Eigen::Index>(from[p]);
    for (Eigen::Index k = 0; k < kernel.cols(); ++k) row[static_cast<std::size_t>(k)] = kernel(src, k);
    out[p] = static_cast<std::uint8_t>(sample_categorical(row, rng.uniform(p)));
  }
  return out;
}

}  // namespace

Eigen::MatrixXd transition_matrix(const TransitionModel& tm, int t, const DiffusionSchedule& sched) {
  check_step(t, sched);
  return mix_with_target(tm, sched.alpha(t));
}

Eigen::MatrixXd cumulative_transition(const TransitionModel& tm, int t, const DiffusionSchedule& sched) {
  if (t < 0 || t > sched.steps()) throw std::out_of_range("step outside schedule");
  return mix_with_target(tm, sched.alpha_bar(t));
}

EdgeState forward_noise_edges(const EdgeState& e0, int t, const TransitionModel& tm,
                              const DiffusionSchedule& sched, const CounterRng& rng) {
  check_step(t, sched);
  return draw_rows(e0, cumulative_transition(tm, t, sched), rng);
}

EdgeState forward_noise_step(const EdgeState& prev, int t, const TransitionModel& tm,
                             const DiffusionSchedule& sched, const CounterRng& rng) {
  return draw_rows(prev, transition_matrix(tm, t, sched), rng);
}

namespace {

// Row k: q(e_{t-1} | e_t, e0 = k), or zeros when e_t is unreachable from k.
std::vector<Eigen::MatrixXd> bayes_kernels(const TransitionModel& tm, int t, const DiffusionSchedule& sched) {
  const int c = tm.classes();
  const Eigen::MatrixXd q = transition_matrix(tm, t, sched);
  const Eigen::MatrixXd qbar_prev = cumulative_transition(tm, t - 1, sched);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(c));
  for (int e = 0; e < c; ++e) {
    Eigen::MatrixXd m = qbar_prev.array().rowwise() * q.col(e).transpose().array();
    for (Eigen::Index k = 0; k < c; ++k) {
      const double z = m.row(k).sum();
      if (z > 0.0) {
        m.row(k) /= z;
      } else {
        m.row(k).setZero();
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

[[noreturn]] void zero_normalizer(int t, int cls) {
  throw std::domain_error("posterior: zero normalizer at step " + std::to_string(t) + " for class " +
                          std::to_string(cls));
}

}  // namespace

Eigen::VectorXd posterior(int e_t, const Eigen::VectorXd& p0_hat, int t, const TransitionModel& tm,
                          const DiffusionSchedule& sched) {
  const int c = tm.classes();
  if (e_t < 0 || e_t >= c || p0_hat.size() != c) throw std::invalid_argument("posterior: class/shape mismatch");
  const auto kernels = bayes_kernels(tm, t, sched);
  Eigen::VectorXd out = kernels[static_cast<std::size_t>(e_t)].transpose() * p0_hat;
  const double denom = out.sum();
  if (!(denom > 0.0)) zero_normalizer(t, e_t);
  return out / denom;
}

MatrixX<double> posterior_rows(std::span<const std::uint8_t> e_t, const MatrixX<double>& p0_hat, int t,
                               const TransitionModel& tm, const DiffusionSchedule& sched) {
  const int c = tm.classes();
  if (p0_hat.cols() != c || static_cast<std::size_t>(p0_hat.rows()) != e_t.size()) {
    throw std::invalid_argument("posterior_rows: shape mismatch");
  }
  const auto kernels = bayes_kernels(tm, t, sched);
  MatrixX<double> out(p0_hat.rows(), c);
  for (Eigen::Index p = 0; p < out.rows(); ++p) {
    const int cls = e_t[static_cast<std::size_t>(p)];
    if (cls >= c) throw std::invalid_argument("posterior_rows: class index out of range");
    out.row(p).noalias() = p0_hat.row(p) * kernels[static_cast<std::size_t>(cls)];
    const double denom = out.row(p).sum();
    if (!(denom > 0.0)) zero_normalizer(t, cls);
    out.row(p) /= denom;
  }
  return out;
}

double cross_entropy(const MatrixX<double>& logits, std::span<const std::uint8_t> truth) {
  ad::Tape<double> tape(false);
  std::vector<int> target(truth.begin(), truth.end());
  return ad::softmax_cross_entropy(tape.constant(logits), std::span<const int>(target)).value()(0, 0);
}

double edge_ce_loss(const EdgeDenoiser& model, const EdgeState& e0, const PointCloud& coords, int t,
                    const TransitionModel& tm, const DiffusionSchedule& sched, const CounterRng& rng) {
  const EdgeState et = forward_noise_edges(e0, t, tm, sched, rng);
  const PairIndex pairs(e0.node_count());
  const auto geometry = pair_geometry<double>(coords, pairs);
  ad::Tape<double> tape(false);
  const auto w = tape.bind(model.params());
  auto logits = model.forward<double>(tape, w, et.classes(), coords, pairs, geometry, t, sched.steps());
  return cross_entropy(logits.value(), e0.classes());
}

}  // namespace sgdiff

/* SPDX-License-Identifier: Apache-2.0 */
// Discrete diffusion over edge classes. Class 0 is "no edge".
//
// Every transition kind has the form Q_t = a_t I + (1 - a_t) 1 m^T for a
// probability vector m: the one-hot on class 0 (absorbing, edge deletion),
// the uniform vector, or empirical class frequencies. Products of such
// matrices stay in the family, so Qbar_t = abar_t I + (1 - abar_t) 1 m^T.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgdiff/coord_ddpm.hpp"
#include "sgdiff/denoiser.hpp"
#include "sgdiff/graph.hpp"
#include "sgdiff/rng.hpp"
#include "sgdiff/schedule.hpp"

namespace sgdiff {

enum class NoisingKind { absorbing, uniform, marginal };

std::string to_string(NoisingKind kind);
NoisingKind parse_noising_kind(const std::string& name);

class TransitionModel {
 public:
  TransitionModel() = default;

  static TransitionModel absorbing(int classes);
  static TransitionModel uniform(int classes);
  /// `frequencies` over all classes including 0; normalized internally.
  static TransitionModel marginal(const Eigen::VectorXd& frequencies);

  NoisingKind kind() const { return kind_; }
  int classes() const { return static_cast<int>(target_.size()); }
  /// The limit distribution m.
  const Eigen::VectorXd& target() const { return target_; }

 private:
  NoisingKind kind_ = NoisingKind::absorbing;
  Eigen::VectorXd target_;
};

/// Dense class assignment over all canonical pairs of n nodes.
class EdgeState {
 public:
  EdgeState() = default;
  explicit EdgeState(int nodes);

  static EdgeState from_graph(const SpatialGraph& g, int classes);
  SpatialGraph to_graph(const Coords& coords) const;

  int node_count() const { return nodes_; }
  std::size_t pair_count() const { return classes_.size(); }
  std::uint8_t at(int i, int j) const { return classes_[PairIndex::index(nodes_, i, j)]; }
  void set(int i, int j, std::uint8_t cls) { classes_[PairIndex::index(nodes_, i, j)] = cls; }
  std::uint8_t operator[](std::size_t pair) const { return classes_[pair]; }
  std::uint8_t& operator[](std::size_t pair) { return classes_[pair]; }
  std::span<const std::uint8_t> classes() const { return classes_; }
  std::size_t edge_count() const;

  friend bool operator==(const EdgeState&, const EdgeState&) = default;

 private:
  int nodes_ = 0;
  std::vector<std::uint8_t> classes_;
};

/// Single-step kernel Q_t (row-stochastic, rows index the source class).
Eigen::MatrixXd transition_matrix(const TransitionModel& tm, int t, const DiffusionSchedule& sched);

/// Qbar_t = Q_1 ... Q_t in closed form; Qbar_0 = I.
Eigen::MatrixXd cumulative_transition(const TransitionModel& tm, int t, const DiffusionSchedule& sched);

/// Draws every pair independently from row e0[pair] of Qbar_t. Pair p uses rng.uniform(p).
EdgeState forward_noise_edges(const EdgeState& e0, int t, const TransitionModel& tm,
                              const DiffusionSchedule& sched, const CounterRng& rng);

/// One application of Q_t to every pair.
EdgeState forward_noise_step(const EdgeState& prev, int t, const TransitionModel& tm,
                             const DiffusionSchedule& sched, const CounterRng& rng);

/// p(e_{t-1} | e_t) = sum_k p0_hat[k] q(e_{t-1} | e_t, e0 = k), renormalized over the k that can reach e_t.
Eigen::VectorXd posterior(int e_t, const Eigen::VectorXd& p0_hat, int t, const TransitionModel& tm,
                          const DiffusionSchedule& sched);

/// Row-wise posterior for a whole state; `p0_hat` has one row per pair.
MatrixX<double> posterior_rows(std::span<const std::uint8_t> e_t, const MatrixX<double>& p0_hat, int t,
                               const TransitionModel& tm, const DiffusionSchedule& sched);

/// Mean cross-entropy of softmax(logits) against the true classes, log-probabilities clamped at 1e-30.
double cross_entropy(const MatrixX<double>& logits, std::span<const std::uint8_t> truth);

/// Edge denoiser loss on a fresh draw of E_t ~ q(E_t | E_0); coords are the clean (normalized) X_0.
double edge_ce_loss(const EdgeDenoiser& model, const EdgeState& e0, const PointCloud& coords, int t,
                    const TransitionModel& tm, const DiffusionSchedule& sched, const CounterRng& rng);

}  // namespace sgdiff

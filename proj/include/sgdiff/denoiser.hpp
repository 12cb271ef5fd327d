/* SPDX-License-Identifier: Apache-2.0 */
// Trainable predictors for the two diffusion stages.
//
// CoordDenoiser: per-point MLP over (coords, time embedding, pooled context)
// predicting the Gaussian noise added to the coordinates. Besides the global
// mean, each point sees kernel-weighted averages of its neighbours' features
// and offsets at a few fixed widths.
//
// EdgeDenoiser: pair-interaction network. Node embeddings come from coords,
// time and current degree; each block rebuilds pair features from both
// endpoints, the current pair class and pairwise distance features, then
// updates node features with the mean over incident pairs. A final pair layer emits c logits per pair.
// Both networks are permutation-equivariant by construction.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sgdiff/autodiff.hpp"

namespace sgdiff {

template <typename S>
using MatrixX = ad::Matrix<S>;

inline constexpr int kTimeEmbedDim = 16;
inline constexpr int kDegreeDim = 4;

/// Sinusoidal features of t/T: sin and cos at frequencies pi * 2^k, k = 0..7.
template <typename S>
MatrixX<S> time_embedding(int t, int steps) {
  MatrixX<S> emb(1, kTimeEmbedDim);
  const double s = static_cast<double>(t) / static_cast<double>(steps);
  for (int k = 0; k < kTimeEmbedDim / 2; ++k) {
    const double w = 3.14159265358979323846 * static_cast<double>(1 << k);
    emb(0, 2 * k) = static_cast<S>(std::sin(w * s));
    emb(0, 2 * k + 1) = static_cast<S>(std::cos(w * s));
  }
  return emb;
}

/// Canonical pairs (i < j) of n nodes in row-major upper-triangle order.
struct PairIndex {
  int nodes = 0;
  std::vector<int> first;
  std::vector<int> second;

  explicit PairIndex(int n = 0);
  std::size_t size() const { return first.size(); }
  static std::size_t count(int n) { return n < 2 ? 0 : static_cast<std::size_t>(n) * (n - 1) / 2; }
  static std::size_t index(int n, int i, int j);
};

/// One-hot current degree per node (0, 1, 2, 3 or more nonzero-class pairs).
template <typename S>
MatrixX<S> degree_features(std::span<const std::uint8_t> classes, const PairIndex& pairs);

struct CoordDenoiserConfig {
  int hidden = 64;
  /// Gaussian neighbourhood widths for the local context terms; empty keeps only the global mean.
  std::vector<double> bandwidths{0.05, 0.15, 0.5};
};

/// Row-normalized neighbour weights k_ij / (1 + sum_j k_ij), k_ij = exp(-|x_i - x_j|^2 / (2 s^2)), k_ii = 0.
template <typename S>
MatrixX<S> neighbour_weights(const MatrixX<S>& x, double bandwidth);

class CoordDenoiser {
 public:
  CoordDenoiser() = default;
  CoordDenoiser(const CoordDenoiserConfig& config, std::uint64_t seed);

  const CoordDenoiserConfig& config() const { return config_; }
  ad::Parameters<double>& params() { return params_; }
  const ad::Parameters<double>& params() const { return params_; }

  template <typename S>
  ad::Var<S> forward(ad::Tape<S>& tape, std::span<const ad::Var<S>> w, const MatrixX<S>& xt, int t,
                     int steps) const;

  /// Predicted noise for xt at step t, evaluated with parameters `w`.
  template <typename S>
  MatrixX<S> predict(const ad::Parameters<S>& w, const MatrixX<S>& xt, int t, int steps) const;

  MatrixX<double> predict(const MatrixX<double>& xt, int t, int steps) const {
    return predict(params_, xt, t, steps);
  }

 private:
  CoordDenoiserConfig config_;
  ad::Parameters<double> params_;
};

struct EdgeDenoiserConfig {
  int classes = 5;
  int hidden = 32;
  int blocks = 3;
};

/// Distance features per pair: raw distance plus Gaussian radial bases.
inline constexpr int kPairGeometryDim = 9;

template <typename S>
MatrixX<S> pair_geometry(const MatrixX<S>& coords, const PairIndex& pairs);

class EdgeDenoiser {
 public:
  EdgeDenoiser() = default;
  EdgeDenoiser(const EdgeDenoiserConfig& config, std::uint64_t seed);

  const EdgeDenoiserConfig& config() const { return config_; }
  ad::Parameters<double>& params() { return params_; }
  const ad::Parameters<double>& params() const { return params_; }

  /// Logits, one row of `classes` per canonical pair.
  template <typename S>
  ad::Var<S> forward(ad::Tape<S>& tape, std::span<const ad::Var<S>> w, std::span<const std::uint8_t> classes,
                     const MatrixX<S>& coords, const PairIndex& pairs, const MatrixX<S>& geometry, int t,
                     int steps) const;

  /// Class probabilities per pair (rows sum to one).
  template <typename S>
  MatrixX<S> predict(const ad::Parameters<S>& w, std::span<const std::uint8_t> classes, const MatrixX<S>& coords,
                     const PairIndex& pairs, const MatrixX<S>& geometry, int t, int steps) const;

  MatrixX<double> predict(std::span<const std::uint8_t> classes, const MatrixX<double>& coords, int t,
                          int steps) const;

 private:
  template <typename S>
  friend class EdgeInference;

  struct Layer {
    int node_proj, class_embed, geometry, bias;
  };
  struct NodeUpdate {
    int weight, bias;
  };

  void build(std::mt19937_64& rng);

  EdgeDenoiserConfig config_;
  ad::Parameters<double> params_;
  int input_weight_ = -1, input_bias_ = -1;
  std::vector<Layer> pair_layers_;  // blocks + head
  std::vector<NodeUpdate> node_updates_;
  int out_weight_ = -1, out_bias_ = -1;
};

/// Tape-free evaluation of an EdgeDenoiser for one fixed set of coordinates.
/// Everything that depends only on geometry is computed once, so a reverse
/// chain pays only for the class- and time-dependent part at each step.
template <typename S>
class EdgeInference {
 public:
  EdgeInference(const EdgeDenoiser& model, const MatrixX<S>& coords);

  const PairIndex& pairs() const { return pairs_; }

  /// Same result as EdgeDenoiser::predict up to rounding.
  const MatrixX<S>& predict(std::span<const std::uint8_t> classes, int t, int steps);

 private:
  void pair_layer(std::size_t layer, const MatrixX<S>& node, std::span<const std::uint8_t> classes);

  const EdgeDenoiser* model_;
  ad::Parameters<S> w_;
  MatrixX<S> coords_;
  PairIndex pairs_;
  std::vector<MatrixX<S>> geometry_terms_;  // geometry * G + b per pair layer
  MatrixX<S> pair_, proj_, agg_, probs_;
};

/// AdamW with decoupled weight decay.
struct AdamWConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
};

class AdamW {
 public:
  AdamW() = default;
  AdamW(const ad::Parameters<double>& params, AdamWConfig config);

  void step(ad::Parameters<double>& params, const std::vector<MatrixX<double>>& grads);
  long steps_taken() const { return step_; }

 private:
  AdamWConfig config_;
  std::vector<MatrixX<double>> m_, v_;
  long step_ = 0;
};

}  // namespace sgdiff

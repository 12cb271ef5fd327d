/* SPDX-License-Identifier: Apache-2.0 */
// Gaussian diffusion over node coordinates.
#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "sgdiff/denoiser.hpp"
#include "sgdiff/graph.hpp"
#include "sgdiff/rng.hpp"
#include "sgdiff/schedule.hpp"

namespace sgdiff {

using PointCloud = MatrixX<double>;

/// x_t = sqrt(abar_t) x_0 + sqrt(1 - abar_t) eps.
template <typename DerivedX, typename DerivedE>
typename DerivedX::PlainObject forward_noise_coords(const Eigen::MatrixBase<DerivedX>& x0, int t,
                                                    const Eigen::MatrixBase<DerivedE>& eps,
                                                    const DiffusionSchedule& sched) {
  if (x0.rows() != eps.rows() || x0.cols() != eps.cols()) {
    throw std::invalid_argument("forward_noise_coords: shape mismatch");
  }
  using S = typename DerivedX::Scalar;
  const double abar = sched.alpha_bar(t);
  return (static_cast<S>(std::sqrt(abar)) * x0 + static_cast<S>(std::sqrt(1.0 - abar)) * eps.template cast<S>())
      .eval();
}

/// One ancestral step:
///   x_{t-1} = (x_t - (1 - a_t) / sqrt(1 - abar_t) * eps_hat) / sqrt(a_t) + sqrt(1 - a_t) * noise,
/// with the noise term dropped at t = 1.
template <typename DerivedX, typename DerivedH, typename DerivedN>
typename DerivedX::PlainObject reverse_step_coords(const Eigen::MatrixBase<DerivedX>& xt, int t,
                                                   const Eigen::MatrixBase<DerivedH>& eps_hat,
                                                   const Eigen::MatrixBase<DerivedN>& noise,
                                                   const DiffusionSchedule& sched) {
  if (xt.rows() != eps_hat.rows() || xt.cols() != eps_hat.cols() || xt.rows() != noise.rows() ||
      xt.cols() != noise.cols()) {
    throw std::invalid_argument("reverse_step_coords: shape mismatch");
  }
  using S = typename DerivedX::Scalar;
  const double a = sched.alpha(t);
  const double abar = sched.alpha_bar(t);
  if (abar >= 1.0) throw std::domain_error("reverse_step_coords: alpha_bar_t >= 1");
  const double eps_coef = (1.0 - a) / std::sqrt(1.0 - abar);
  const double noise_coef = t > 1 ? std::sqrt(1.0 - a) : 0.0;
  return ((xt - static_cast<S>(eps_coef) * eps_hat.template cast<S>()) / static_cast<S>(std::sqrt(a)) +
          static_cast<S>(noise_coef) * noise.template cast<S>())
      .eval();
}

/// n x 3 standard normal draws from a counter stream; row r, column k uses counter (tag, r, k).
PointCloud gaussian_sample(const CounterRng& rng, Eigen::Index n, std::uint64_t tag);

/// Mean squared error between noise and its prediction.
double coord_loss(const PointCloud& eps, const PointCloud& eps_hat);

/// Denoiser loss at step t with the given noise draw.
double coord_loss(const CoordDenoiser& model, const PointCloud& x0, int t, const PointCloud& eps,
                  const DiffusionSchedule& sched);

/// Runs the full reverse chain from x_T ~ N(0, I). Aborts on non-finite values.
PointCloud sample_coords(const CoordDenoiser& model, Eigen::Index n, const DiffusionSchedule& sched,
                         const CounterRng& rng);

/// Corpus-level affine normalization: zero mean, 99th-percentile radius of one.
struct CoordNormalizer {
  Eigen::RowVector3d mean = Eigen::RowVector3d::Zero();
  double scale = 1.0;

  static CoordNormalizer fit(std::span<const SpatialGraph> corpus);
  PointCloud normalize(const Coords& coords) const;
  Coords denormalize(const PointCloud& coords) const;
};

}  // namespace sgdiff

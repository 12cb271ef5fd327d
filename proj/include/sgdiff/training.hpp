/* SPDX-License-Identifier: Apache-2.0 */
// Minibatch AdamW training loops for both denoisers.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sgdiff/coord_ddpm.hpp"
#include "sgdiff/denoiser.hpp"
#include "sgdiff/edge_diffusion.hpp"

namespace sgdiff {

struct TrainConfig {
  double lr = 3e-4;
  double weight_decay = 1e-2;
  int epochs = 200;
  int batch = 4;
  std::uint64_t seed = 0;
  /// Called after every epoch with (epoch, mean loss).
  std::function<void(int, double)> on_epoch;
};

struct EdgeExample {
  PointCloud coords;  // normalized clean coordinates
  EdgeState edges;
};

/// Returns the per-epoch mean training loss.
std::vector<double> fit_coords(CoordDenoiser& model, std::span<const PointCloud> data,
                               const DiffusionSchedule& sched, const TrainConfig& config);

std::vector<double> fit_edges(EdgeDenoiser& model, std::span<const EdgeExample> data, const TransitionModel& tm,
                              const DiffusionSchedule& sched, const TrainConfig& config);

/// Mean loss over `data` with `draws` fixed (t, noise) draws per example.
double mean_coord_loss(const CoordDenoiser& model, std::span<const PointCloud> data, const DiffusionSchedule& sched,
                       std::uint64_t seed, int draws = 4);

double mean_edge_loss(const EdgeDenoiser& model, std::span<const EdgeExample> data, const TransitionModel& tm,
                      const DiffusionSchedule& sched, std::uint64_t seed, int draws = 4);

/// Gradient of the coordinate loss for one example at step t with noise eps.
std::pair<double, std::vector<MatrixX<double>>> coord_loss_grad(const CoordDenoiser& model, const PointCloud& x0,
                                                                int t, const PointCloud& eps,
                                                                const DiffusionSchedule& sched);

/// Gradient of the edge cross-entropy for one example given an already-noised state e_t.
std::pair<double, std::vector<MatrixX<double>>> edge_loss_grad(const EdgeDenoiser& model, const EdgeExample& example,
                                                               const EdgeState& e_t, int t, int steps);

}  // namespace sgdiff

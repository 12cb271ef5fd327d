/* SPDX-License-Identifier: Apache-2.0 */
#include "sgdiff/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace sgdiff {

namespace {

int draw_step(const CounterRng& rng, std::uint64_t a, std::uint64_t b, int steps) {
  return 1 + static_cast<int>(rng.bits(a, b, 0x7157) % static_cast<std::uint64_t>(steps));
}

template <typename Example, typename LossGrad>
std::vector<double> run_epochs(ad::Parameters<double>& params, std::span<const Example> data,
                               const TrainConfig& config, const char* what, LossGrad&& loss_grad) {
  if (data.empty()) throw std::invalid_argument(std::string(what) + ": empty dataset");
  if (config.batch < 1 || config.epochs < 0) throw std::invalid_argument(std::string(what) + ": bad config");
  AdamW opt(params, AdamWConfig{.lr = config.lr, .weight_decay = config.weight_decay});
  const CounterRng root = CounterRng(config.seed).stream(what);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> curve;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::mt19937_64 shuffle_rng(root.bits(static_cast<std::uint64_t>(epoch), 0x5u));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch));
      std::vector<MatrixX<double>> grads;
      for (std::size_t k = start; k < stop; ++k) {
        const CounterRng draw = root.stream(static_cast<std::uint64_t>(epoch)).stream(order[k]);
        auto [loss, g] = loss_grad(data[order[k]], draw);
        if (!std::isfinite(loss)) {
          throw std::runtime_error(std::string(what) + ": loss diverged (epoch " + std::to_string(epoch) +
                                   ", example " + std::to_string(order[k]) + ")");
        }
        epoch_loss += loss;
        if (grads.empty()) {
          grads = std::move(g);
        } else {
          for (std::size_t s = 0; s < grads.size(); ++s) grads[s] += g[s];
        }
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (auto& g : grads) g *= inv;
      opt.step(params, grads);
    }
    epoch_loss /= static_cast<double>(data.size());
    curve.push_back(epoch_loss);
    if (config.on_epoch) config.on_epoch(epoch, epoch_loss);
  }
  return curve;
}

}  // namespace

std::pair<double, std::vector<MatrixX<double>>> coord_loss_grad(const CoordDenoiser& model, const PointCloud& x0,
                                                                int t, const PointCloud& eps,
                                                                const DiffusionSchedule& sched) {
  const PointCloud xt = forward_noise_coords(x0, t, eps, sched);
  return ad::value_and_grad<double>(model.params(), [&](ad::Tape<double>& tape, std::span<const ad::Var<double>> w) {
    return ad::mse(model.forward<double>(tape, w, xt, t, sched.steps()), eps);
  });
}

std::pair<double, std::vector<MatrixX<double>>> edge_loss_grad(const EdgeDenoiser& model, const EdgeExample& example,
                                                               const EdgeState& e_t, int t, int steps) {
  const PairIndex pairs(example.edges.node_count());
  const auto geometry = pair_geometry<double>(example.coords, pairs);
  std::vector<int> target(example.edges.classes().begin(), example.edges.classes().end());
  return ad::value_and_grad<double>(model.params(), [&](ad::Tape<double>& tape, std::span<const ad::Var<double>> w) {
    auto logits = model.forward<double>(tape, w, e_t.classes(), example.coords, pairs, geometry, t, steps);
    return ad::softmax_cross_entropy(logits, std::span<const int>(target));
  });
}

std::vector<double> fit_coords(CoordDenoiser& model, std::span<const PointCloud> data,
                               const DiffusionSchedule& sched, const TrainConfig& config) {
  return run_epochs<PointCloud>(model.params(), data, config, "fit_coords",
                                [&](const PointCloud& x0, const CounterRng& draw) {
                                  const int t = draw_step(draw, 0, 0, sched.steps());
                                  const PointCloud eps = gaussian_sample(draw, x0.rows(), 1);
                                  return coord_loss_grad(model, x0, t, eps, sched);
                                });
}

std::vector<double> fit_edges(EdgeDenoiser& model, std::span<const EdgeExample> data, const TransitionModel& tm,
                              const DiffusionSchedule& sched, const TrainConfig& config) {
  return run_epochs<EdgeExample>(model.params(), data, config, "fit_edges",
                                 [&](const EdgeExample& ex, const CounterRng& draw) {
                                   const int t = draw_step(draw, 0, 0, sched.steps());
                                   const EdgeState et = forward_noise_edges(ex.edges, t, tm, sched, draw.stream(1));
                                   return edge_loss_grad(model, ex, et, t, sched.steps());
                                 });
}

double mean_coord_loss(const CoordDenoiser& model, std::span<const PointCloud> data, const DiffusionSchedule& sched,
                       std::uint64_t seed, int draws) {
  const CounterRng root = CounterRng(seed).stream("eval-coords");
  double total = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    for (int d = 0; d < draws; ++d) {
      const CounterRng draw = root.stream(k).stream(static_cast<std::uint64_t>(d));
      const int t = draw_step(draw, 0, 0, sched.steps());
      total += coord_loss(model, data[k], t, gaussian_sample(draw, data[k].rows(), 1), sched);
    }
  }
  return total / static_cast<double>(data.size() * static_cast<std::size_t>(draws));
}

double mean_edge_loss(const EdgeDenoiser& model, std::span<const EdgeExample> data, const TransitionModel& tm,
                      const DiffusionSchedule& sched, std::uint64_t seed, int draws) {
  const CounterRng root = CounterRng(seed).stream("eval-edges");
  double total = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    for (int d = 0; d < draws; ++d) {
      const CounterRng draw = root.stream(k).stream(static_cast<std::uint64_t>(d));
      const int t = draw_step(draw, 0, 0, sched.steps());
      total += edge_ce_loss(model, data[k].edges, data[k].coords, t, tm, sched, draw.stream(1));
    }
  }
  return total / static_cast<double>(data.size() * static_cast<std::size_t>(draws));
}

}  // namespace sgdiff

/* SPDX-License-Identifier: Apache-2.0 */
// Train, sample and complete graphs with a two-stage model.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sgdiff/checkpoint.hpp"
#include "sgdiff/datagen.hpp"
#include "sgdiff/projector.hpp"
#include "sgdiff/training.hpp"

namespace sgdiff {

struct TrainOptions {
  ScheduleShape shape = ScheduleShape::linear;
  int steps = 500;
  NoisingKind noising = NoisingKind::absorbing;
  CoordDenoiserConfig coord;
  EdgeDenoiserConfig edge;  // classes is taken from the corpus labels
  TrainConfig coord_train;
  TrainConfig edge_train;
  bool train_coords = true;
  bool train_edges = true;
  std::uint64_t seed = 0;
};

struct TrainReport {
  std::vector<double> coord_curve;
  std::vector<double> edge_curve;
  double coord_seconds = 0.0;
  double edge_seconds = 0.0;
};

/// Builds and fits both stages; stages with train_* = false keep their initial weights.
Model train_model(const Corpus& corpus, const TrainOptions& options, TrainReport* report = nullptr);

struct GenerateOptions {
  int count = 1;
  std::uint64_t seed = 0;
  ProjectorConfig projector;
  /// Sample with a different noising kind than the model was trained with.
  std::optional<NoisingKind> noising;
  /// Fixed node count; otherwise drawn from the training sizes.
  std::optional<int> nodes;
  int threads = 0;  // 0: hardware concurrency
  bool single_precision = true;
};

struct GeneratedGraph {
  SpatialGraph graph;  // in data units
  InterventionLog log;
  double seconds = 0.0;
};

/// Independent chains; sample i depends only on (seed, i), never on threading.
std::vector<GeneratedGraph> generate(const Model& model, const GenerateOptions& options);

/// Completes `partial` (data units) with a truncated reverse chain of `steps` steps.
EdgeSample complete_graph(const Model& model, const SpatialGraph& partial, const ProjectorConfig& cfg, int steps,
                          std::uint64_t seed, bool single_precision = true);

/// Removes round(fraction * |E|) edges chosen uniformly at random.
SpatialGraph drop_edges(const SpatialGraph& g, double fraction, std::uint64_t seed);

}  // namespace sgdiff

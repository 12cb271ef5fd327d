/* SPDX-License-Identifier: Apache-2.0 */
// Trained two-stage model and its JSON container.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sgdiff/coord_ddpm.hpp"
#include "sgdiff/denoiser.hpp"
#include "sgdiff/edge_diffusion.hpp"
#include "sgdiff/graph_io.hpp"
#include "sgdiff/schedule.hpp"

namespace sgdiff {

inline constexpr const char* kCheckpointFormat = "sgdiff-checkpoint/1";

struct Model {
  CoordDenoiser coord;
  EdgeDenoiser edge;
  ScheduleShape shape = ScheduleShape::linear;
  int steps = 500;
  NoisingKind noising = NoisingKind::absorbing;
  Eigen::VectorXd class_frequencies;  // over classes 0..c-1, from the training corpus
  CoordNormalizer normalizer;
  std::vector<std::string> labels;
  std::vector<int> node_counts;  // training graph sizes, sampled at generation time

  int classes() const { return edge.config().classes; }
  DiffusionSchedule coord_schedule() const { return DiffusionSchedule::make(shape, steps, DiffusionStage::coordinate); }
  DiffusionSchedule edge_schedule() const { return DiffusionSchedule::make(shape, steps, DiffusionStage::edge); }
  TransitionModel transition() const { return transition(noising); }
  TransitionModel transition(NoisingKind kind) const;
};

json model_to_json(const Model& m);
Model model_from_json(const json& doc);

void save_model(const std::filesystem::path& path, const Model& m);
Model load_model(const std::filesystem::path& path);

}  // namespace sgdiff

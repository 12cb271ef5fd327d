/* SPDX-License-Identifier: Apache-2.0 */
#pragma once

#include <string>
#include <vector>

namespace sgdiff {

enum class ScheduleShape { linear, cosine, custom };
enum class DiffusionStage { coordinate, edge };

std::string to_string(ScheduleShape shape);
ScheduleShape parse_schedule_shape(const std::string& name);

/// Per-step retention alpha_t and cumulative alpha_bar_t for t = 0..T, with
/// alpha_bar_0 = 1. alpha_bar_t is the running product of alpha_1..alpha_t.
class DiffusionSchedule {
 public:
  static constexpr double kFloor = 1e-5;

  static DiffusionSchedule linear(int steps, DiffusionStage stage = DiffusionStage::edge);
  static DiffusionSchedule cosine(int steps, DiffusionStage stage = DiffusionStage::edge);
  static DiffusionSchedule make(ScheduleShape shape, int steps, DiffusionStage stage = DiffusionStage::edge);
  /// alphas[s] is alpha_{s+1}; each must lie in (0, 1].
  static DiffusionSchedule from_alphas(const std::vector<double>& alphas,
                                       DiffusionStage stage = DiffusionStage::edge);

  int steps() const { return static_cast<int>(alpha_.size()) - 1; }
  double alpha(int t) const;
  double alpha_bar(int t) const;
  ScheduleShape shape() const { return shape_; }
  DiffusionStage stage() const { return stage_; }

 private:
  static DiffusionSchedule from_alpha_bar(const std::vector<double>& target, ScheduleShape shape,
                                          DiffusionStage stage);

  std::vector<double> alpha_;
  std::vector<double> alpha_bar_;
  ScheduleShape shape_ = ScheduleShape::linear;
  DiffusionStage stage_ = DiffusionStage::edge;
};

}  // namespace sgdiff

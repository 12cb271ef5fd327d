/* SPDX-License-Identifier: Apache-2.0 */
#include "sgdiff/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sgdiff {

std::string to_string(ScheduleShape shape) {
  switch (shape) {
    case ScheduleShape::linear: return "linear";
    case ScheduleShape::cosine: return "cosine";
    case ScheduleShape::custom: return "custom";
  }
  return "custom";
}

ScheduleShape parse_schedule_shape(const std::string& name) {
  if (name == "linear") return ScheduleShape::linear;
  if (name == "cosine") return ScheduleShape::cosine;
  throw std::invalid_argument("unknown schedule '" + name + "' (expected linear|cosine)");
}

DiffusionSchedule DiffusionSchedule::from_alpha_bar(const std::vector<double>& target,
                                                    ScheduleShape shape, DiffusionStage stage) {
  DiffusionSchedule s;
  s.shape_ = shape;
  s.stage_ = stage;
  const auto steps = target.size() - 1;
  s.alpha_.assign(steps + 1, 1.0);
  s.alpha_bar_.assign(steps + 1, 1.0);
  for (std::size_t t = 1; t <= steps; ++t) {
    s.alpha_[t] = target[t] / target[t - 1];
    s.alpha_bar_[t] = s.alpha_bar_[t - 1] * s.alpha_[t];
  }
  return s;
}

DiffusionSchedule DiffusionSchedule::linear(int steps, DiffusionStage stage) {
  if (steps < 1) throw std::invalid_argument("schedule needs at least one step");
  std::vector<double> target(static_cast<std::size_t>(steps) + 1);
  for (int t = 0; t <= steps; ++t) {
    target[static_cast<std::size_t>(t)] = std::clamp(1.0 - static_cast<double>(t) / steps, kFloor, 1.0);
  }
  return from_alpha_bar(target, ScheduleShape::linear, stage);
}

DiffusionSchedule DiffusionSchedule::cosine(int steps, DiffusionStage stage) {
  if (steps < 1) throw std::invalid_argument("schedule needs at least one step");
  std::vector<double> target(static_cast<std::size_t>(steps) + 1);
  for (int t = 0; t <= steps; ++t) {
    const double c = std::cos(static_cast<double>(t) / steps * std::numbers::pi / 2.0);
    target[static_cast<std::size_t>(t)] = std::clamp(c * c, kFloor, 1.0);
  }
  return from_alpha_bar(target, ScheduleShape::cosine, stage);
}

DiffusionSchedule DiffusionSchedule::make(ScheduleShape shape, int steps, DiffusionStage stage) {
  switch (shape) {
    case ScheduleShape::linear: return linear(steps, stage);
    case ScheduleShape::cosine: return cosine(steps, stage);
    case ScheduleShape::custom: break;
  }
  throw std::invalid_argument("custom schedules are built from explicit alphas");
}

DiffusionSchedule DiffusionSchedule::from_alphas(const std::vector<double>& alphas, DiffusionStage stage) {
  if (alphas.empty()) throw std::invalid_argument("schedule needs at least one step");
  DiffusionSchedule s;
  s.shape_ = ScheduleShape::custom;
  s.stage_ = stage;
  s.alpha_.assign(1, 1.0);
  s.alpha_bar_.assign(1, 1.0);
  for (double a : alphas) {
    if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("alpha outside (0, 1]");
    s.alpha_.push_back(a);
    s.alpha_bar_.push_back(s.alpha_bar_.back() * a);
  }
  return s;
}

double DiffusionSchedule::alpha(int t) const {
  if (t < 0 || t > steps()) throw std::out_of_range("step " + std::to_string(t) + " outside schedule");
  return alpha_[static_cast<std::size_t>(t)];
}

double DiffusionSchedule::alpha_bar(int t) const {
  if (t < 0 || t > steps()) throw std::out_of_range("step " + std::to_string(t) + " outside schedule");
  return alpha_bar_[static_cast<std::size_t>(t)];
}

}  // namespace sgdiff

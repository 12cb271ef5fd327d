/* SPDX-License-Identifier: Apache-2.0 */
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sgdiff/schedule.hpp"

using namespace sgdiff;

namespace {

void check_invariants(const DiffusionSchedule& s) {
  long double product = 1.0L;
  CHECK(s.alpha_bar(0) == 1.0);
  for (int t = 1; t <= s.steps(); ++t) {
    CHECK(s.alpha(t) > 0.0);
    CHECK(s.alpha(t) <= 1.0);
    CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
    CHECK(s.alpha_bar(t) == s.alpha_bar(t - 1) * s.alpha(t));
    product *= s.alpha(t);
    CHECK(std::abs(static_cast<double>(product) - s.alpha_bar(t)) < 1e-12);
  }
  CHECK(s.alpha_bar(s.steps()) <= 1e-4);
}

}  // namespace

TEST_CASE("linear schedule") {
  CHECK(DiffusionSchedule::linear(1).alpha_bar(1) == doctest::Approx(DiffusionSchedule::kFloor).epsilon(1e-12));
  const auto s = DiffusionSchedule::linear(500);
  CHECK(std::abs(s.alpha_bar(250) - 0.5) < 1e-9);
  CHECK(s.steps() == 500);
  CHECK(s.shape() == ScheduleShape::linear);
  check_invariants(s);
  check_invariants(DiffusionSchedule::linear(7));
  CHECK_THROWS(DiffusionSchedule::linear(0));
}

TEST_CASE("cosine schedule") {
  CHECK(std::abs(DiffusionSchedule::cosine(2).alpha_bar(1) - 0.5) < 1e-12);
  const auto s = DiffusionSchedule::cosine(100);
  CHECK(s.alpha_bar(0) == 1.0);
  CHECK(s.alpha_bar(1) > 0.999);
  CHECK(std::abs(s.alpha_bar(100) - DiffusionSchedule::kFloor) < 1e-12);
  for (int t : {10, 37, 80}) {
    const double c = std::cos(t / 100.0 * std::numbers::pi / 2);
    CHECK(std::abs(s.alpha_bar(t) - c * c) < 1e-12);
  }
  check_invariants(s);
  CHECK_THROWS(DiffusionSchedule::cosine(-3));
}

TEST_CASE("custom schedules and parsing") {
  const auto s = DiffusionSchedule::from_alphas({0.8, 0.5, 0.25});
  CHECK(s.steps() == 3);
  CHECK(s.alpha_bar(2) == doctest::Approx(0.4));
  CHECK(s.shape() == ScheduleShape::custom);
  CHECK_THROWS(DiffusionSchedule::from_alphas({0.5, 0.0}));
  CHECK_THROWS(DiffusionSchedule::from_alphas({1.5}));
  CHECK_THROWS(DiffusionSchedule::from_alphas({}));
  CHECK(s.alpha(0) == 1.0);
  CHECK_THROWS(s.alpha(-1));
  CHECK_THROWS(s.alpha_bar(4));
  CHECK(parse_schedule_shape("cosine") == ScheduleShape::cosine);
  CHECK(to_string(ScheduleShape::linear) == "linear");
  CHECK_THROWS(parse_schedule_shape("quadratic"));
  CHECK(DiffusionSchedule::make(ScheduleShape::cosine, 10, DiffusionStage::coordinate).stage() ==
        DiffusionStage::coordinate);
}

/* SPDX-License-Identifier: Apache-2.0 */
#include <doctest.h>

#include <cmath>

#include "sgdiff/coord_ddpm.hpp"
#include "support.hpp"

using namespace sgdiff;

namespace {

PointCloud cloud(std::initializer_list<std::initializer_list<double>> rows) {
  PointCloud m(static_cast<Eigen::Index>(rows.size()), 3);
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

CoordDenoiser zero_model() {
  CoordDenoiser m(CoordDenoiserConfig{.bandwidths = {}}, 1);
  for (auto& p : m.params().values()) p.setZero();
  return m;
}

}  // namespace

TEST_CASE("forward noising closed form") {
  const PointCloud x0 = cloud({{1, 2, 3}, {-1, 0, 0.5}});
  const PointCloud eps = cloud({{0.3, -0.2, 1}, {2, 1, -1}});
  const auto keep = DiffusionSchedule::from_alphas({1.0, 0.5});
  CHECK(forward_noise_coords(x0, 1, eps, keep) == x0);
  const auto gone = DiffusionSchedule::from_alphas({1e-300});
  CHECK((forward_noise_coords(x0, 1, eps, gone) - eps).cwiseAbs().maxCoeff() < 1e-12);
  const auto quarter = DiffusionSchedule::from_alphas({0.25});
  const PointCloud xt = forward_noise_coords(PointCloud::Zero(2, 3), 1, PointCloud::Ones(2, 3), quarter);
  CHECK((xt.array() - std::sqrt(0.75)).abs().maxCoeff() < 1e-15);
  CHECK(std::abs(std::sqrt(0.75) - 0.8660) < 1e-4);
  CHECK_THROWS(forward_noise_coords(x0, 1, PointCloud::Zero(3, 3), keep));
}

TEST_CASE("coordinate loss") {
  const PointCloud eps = cloud({{1, 2, 3}, {4, 5, 6}});
  CHECK(coord_loss(eps, eps) == 0.0);
  CHECK(coord_loss(PointCloud::Ones(2, 3), PointCloud::Zero(2, 3)) == 1.0);
  std::mt19937_64 rng(1);
  const PointCloud a = test::random_coords(5, rng);
  const PointCloud b = test::random_coords(5, rng);
  double manual = 0.0;
  for (int r = 0; r < 5; ++r)
    for (int k = 0; k < 3; ++k) manual += (a(r, k) - b(r, k)) * (a(r, k) - b(r, k));
  CHECK(coord_loss(a, b) == doctest::Approx(manual / 15.0).epsilon(1e-14));

  // model form: recompute through the public forward pass
  const CoordDenoiser model(CoordDenoiserConfig{.hidden = 8}, 3);
  const auto sched = DiffusionSchedule::linear(20);
  const PointCloud x0 = test::random_coords(6, rng);
  const PointCloud noise = test::random_coords(6, rng);
  const PointCloud pred = model.predict(forward_noise_coords(x0, 7, noise, sched), 7, 20);
  CHECK(coord_loss(model, x0, 7, noise, sched) == doctest::Approx((noise - pred).squaredNorm() / 18.0));
}

TEST_CASE("reverse step formula") {
  const auto half = DiffusionSchedule::from_alphas({0.5});
  const PointCloud x = reverse_step_coords(cloud({{1, 0, 0}}), 1, cloud({{1, 0, 0}}), PointCloud::Zero(1, 3), half);
  const double expected = (1.0 / std::sqrt(0.5)) * (1.0 - 0.5 / std::sqrt(0.5));
  CHECK(std::abs(x(0, 0) - expected) < 1e-15);
  CHECK(std::abs(x(0, 0) - 0.4142) < 1e-4);
  CHECK(x(0, 1) == 0.0);

  const auto ident = DiffusionSchedule::from_alphas({0.5, 1.0});
  std::mt19937_64 rng(2);
  const PointCloud xt = test::random_coords(4, rng);
  const PointCloud e = test::random_coords(4, rng);
  const PointCloud z = test::random_coords(4, rng);
  CHECK(reverse_step_coords(xt, 2, e, z, ident) == xt);

  const auto sched = DiffusionSchedule::from_alphas({0.9, 0.8, 0.7});
  const PointCloud base = reverse_step_coords(xt, 2, e, z, sched);
  const PointCloud twice = reverse_step_coords(xt, 2, e, (2.0 * z).eval(), sched);
  CHECK(((twice - base) - std::sqrt(1.0 - 0.8) * z).cwiseAbs().maxCoeff() < 1e-12);
  // noise is dropped at t = 1
  CHECK(reverse_step_coords(xt, 1, e, z, sched) == reverse_step_coords(xt, 1, e, PointCloud::Zero(4, 3), sched));

  // superposition: the step is affine-linear in (x_t, eps_hat, noise) jointly
  const PointCloud xt2 = test::random_coords(4, rng);
  const PointCloud e2 = test::random_coords(4, rng);
  const PointCloud z2 = test::random_coords(4, rng);
  const PointCloud sum = reverse_step_coords((xt + xt2).eval(), 3, (e + e2).eval(), (z + z2).eval(), sched);
  const PointCloud parts = reverse_step_coords(xt, 3, e, z, sched) + reverse_step_coords(xt2, 3, e2, z2, sched);
  CHECK((sum - parts).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(reverse_step_coords(xt, 1, e, z, DiffusionSchedule::from_alphas({1.0})), std::domain_error);
}

TEST_CASE("iterated single-step noising matches the closed-form marginal") {
  const auto sched = DiffusionSchedule::linear(20);
  const int t = 12;
  const Eigen::Index rows = 35000;  // 105000 scalar draws
  const Eigen::RowVector3d x0(1.0, -2.0, 0.5);
  PointCloud x = x0.replicate(rows, 1);
  const CounterRng rng(17);
  for (int s = 1; s <= t; ++s) {
    const double a = sched.alpha(s);
    x = std::sqrt(a) * x + std::sqrt(1.0 - a) * gaussian_sample(rng, rows, static_cast<std::uint64_t>(s));
  }
  const double abar = sched.alpha_bar(t);
  const double var = 1.0 - abar;
  const auto n = static_cast<double>(rows);
  for (int k = 0; k < 3; ++k) {
    const double mean = x.col(k).mean();
    const double v = (x.col(k).array() - mean).square().sum() / (n - 1);
    CHECK(std::abs(mean - std::sqrt(abar) * x0(k)) < 3.0 * std::sqrt(var / n));
    CHECK(std::abs(v - var) < 3.0 * var * std::sqrt(2.0 / n));
  }
  // at abar close to zero the marginal is standard normal
  const PointCloud far = forward_noise_coords(x0.replicate(rows, 1).eval(), 20,
                                              gaussian_sample(rng, rows, 99), sched);
  const Eigen::Matrix3d cov = (far.rowwise() - far.colwise().mean()).transpose() *
                              (far.rowwise() - far.colwise().mean()) / (n - 1);
  CHECK((cov - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("sampling with a zero denoiser follows the analytic Gaussian chain") {
  const auto sched = DiffusionSchedule::linear(30);
  const auto model = zero_model();
  CHECK(model.predict(PointCloud::Ones(3, 3), 5, 30).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::Index n = 10000;
  const PointCloud x = sample_coords(model, n, sched, CounterRng(5));
  double v = 1.0;  // variance of x_T
  for (int t = 30; t >= 1; --t) v = v / sched.alpha(t) + (t > 1 ? 1.0 - sched.alpha(t) : 0.0);
  for (int k = 0; k < 3; ++k) {
    const double mean = x.col(k).mean();
    const double var = (x.col(k).array() - mean).square().sum() / static_cast<double>(n - 1);
    CHECK(std::abs(mean) < 3.0 * std::sqrt(v / static_cast<double>(n)));
    CHECK(std::abs(var - v) < 4.0 * v * std::sqrt(2.0 / static_cast<double>(n)));
  }
}

TEST_CASE("sample_coords shape and determinism") {
  const CoordDenoiser model(CoordDenoiserConfig{.hidden = 16}, 4);
  const auto sched = DiffusionSchedule::linear(25);
  CHECK(sample_coords(model, 1, sched, CounterRng(1)).rows() == 1);
  const auto a = sample_coords(model, 7, sched, CounterRng(9));
  const auto b = sample_coords(model, 7, sched, CounterRng(9));
  CHECK(a == b);
  CHECK(a.allFinite());
  CHECK(a != sample_coords(model, 7, sched, CounterRng(10)));
}

TEST_CASE("corpus normalization") {
  std::mt19937_64 rng(6);
  std::vector<SpatialGraph> corpus;
  for (int k = 0; k < 5; ++k) corpus.emplace_back(Coords((test::random_coords(30, rng).array() * 7.0 + 3.0).matrix()));
  const auto norm = CoordNormalizer::fit(corpus);
  Eigen::RowVector3d mean = Eigen::RowVector3d::Zero();
  std::vector<double> radii;
  for (const auto& g : corpus) {
    const PointCloud p = norm.normalize(g.coords());
    mean += p.colwise().sum();
    for (Eigen::Index r = 0; r < p.rows(); ++r) radii.push_back(p.row(r).norm());
    CHECK((norm.denormalize(p) - g.coords()).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK((mean / 150.0).cwiseAbs().maxCoeff() < 1e-12);
  std::sort(radii.begin(), radii.end());
  CHECK(radii[static_cast<std::size_t>(0.99 * 149)] == doctest::Approx(1.0));
}

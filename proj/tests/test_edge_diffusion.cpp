/* SPDX-License-Identifier: Apache-2.0 */
#include <doctest.h>

#include <cmath>

#include "sgdiff/edge_diffusion.hpp"
#include "support.hpp"

using namespace sgdiff;

namespace {

std::vector<TransitionModel> kinds(int c) {
  Eigen::VectorXd freq = Eigen::VectorXd::LinSpaced(c, 1.0, static_cast<double>(c));
  return {TransitionModel::absorbing(c), TransitionModel::uniform(c), TransitionModel::marginal(freq)};
}

DiffusionSchedule random_schedule(int steps, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.3, 1.0);
  std::vector<double> alphas;
  for (int s = 0; s < steps; ++s) alphas.push_back(u(rng));
  return DiffusionSchedule::from_alphas(alphas);
}

// q(e_{t-1} | e_t, e_0) from the single-step and cumulative kernels.
Eigen::VectorXd bayes(int e_t, int e0, int t, const TransitionModel& tm, const DiffusionSchedule& s) {
  const Eigen::MatrixXd q = transition_matrix(tm, t, s);
  const Eigen::MatrixXd prev = cumulative_transition(tm, t - 1, s);
  const int c = tm.classes();
  Eigen::VectorXd out(c);
  for (int k = 0; k < c; ++k) out(k) = q(k, e_t) * prev(e0, k);
  return out / out.sum();
}

}  // namespace

TEST_CASE("transition matrices") {
  const auto half = DiffusionSchedule::from_alphas({0.5});
  const Eigen::MatrixXd q = transition_matrix(TransitionModel::absorbing(3), 1, half);
  Eigen::MatrixXd expected(3, 3);
  expected << 1, 0, 0, 0.5, 0.5, 0, 0.5, 0, 0.5;
  CHECK((q - expected).cwiseAbs().maxCoeff() < 1e-15);

  const auto ident = DiffusionSchedule::from_alphas({1.0, 0.5});
  for (const auto& tm : kinds(4)) {
    CHECK(transition_matrix(tm, 1, ident).isIdentity(0.0));
    CHECK(cumulative_transition(tm, 1, ident).isIdentity(0.0));
    CHECK(cumulative_transition(tm, 0, ident).isIdentity(0.0));
  }
  const auto gone = DiffusionSchedule::from_alphas({1e-300});
  const Eigen::MatrixXd full = transition_matrix(TransitionModel::absorbing(4), 1, gone);
  for (int r = 0; r < 4; ++r) CHECK((full.row(r) - Eigen::RowVector4d(1, 0, 0, 0)).cwiseAbs().maxCoeff() < 1e-12);

  std::mt19937_64 rng(1);
  const auto s = random_schedule(10, rng);
  for (int c : {2, 3, 5}) {
    for (const auto& tm : kinds(c)) {
      for (int t = 1; t <= 10; ++t) {
        const Eigen::MatrixXd m = transition_matrix(tm, t, s);
        CHECK((m.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
        CHECK(m.minCoeff() >= 0.0);
        if (tm.kind() == NoisingKind::absorbing) CHECK(m(0, 0) == 1.0);
      }
    }
  }
  CHECK_THROWS(transition_matrix(TransitionModel::absorbing(3), 0, s));
  CHECK_THROWS(TransitionModel::absorbing(1));
  CHECK_THROWS(TransitionModel::marginal(Eigen::Vector3d(1, -1, 1)));
  CHECK(TransitionModel::marginal(Eigen::Vector3d(2, 1, 1)).target()(0) == doctest::Approx(0.5));
  CHECK(parse_noising_kind("uniform") == NoisingKind::uniform);
  CHECK(to_string(NoisingKind::marginal) == "marginal");
  CHECK_THROWS(parse_noising_kind("gaussian"));
}

TEST_CASE("cumulative transition equals the explicit product") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_schedule(15, rng);
    for (int c : {2, 3, 5}) {
      for (const auto& tm : kinds(c)) {
        Eigen::MatrixXd product = Eigen::MatrixXd::Identity(c, c);
        for (int t = 1; t <= 15; ++t) {
          product = product * transition_matrix(tm, t, s);
          CHECK((cumulative_transition(tm, t, s) - product).cwiseAbs().maxCoeff() < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("edge state conversions") {
  std::mt19937_64 rng(3);
  const auto g = test::random_graph(9, 0.3, 4, rng);
  const auto e = EdgeState::from_graph(g, 5);
  CHECK(e.pair_count() == 36);
  CHECK(e.edge_count() == g.edge_count());
  CHECK(e.to_graph(g.coords()) == g);
  CHECK_THROWS(EdgeState::from_graph(g, 4));
  CHECK(e.at(2, 5) == g.label_of(2, 5));
}

TEST_CASE("forward edge noising") {
  std::mt19937_64 rng(4);
  const auto g = test::random_graph(12, 0.3, 3, rng);
  const auto e0 = EdgeState::from_graph(g, 4);
  const auto ident = DiffusionSchedule::from_alphas({1.0, 0.5});
  CHECK(forward_noise_edges(e0, 1, TransitionModel::uniform(4), ident, CounterRng(1)) == e0);
  const auto lin = DiffusionSchedule::linear(10);
  CHECK(forward_noise_edges(e0, 10, TransitionModel::absorbing(4), lin, CounterRng(1)).edge_count() == 0);

  // 448 nodes give 100128 pairs, all set to class 2
  EdgeState many(448);
  for (std::size_t p = 0; p < many.pair_count(); ++p) many[p] = 2;
  const auto s = DiffusionSchedule::from_alphas({0.6, 0.5});
  const auto noised = forward_noise_edges(many, 1, TransitionModel::absorbing(4), s, CounterRng(7));
  std::array<double, 4> counts{};
  for (std::size_t p = 0; p < noised.pair_count(); ++p) counts[noised[p]] += 1.0;
  const double n = static_cast<double>(noised.pair_count());
  const double sigma = std::sqrt(0.6 * 0.4 / n);
  CHECK(std::abs(counts[2] / n - 0.6) < 3 * sigma);
  CHECK(std::abs(counts[0] / n - 0.4) < 3 * sigma);
  CHECK(counts[1] == 0.0);
  CHECK(counts[3] == 0.0);
}

TEST_CASE("absorbing noising keeps valid graphs valid") {
  std::mt19937_64 rng(5);
  const auto h = OmegaMatrix::hierarchy(4);
  const auto s = DiffusionSchedule::linear(50);
  std::uniform_int_distribution<int> step(1, 50);
  int done = 0;
  while (done < 100) {
    const auto g = test::random_graph(10, 0.1, 4, rng);
    if (!check_omega(g, h).empty()) continue;
    const auto noised = forward_noise_edges(EdgeState::from_graph(g, 5), step(rng), TransitionModel::absorbing(5), s,
                                            CounterRng(static_cast<std::uint64_t>(done)));
    const auto ng = noised.to_graph(g.coords());
    CHECK(check_omega(ng, h).empty());
    for (const auto& e : ng.edges()) CHECK(g.label_of(e.i, e.j) == e.label);
    ++done;
  }
}

TEST_CASE("posterior worked examples") {
  const auto s = DiffusionSchedule::from_alphas({0.8, 0.5});
  const auto tm = TransitionModel::absorbing(3);
  const Eigen::Vector3d a(0, 1, 0);
  const Eigen::VectorXd post = posterior(0, a, 2, tm, s);
  CHECK(std::abs(post(0) - 1.0 / 3.0) < 1e-12);
  CHECK(std::abs(post(1) - 2.0 / 3.0) < 1e-12);
  CHECK(post(2) == 0.0);
  CHECK((posterior(1, a, 2, tm, s) - a).cwiseAbs().maxCoeff() < 1e-15);

  const auto ident = DiffusionSchedule::from_alphas({0.5, 1.0});
  for (const auto& k : kinds(3)) {
    for (int et = 0; et < 3; ++et) {
      const Eigen::VectorXd p = posterior(et, Eigen::Vector3d(0.2, 0.5, 0.3), 2, k, ident);
      CHECK(std::abs(p(et) - 1.0) < 1e-12);
    }
  }
  CHECK_THROWS(posterior(3, a, 2, tm, s));
  // e_t = A is impossible when p0 puts no mass on A under absorbing noising
  CHECK_THROWS_AS(posterior(1, Eigen::Vector3d(1, 0, 0), 2, tm, s), std::domain_error);
}

TEST_CASE("posterior normalization and Bayes equivalence") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_schedule(8, rng);
    const int t = 1 + static_cast<int>(u(rng) * 8) % 8;
    for (int c : {2, 3, 5}) {
      for (const auto& tm : kinds(c)) {
        Eigen::VectorXd p0(c);
        for (int k = 0; k < c; ++k) p0(k) = u(rng) + 1e-3;
        p0 /= p0.sum();
        const int et = static_cast<int>(u(rng) * c) % c;
        const Eigen::VectorXd p = posterior(et, p0, t, tm, s);
        CHECK(std::abs(p.sum() - 1.0) < 1e-12);
        CHECK(p.minCoeff() >= 0.0);

        const int e0 = static_cast<int>(u(rng) * c) % c;
        if (cumulative_transition(tm, t, s)(e0, et) == 0.0) continue;
        const Eigen::VectorXd one_hot = Eigen::VectorXd::Unit(c, e0);
        CHECK((posterior(et, one_hot, t, tm, s) - bayes(et, e0, t, tm, s)).cwiseAbs().maxCoeff() < 1e-10);
      }
    }
  }
}

TEST_CASE("soft predictions mix the per-class posteriors") {
  const auto tm = TransitionModel::absorbing(2);
  const auto sched = DiffusionSchedule::from_alphas({0.5});
  // an edge absent at t = 1 came from a true edge with prob p0[1]; that edge is restored for sure
  const Eigen::VectorXd p = posterior(0, Eigen::Vector2d(0.5, 0.5), 1, tm, sched);
  CHECK(p(0) == doctest::Approx(0.5));
  CHECK(p(1) == doctest::Approx(0.5));
  // classes that cannot reach e_t drop out
  const auto tm3 = TransitionModel::absorbing(3);
  const Eigen::VectorXd q = posterior(1, Eigen::Vector3d(0.2, 0.5, 0.3), 1, tm3, sched);
  CHECK(q(1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(posterior(1, Eigen::Vector3d(0.5, 0.0, 0.5), 1, tm3, sched), std::domain_error);
}

TEST_CASE("row-wise posterior matches the single-pair form") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  const auto s = DiffusionSchedule::linear(20);
  const auto tm = TransitionModel::uniform(4);
  std::vector<std::uint8_t> et{0, 1, 2, 3, 1};
  MatrixX<double> p0(5, 4);
  for (int r = 0; r < 5; ++r)
    for (int k = 0; k < 4; ++k) p0(r, k) = u(rng);
  p0.array().colwise() /= p0.rowwise().sum().array();
  const auto rows = posterior_rows(et, p0, 9, tm, s);
  for (int r = 0; r < 5; ++r) {
    const Eigen::VectorXd single = posterior(et[static_cast<std::size_t>(r)], p0.row(r).transpose(), 9, tm, s);
    CHECK((rows.row(r).transpose() - single).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("cross-entropy") {
  std::vector<std::uint8_t> truth{0, 3, 1};
  MatrixX<double> sure = MatrixX<double>::Constant(3, 5, -200.0);
  for (int r = 0; r < 3; ++r) sure(r, truth[static_cast<std::size_t>(r)]) = 200.0;
  CHECK(cross_entropy(sure, truth) < 1e-12);
  CHECK(cross_entropy(MatrixX<double>::Zero(3, 5), truth) == doctest::Approx(std::log(5.0)).epsilon(1e-14));
  CHECK(std::abs(std::log(5.0) - 1.6094) < 1e-4);

  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  MatrixX<double> logits(3, 5);
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 5; ++k) logits(r, k) = nd(rng);
  double manual = 0.0;
  for (int r = 0; r < 3; ++r) {
    double z = 0.0;
    for (int k = 0; k < 5; ++k) z += std::exp(logits(r, k));
    manual -= logits(r, truth[static_cast<std::size_t>(r)]) - std::log(z);
  }
  CHECK(cross_entropy(logits, truth) == doctest::Approx(manual / 3.0).epsilon(1e-12));

  EdgeDenoiser model(EdgeDenoiserConfig{.classes = 5, .hidden = 8, .blocks = 1}, 1);
  for (auto& p : model.params().values()) p.setZero();
  const auto g = test::random_graph(6, 0.3, 4, rng);
  const PointCloud x = g.coords();
  CHECK(edge_ce_loss(model, EdgeState::from_graph(g, 5), x, 3, TransitionModel::absorbing(5),
                     DiffusionSchedule::linear(10), CounterRng(1)) == doctest::Approx(std::log(5.0)));
}

/* SPDX-License-Identifier: Apache-2.0 */
#include <doctest.h>

#include <functional>
#include <random>

#include "sgdiff/autodiff.hpp"

using namespace sgdiff;
using ad::Matrix;
using ad::Tape;
using ad::Var;

namespace {

using Fn = std::function<Var<double>(Tape<double>&, std::span<const Var<double>>)>;

Matrix<double> random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix<double> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  return m;
}

double evaluate(const ad::Parameters<double>& p, const Fn& f) {
  Tape<double> tape(false);
  const auto vars = tape.bind(p);
  return f(tape, vars).value()(0, 0);
}

// Central differences against the tape gradient, contracted with a random weight R.
void check_gradient(ad::Parameters<double> p, const std::function<Var<double>(std::span<const Var<double>>)>& op,
                    std::mt19937_64& rng, double tol = 1e-6) {
  Matrix<double> r;
  const Fn f = [&](Tape<double>& tape, std::span<const Var<double>> v) {
    Var<double> out = op(v);
    if (r.size() == 0) r = random_matrix(out.rows(), out.cols(), rng);
    return ad::sum(ad::mul(out, tape.constant(r)));
  };
  const auto [value, grads] = ad::value_and_grad(p, f);
  CHECK(value == doctest::Approx(evaluate(p, f)).epsilon(1e-12));
  const double h = 1e-6;
  for (int k = 0; k < p.size(); ++k) {
    for (Eigen::Index i = 0; i < p[k].size(); ++i) {
      const double keep = p[k].data()[i];
      p[k].data()[i] = keep + h;
      const double up = evaluate(p, f);
      p[k].data()[i] = keep - h;
      const double down = evaluate(p, f);
      p[k].data()[i] = keep;
      const double fd = (up - down) / (2 * h);
      CHECK(std::abs(fd - grads[static_cast<std::size_t>(k)].data()[i]) < tol * (1.0 + std::abs(fd)));
    }
  }
}

ad::Parameters<double> params(std::initializer_list<std::pair<Eigen::Index, Eigen::Index>> shapes,
                              std::mt19937_64& rng) {
  ad::Parameters<double> p;
  int k = 0;
  for (auto [r, c] : shapes) p.add("p" + std::to_string(k++), random_matrix(r, c, rng));
  return p;
}

}  // namespace

TEST_CASE("elementwise and matrix ops match finite differences") {
  std::mt19937_64 rng(1);
  check_gradient(params({{3, 4}, {4, 2}}, rng), [](auto v) { return ad::matmul(v[0], v[1]); }, rng);
  check_gradient(params({{3, 4}, {3, 4}}, rng), [](auto v) { return ad::add(v[0], v[1]); }, rng);
  check_gradient(params({{3, 4}, {3, 4}}, rng), [](auto v) { return ad::sub(v[0], v[1]); }, rng);
  check_gradient(params({{3, 4}, {3, 4}}, rng), [](auto v) { return ad::mul(v[0], v[1]); }, rng);
  check_gradient(params({{3, 4}}, rng), [](auto v) { return ad::scale(v[0], -1.7); }, rng);
  check_gradient(params({{3, 4}, {1, 4}}, rng), [](auto v) { return ad::add_row(v[0], v[1]); }, rng);
  check_gradient(params({{5, 3}, {3, 2}, {1, 2}}, rng), [](auto v) { return ad::affine(v[0], v[1], v[2]); }, rng);
  check_gradient(params({{4, 3}}, rng), [](auto v) { return ad::silu(v[0]); }, rng);
  check_gradient(params({{4, 3}}, rng), [](auto v) { return ad::tanh(v[0]); }, rng);
  check_gradient(params({{4, 2}, {4, 3}}, rng), [](auto v) { return ad::concat_cols({v[0], v[1], v[0]}); }, rng);
  check_gradient(params({{5, 3}}, rng), [](auto v) { return ad::mean_rows(v[0]); }, rng);
  check_gradient(params({{1, 3}}, rng), [](auto v) { return ad::broadcast_rows(v[0], 4); }, rng);
}

TEST_CASE("gather and pair ops match finite differences") {
  std::mt19937_64 rng(2);
  const std::vector<int> index{2, 0, 2, 1};
  check_gradient(params({{3, 2}}, rng), [&](auto v) { return ad::gather_rows(v[0], index); }, rng);
  const std::vector<int> first{0, 0, 0, 1, 1, 2};
  const std::vector<int> second{1, 2, 3, 2, 3, 3};
  check_gradient(params({{4, 3}}, rng), [&](auto v) { return ad::pair_sum(v[0], first, second); }, rng);
  check_gradient(params({{6, 3}}, rng), [&](auto v) { return ad::pair_mean_to_nodes(v[0], first, second, 4); },
                 rng);
}

TEST_CASE("losses") {
  std::mt19937_64 rng(3);
  const Matrix<double> target = random_matrix(3, 2, rng);
  check_gradient(params({{3, 2}}, rng), [&](auto v) { return ad::mse(v[0], target); }, rng);
  const std::vector<int> cls{0, 2, 1, 2};
  check_gradient(params({{4, 3}}, rng), [&](auto v) { return ad::softmax_cross_entropy(v[0], cls); }, rng);

  // sum of squares: gradient is 2x
  auto p = params({{3, 3}}, rng);
  const auto [value, grads] = ad::value_and_grad(
      p, [](Tape<double>&, std::span<const Var<double>> v) { return ad::sum(ad::mul(v[0], v[0])); });
  CHECK(value == doctest::Approx(p[0].squaredNorm()));
  CHECK((grads[0] - 2.0 * p[0]).cwiseAbs().maxCoeff() < 1e-14);

  // a loss that ignores the parameters has zero gradient
  const auto [c, zero] = ad::value_and_grad(
      p, [](Tape<double>& t, std::span<const Var<double>>) { return ad::sum(t.constant(Matrix<double>::Ones(2, 2))); });
  CHECK(c == 4.0);
  CHECK(zero[0].isZero(0.0));

  const Matrix<double> probs = ad::softmax_rows(random_matrix(4, 5, rng));
  CHECK((probs.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-14);
}

TEST_CASE("tape misuse") {
  Tape<double> eval(false);
  auto v = eval.constant(Matrix<double>::Ones(1, 1));
  CHECK_THROWS_AS(eval.backward(v), std::logic_error);
  Tape<double> rec(true);
  auto m = rec.leaf(Matrix<double>::Ones(2, 2), 0);
  CHECK_THROWS_AS(rec.backward(m), std::logic_error);
  auto bad = rec.leaf(Matrix<double>::Ones(2, 3), 1);
  CHECK_THROWS(ad::matmul(bad, bad));
}

/* SPDX-License-Identifier: Apache-2.0 */
// Matrix-level reverse-mode differentiation.
//
// A Tape records every operation applied to its variables; backward() walks
// the record in reverse and accumulates gradients. Parameters enter the tape
// through bind(), which tags each leaf with its slot in a Parameters set so
// gradients can be collected congruent to the parameters.
#pragma once

#include <cmath>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sgdiff::ad {

template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Named dense tensors; the unit of training and checkpointing.
template <typename S>
class Parameters {
 public:
  int add(std::string name, Matrix<S> value) {
    names_.push_back(std::move(name));
    values_.push_back(std::move(value));
    return static_cast<int>(values_.size()) - 1;
  }

  int size() const { return static_cast<int>(values_.size()); }
  const std::string& name(int slot) const { return names_.at(static_cast<std::size_t>(slot)); }
  Matrix<S>& operator[](int slot) { return values_[static_cast<std::size_t>(slot)]; }
  const Matrix<S>& operator[](int slot) const { return values_[static_cast<std::size_t>(slot)]; }
  std::vector<Matrix<S>>& values() { return values_; }
  const std::vector<Matrix<S>>& values() const { return values_; }

  std::size_t scalar_count() const {
    std::size_t total = 0;
    for (const auto& v : values_) total += static_cast<std::size_t>(v.size());
    return total;
  }

  template <typename T>
  Parameters<T> cast() const {
    Parameters<T> out;
    for (std::size_t k = 0; k < values_.size(); ++k) out.add(names_[k], values_[k].template cast<T>());
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Matrix<S>> values_;
};

template <typename S>
class Tape;

template <typename S>
struct Var {
  Tape<S>* tape = nullptr;
  int id = -1;

  const Matrix<S>& value() const { return tape->value(*this); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

template <typename S>
class Tape {
 public:
  using Mat = Matrix<S>;
  using Backward = std::function<void(Tape&, const Mat&)>;

  /// With record = false the tape only evaluates; backward() is unavailable.
  explicit Tape(bool record = true) : record_(record) { nodes_.reserve(64); }

  bool recording() const { return record_; }

  Var<S> constant(Mat value) { return push(std::move(value), false, {}); }

  Var<S> leaf(Mat value, int slot) {
    auto v = push(std::move(value), record_, {});
    nodes_.back().slot = slot;
    return v;
  }

  /// Leaves for every tensor of `params`, in slot order.
  std::vector<Var<S>> bind(const Parameters<S>& params) {
    std::vector<Var<S>> out;
    out.reserve(static_cast<std::size_t>(params.size()));
    for (int k = 0; k < params.size(); ++k) out.push_back(leaf(params[k], k));
    return out;
  }

  const Mat& value(Var<S> v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  bool needs_grad(Var<S> v) const { return nodes_[static_cast<std::size_t>(v.id)].needs_grad; }

  /// Records a result. `backward` is kept only when some input needs a gradient.
  Var<S> push(Mat value, bool needs_grad, Backward backward) {
    Node node;
    node.value = std::move(value);
    node.needs_grad = record_ && needs_grad;
    if (node.needs_grad) node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Var<S>{this, static_cast<int>(nodes_.size()) - 1};
  }

  template <typename Expr>
  void accumulate(Var<S> v, const Expr& delta) {
    auto& node = nodes_[static_cast<std::size_t>(v.id)];
    if (!node.needs_grad) return;
    if (node.grad.size() == 0) {
      node.grad = delta;
    } else {
      node.grad += delta;
    }
  }

  void backward(Var<S> loss) {
    if (!record_) throw std::logic_error("backward() on a non-recording tape");
    if (value(loss).size() != 1) throw std::logic_error("backward() needs a scalar loss");
    auto& root = nodes_[static_cast<std::size_t>(loss.id)];
    if (!root.needs_grad) return;
    root.grad = Mat::Ones(1, 1);
    for (int id = loss.id; id >= 0; --id) {
      auto& node = nodes_[static_cast<std::size_t>(id)];
      if (!node.backward || node.grad.size() == 0) continue;
      node.backward(*this, node.grad);
    }
  }

  Mat grad(Var<S> v) const {
    const auto& node = nodes_[static_cast<std::size_t>(v.id)];
    if (node.grad.size() == 0) return Mat::Zero(node.value.rows(), node.value.cols());
    return node.grad;
  }

  /// Gradients of every bound parameter slot; unused slots are zero.
  std::vector<Mat> parameter_grads(const Parameters<S>& params) const {
    std::vector<Mat> out;
    for (int k = 0; k < params.size(); ++k) out.push_back(Mat::Zero(params[k].rows(), params[k].cols()));
    for (const auto& node : nodes_) {
      if (node.slot >= 0 && node.grad.size() != 0) out[static_cast<std::size_t>(node.slot)] += node.grad;
    }
    return out;
  }

 private:
  struct Node {
    Mat value;
    Mat grad;
    Backward backward;
    int slot = -1;
    bool needs_grad = false;
  };

  bool record_;
  std::vector<Node> nodes_;
};

namespace detail {

template <typename S>
void require(bool ok, const char* op, const Var<S>& a) {
  if (!ok) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch at " + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()));
  }
}

}  // namespace detail

template <typename S>
Var<S> matmul(Var<S> a, Var<S> b) {
  detail::require(a.cols() == b.rows(), "matmul", a);
  auto& tape = *a.tape;
  Matrix<S> out = a.value() * b.value();
  return tape.push(std::move(out), tape.needs_grad(a) || tape.needs_grad(b),
                   [a, b](Tape<S>& t, const Matrix<S>& g) {
                     if (t.needs_grad(a)) t.accumulate(a, g * t.value(b).transpose());
                     if (t.needs_grad(b)) t.accumulate(b, t.value(a).transpose() * g);
                   });
}

template <typename S>
Var<S> add(Var<S> a, Var<S> b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "add", a);
  auto& tape = *a.tape;
  return tape.push(a.value() + b.value(), tape.needs_grad(a) || tape.needs_grad(b),
                   [a, b](Tape<S>& t, const Matrix<S>& g) {
                     t.accumulate(a, g);
                     t.accumulate(b, g);
                   });
}

template <typename S>
Var<S> sub(Var<S> a, Var<S> b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "sub", a);
  auto& tape = *a.tape;
  return tape.push(a.value() - b.value(), tape.needs_grad(a) || tape.needs_grad(b),
                   [a, b](Tape<S>& t, const Matrix<S>& g) {
                     t.accumulate(a, g);
                     t.accumulate(b, -g);
                   });
}

template <typename S>
Var<S> operator+(Var<S> a, Var<S> b) {
  return add(a, b);
}

template <typename S>
Var<S> operator-(Var<S> a, Var<S> b) {
  return sub(a, b);
}

/// Elementwise product.
template <typename S>
Var<S> mul(Var<S> a, Var<S> b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "mul", a);
  auto& tape = *a.tape;
  Matrix<S> out = a.value().cwiseProduct(b.value());
  return tape.push(std::move(out), tape.needs_grad(a) || tape.needs_grad(b),
                   [a, b](Tape<S>& t, const Matrix<S>& g) {
                     if (t.needs_grad(a)) t.accumulate(a, g.cwiseProduct(t.value(b)));
                     if (t.needs_grad(b)) t.accumulate(b, g.cwiseProduct(t.value(a)));
                   });
}

template <typename S>
Var<S> scale(Var<S> a, S factor) {
  auto& tape = *a.tape;
  return tape.push(a.value() * factor, tape.needs_grad(a),
                   [a, factor](Tape<S>& t, const Matrix<S>& g) { t.accumulate(a, g * factor); });
}

/// a + row, with the 1xk row broadcast over every row of a.
template <typename S>
Var<S> add_row(Var<S> a, Var<S> row) {
  detail::require(row.rows() == 1 && row.cols() == a.cols(), "add_row", row);
  auto& tape = *a.tape;
  Matrix<S> out = a.value().rowwise() + row.value().row(0);
  return tape.push(std::move(out), tape.needs_grad(a) || tape.needs_grad(row),
                   [a, row](Tape<S>& t, const Matrix<S>& g) {
                     t.accumulate(a, g);
                     if (t.needs_grad(row)) t.accumulate(row, g.colwise().sum());
                   });
}

/// x * weight + bias.
template <typename S>
Var<S> affine(Var<S> x, Var<S> weight, Var<S> bias) {
  return add_row(matmul(x, weight), bias);
}

template <typename S>
Var<S> silu(Var<S> a) {
  auto& tape = *a.tape;
  const auto& x = a.value().array();
  Matrix<S> sig = (S(1) + (-x).exp()).inverse().matrix();
  Matrix<S> out = (x * sig.array()).matrix();
  return tape.push(std::move(out), tape.needs_grad(a),
                   [a, sig = std::move(sig)](Tape<S>& t, const Matrix<S>& g) {
                     const auto& xv = t.value(a).array();
                     const auto s = sig.array();
                     t.accumulate(a, (g.array() * s * (S(1) + xv * (S(1) - s))).matrix());
                   });
}

template <typename S>
Var<S> tanh(Var<S> a) {
  auto& tape = *a.tape;
  Matrix<S> out = a.value().array().tanh().matrix();
  return tape.push(out, tape.needs_grad(a), [a, out](Tape<S>& t, const Matrix<S>& g) {
    t.accumulate(a, (g.array() * (S(1) - out.array().square())).matrix());
  });
}

template <typename S>
Var<S> concat_cols(std::initializer_list<Var<S>> parts) {
  std::vector<Var<S>> list(parts);
  auto& tape = *list.front().tape;
  const Eigen::Index rows = list.front().rows();
  Eigen::Index cols = 0;
  bool needs = false;
  for (const auto& p : list) {
    detail::require(p.rows() == rows, "concat_cols", p);
    cols += p.cols();
    needs = needs || tape.needs_grad(p);
  }
  Matrix<S> out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : list) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return tape.push(std::move(out), needs, [list](Tape<S>& t, const Matrix<S>& g) {
    Eigen::Index offset = 0;
    for (const auto& p : list) {
      if (t.needs_grad(p)) t.accumulate(p, g.middleCols(offset, p.cols()));
      offset += p.cols();
    }
  });
}

/// out.row(r) = a.row(index[r]).
template <typename S>
Var<S> gather_rows(Var<S> a, std::span<const int> index) {
  auto& tape = *a.tape;
  const auto& src = a.value();
  Matrix<S> out(static_cast<Eigen::Index>(index.size()), src.cols());
  for (std::size_t r = 0; r < index.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = src.row(index[r]);
  std::vector<int> idx(index.begin(), index.end());
  return tape.push(std::move(out), tape.needs_grad(a), [a, idx = std::move(idx)](Tape<S>& t, const Matrix<S>& g) {
    Matrix<S> delta = Matrix<S>::Zero(t.value(a).rows(), t.value(a).cols());
    for (std::size_t r = 0; r < idx.size(); ++r) delta.row(idx[r]) += g.row(static_cast<Eigen::Index>(r));
    t.accumulate(a, delta);
  });
}

/// out.row(p) = a.row(first[p]) + a.row(second[p]); symmetric pair readout.
/// The index spans must outlive the tape.
template <typename S>
Var<S> pair_sum(Var<S> a, std::span<const int> first, std::span<const int> second) {
  auto& tape = *a.tape;
  const auto& src = a.value();
  const auto pairs = static_cast<Eigen::Index>(first.size());
  Matrix<S> out(pairs, src.cols());
  for (Eigen::Index p = 0; p < pairs; ++p) {
    out.row(p) = src.row(first[static_cast<std::size_t>(p)]) + src.row(second[static_cast<std::size_t>(p)]);
  }
  return tape.push(std::move(out), tape.needs_grad(a),
                   [a, first, second](Tape<S>& t, const Matrix<S>& g) {
                     Matrix<S> delta = Matrix<S>::Zero(t.value(a).rows(), t.value(a).cols());
                     for (std::size_t p = 0; p < first.size(); ++p) {
                       const auto row = g.row(static_cast<Eigen::Index>(p));
                       delta.row(first[p]) += row;
                       delta.row(second[p]) += row;
                     }
                     t.accumulate(a, delta);
                   });
}

/// Node-level mean of pair rows: out.row(v) = sum of rows of pairs touching v / (n - 1).
template <typename S>
Var<S> pair_mean_to_nodes(Var<S> pairs, std::span<const int> first, std::span<const int> second, int nodes) {
  auto& tape = *pairs.tape;
  const auto& src = pairs.value();
  const S inv = nodes > 1 ? S(1) / S(nodes - 1) : S(0);
  Matrix<S> out = Matrix<S>::Zero(nodes, src.cols());
  for (std::size_t p = 0; p < first.size(); ++p) {
    const auto row = src.row(static_cast<Eigen::Index>(p));
    out.row(first[p]) += row;
    out.row(second[p]) += row;
  }
  out *= inv;
  return tape.push(std::move(out), tape.needs_grad(pairs),
                   [pairs, first, second, inv](Tape<S>& t, const Matrix<S>& g) {
                     Matrix<S> delta(static_cast<Eigen::Index>(first.size()), g.cols());
                     for (std::size_t p = 0; p < first.size(); ++p) {
                       delta.row(static_cast<Eigen::Index>(p)) = (g.row(first[p]) + g.row(second[p])) * inv;
                     }
                     t.accumulate(pairs, delta);
                   });
}

/// Column means as a 1xk row.
template <typename S>
Var<S> mean_rows(Var<S> a) {
  auto& tape = *a.tape;
  const auto rows = a.rows();
  Matrix<S> out = a.value().colwise().mean();
  return tape.push(std::move(out), tape.needs_grad(a), [a, rows](Tape<S>& t, const Matrix<S>& g) {
    t.accumulate(a, g.replicate(rows, 1) / S(rows));
  });
}

/// Repeats a 1xk row n times.
template <typename S>
Var<S> broadcast_rows(Var<S> row, Eigen::Index n) {
  detail::require(row.rows() == 1, "broadcast_rows", row);
  auto& tape = *row.tape;
  Matrix<S> out = row.value().replicate(n, 1);
  return tape.push(std::move(out), tape.needs_grad(row),
                   [row](Tape<S>& t, const Matrix<S>& g) { t.accumulate(row, g.colwise().sum()); });
}

template <typename S>
Var<S> sum(Var<S> a) {
  auto& tape = *a.tape;
  Matrix<S> out(1, 1);
  out(0, 0) = a.value().sum();
  return tape.push(std::move(out), tape.needs_grad(a), [a](Tape<S>& t, const Matrix<S>& g) {
    t.accumulate(a, Matrix<S>::Constant(t.value(a).rows(), t.value(a).cols(), g(0, 0)));
  });
}

/// mean((a - target)^2) over all entries, as a 1x1 value.
template <typename S>
Var<S> mse(Var<S> a, const Matrix<S>& target) {
  detail::require(a.rows() == target.rows() && a.cols() == target.cols(), "mse", a);
  auto& tape = *a.tape;
  Matrix<S> diff = a.value() - target;
  const S count = S(diff.size());
  Matrix<S> out(1, 1);
  out(0, 0) = diff.squaredNorm() / count;
  return tape.push(std::move(out), tape.needs_grad(a),
                   [a, diff = std::move(diff), count](Tape<S>& t, const Matrix<S>& g) {
                     t.accumulate(a, diff * (S(2) * g(0, 0) / count));
                   });
}

/// Row-wise softmax (evaluation only; not differentiated).
template <typename S>
Matrix<S> softmax_rows(const Matrix<S>& logits) {
  Matrix<S> out = logits.colwise() - logits.rowwise().maxCoeff();
  out = out.array().exp().matrix();
  out.array().colwise() /= out.rowwise().sum().array();
  return out;
}

/// Mean over rows of -log softmax(logits)[row, target[row]], with each
/// log-probability clamped below at log(floor).
template <typename S>
Var<S> softmax_cross_entropy(Var<S> logits, std::span<const int> target, double floor = 1e-30) {
  detail::require(static_cast<std::size_t>(logits.rows()) == target.size(), "softmax_cross_entropy", logits);
  auto& tape = *logits.tape;
  const auto& z = logits.value();
  const Eigen::Index rows = z.rows();
  Matrix<S> prob = z.colwise() - z.rowwise().maxCoeff();
  prob = prob.array().exp().matrix();
  Eigen::Matrix<S, Eigen::Dynamic, 1> norm = prob.rowwise().sum();
  prob.array().colwise() /= norm.array();
  const S log_floor = static_cast<S>(std::log(floor));
  std::vector<char> clamped(static_cast<std::size_t>(rows), 0);
  S total = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const int k = target[static_cast<std::size_t>(r)];
    const S zmax = z.row(r).maxCoeff();
    S lp = z(r, k) - zmax - std::log(norm(r));
    if (lp < log_floor) {
      lp = log_floor;
      clamped[static_cast<std::size_t>(r)] = 1;
    }
    total -= lp;
  }
  Matrix<S> out(1, 1);
  out(0, 0) = total / S(rows);
  std::vector<int> tgt(target.begin(), target.end());
  return tape.push(std::move(out), tape.needs_grad(logits),
                   [logits, prob = std::move(prob), tgt = std::move(tgt), clamped = std::move(clamped)](
                       Tape<S>& t, const Matrix<S>& g) {
                     Matrix<S> delta = prob;
                     for (std::size_t r = 0; r < tgt.size(); ++r) {
                       if (clamped[r]) {
                         delta.row(static_cast<Eigen::Index>(r)).setZero();
                       } else {
                         delta(static_cast<Eigen::Index>(r), tgt[r]) -= S(1);
                       }
                     }
                     t.accumulate(logits, delta * (g(0, 0) / S(tgt.size())));
                   });
}

/// Gradient of a scalar function of `params`, evaluated on a fresh tape.
template <typename S, typename LossFn>
std::pair<S, std::vector<Matrix<S>>> value_and_grad(const Parameters<S>& params, LossFn&& loss_fn) {
  Tape<S> tape(true);
  const auto vars = tape.bind(params);
  Var<S> loss = loss_fn(tape, std::span<const Var<S>>(vars));
  const S value = loss.value()(0, 0);
  tape.backward(loss);
  return {value, tape.parameter_grads(params)};
}

}  // namespace sgdiff::ad

/* SPDX-License-Identifier: Apache-2.0 */
#include "sgdiff/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sgdiff {

namespace {

ad::Matrix<double> glorot(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(rows)));
  ad::Matrix<double> m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = normal(rng);
  return m;
}

ad::Matrix<double> zeros(int rows, int cols) { return ad::Matrix<double>::Zero(rows, cols); }

template <typename S>
void require_finite(const MatrixX<S>& m, const char* where) {
  if (!m.allFinite()) throw std::runtime_error(std::string(where) + ": non-finite activation");
}

}  // namespace

PairIndex::PairIndex(int n) : nodes(n) {
  first.reserve(count(n));
  second.reserve(count(n));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      first.push_back(i);
      second.push_back(j);
    }
  }
}

std::size_t PairIndex::index(int n, int i, int j) {
  if (i > j) std::swap(i, j);
  const auto a = static_cast<std::size_t>(i);
  return a * (2 * static_cast<std::size_t>(n) - a - 1) / 2 + static_cast<std::size_t>(j - i - 1);
}

// ---------------------------------------------------------------------------
// Coordinate noise predictor

CoordDenoiser::CoordDenoiser(const CoordDenoiserConfig& config, std::uint64_t seed) : config_(config) {
  std::mt19937_64 rng(seed);
  const int h = config.hidden;
  const int in = 3 + kTimeEmbedDim;
  const int local = static_cast<int>(config.bandwidths.size()) * (h + 4);
  params_.add("coord.enc.w", glorot(rng, in, h));
  params_.add("coord.enc.b", zeros(1, h));
  params_.add("coord.l1.w", glorot(rng, in + h + local, h));
  params_.add("coord.l1.b", zeros(1, h));
  params_.add("coord.l2.w", glorot(rng, h, h));
  params_.add("coord.l2.b", zeros(1, h));
  params_.add("coord.out.w", glorot(rng, h, 3) * 0.1);
  params_.add("coord.out.b", zeros(1, 3));
}

template <typename S>
MatrixX<S> neighbour_weights(const MatrixX<S>& x, double bandwidth) {
  const auto n = x.rows();
  const S scale = static_cast<S>(-0.5 / (bandwidth * bandwidth));
  const Eigen::Matrix<S, Eigen::Dynamic, 1> sq = x.rowwise().squaredNorm();
  MatrixX<S> k = x * x.transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    S total = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const S d2 = std::max(S(0), sq(i) + sq(j) - 2 * k(i, j));
      k(i, j) = i == j ? S(0) : std::exp(scale * d2);
    }
    for (Eigen::Index j = 0; j < n; ++j) total += k(i, j);
    k.row(i) /= S(1) + total;
  }
  return k;
}

template <typename S>
ad::Var<S> CoordDenoiser::forward(ad::Tape<S>& tape, std::span<const ad::Var<S>> w, const MatrixX<S>& xt, int t,
                                  int steps) const {
  if (xt.cols() != 3) throw std::invalid_argument("coord denoiser expects n x 3 input");
  const auto n = xt.rows();
  auto x = tape.constant(xt);
  auto tau = tape.constant(time_embedding<S>(t, steps).replicate(n, 1));
  auto base = ad::concat_cols({x, tau});
  auto enc = ad::silu(ad::affine(base, w[0], w[1]));
  auto ctx = ad::broadcast_rows(ad::mean_rows(enc), n);
  auto features = ad::concat_cols({x, tau, ctx});
  for (double bw : config_.bandwidths) {
    const MatrixX<S> k = neighbour_weights<S>(xt, bw);
    const MatrixX<S> mass = k.rowwise().sum();
    MatrixX<S> geo(n, 4);
    geo.leftCols(3) = k * xt - (xt.array().colwise() * mass.col(0).array()).matrix();
    geo.col(3) = mass.col(0);
    features = ad::concat_cols({features, tape.constant(std::move(geo)), ad::matmul(tape.constant(k), enc)});
  }
  auto h1 = ad::silu(ad::affine(features, w[2], w[3]));
  auto h2 = ad::silu(ad::affine(h1, w[4], w[5]));
  auto out = ad::affine(h2, w[6], w[7]);
  require_finite(out.value(), "coord denoiser");
  return out;
}

namespace {

template <typename S>
void silu_inplace(MatrixX<S>& m) {
  m.array() = m.array() / (S(1) + (-m.array()).exp());
}

template <typename S>
MatrixX<S> dense(const MatrixX<S>& in, const MatrixX<S>& w, const MatrixX<S>& b, bool act) {
  MatrixX<S> out = in * w;
  out.rowwise() += b.row(0);
  if (act) silu_inplace(out);
  return out;
}

}  // namespace

// Same graph as forward() without the tape.
template <typename S>
MatrixX<S> CoordDenoiser::predict(const ad::Parameters<S>& w, const MatrixX<S>& xt, int t, int steps) const {
  if (xt.cols() != 3) throw std::invalid_argument("coord denoiser expects n x 3 input");
  const auto n = xt.rows();
  const auto h = w[0].cols();
  const auto b = static_cast<Eigen::Index>(config_.bandwidths.size());
  const Eigen::Index base = 3 + kTimeEmbedDim;
  MatrixX<S> features(n, base + h + b * (h + 4));
  features.leftCols(3) = xt;
  features.middleCols(3, kTimeEmbedDim) = time_embedding<S>(t, steps).replicate(n, 1);
  const MatrixX<S> enc = dense<S>(features.leftCols(base), w[0], w[1], true);
  features.middleCols(base, h) = enc.colwise().mean().replicate(n, 1);
  Eigen::Index col = base + h;
  for (double bw : config_.bandwidths) {
    const MatrixX<S> k = neighbour_weights<S>(xt, bw);
    const auto mass = k.rowwise().sum().eval();
    features.middleCols(col, 3) = k * xt - (xt.array().colwise() * mass.array()).matrix();
    features.col(col + 3) = mass;
    features.middleCols(col + 4, h).noalias() = k * enc;
    col += h + 4;
  }
  const MatrixX<S> h1 = dense<S>(features, w[2], w[3], true);
  const MatrixX<S> h2 = dense<S>(h1, w[4], w[5], true);
  MatrixX<S> out = dense<S>(h2, w[6], w[7], false);
  require_finite(out, "coord denoiser");
  return out;
}

// ---------------------------------------------------------------------------
// Edge class predictor

template <typename S>
MatrixX<S> pair_geometry(const MatrixX<S>& coords, const PairIndex& pairs) {
  constexpr double kSpacing = 0.125;
  MatrixX<S> out(static_cast<Eigen::Index>(pairs.size()), kPairGeometryDim);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto r = static_cast<Eigen::Index>(p);
    const S d = (coords.row(pairs.first[p]) - coords.row(pairs.second[p])).norm();
    out(r, 0) = d;
    for (int k = 1; k < kPairGeometryDim; ++k) {
      const double z = (static_cast<double>(d) - (k - 1) * kSpacing) / kSpacing;
      out(r, k) = static_cast<S>(std::exp(-z * z));
    }
  }
  return out;
}

EdgeDenoiser::EdgeDenoiser(const EdgeDenoiserConfig& config, std::uint64_t seed) : config_(config) {
  if (config.classes < 2) throw std::invalid_argument("edge denoiser needs at least two classes");
  if (config.blocks < 0 || config.hidden < 1) throw std::invalid_argument("bad edge denoiser shape");
  std::mt19937_64 rng(seed);
  build(rng);
}

void EdgeDenoiser::build(std::mt19937_64& rng) {
  const int h = config_.hidden;
  const int c = config_.classes;
  input_weight_ = params_.add("edge.in.w", glorot(rng, 3 + kTimeEmbedDim + kDegreeDim, h));
  input_bias_ = params_.add("edge.in.b", zeros(1, h));
  for (int l = 0; l <= config_.blocks; ++l) {
    const std::string tag = l < config_.blocks ? "edge.block" + std::to_string(l) : std::string("edge.head");
    Layer layer{};
    layer.node_proj = params_.add(tag + ".node", glorot(rng, h, h));
    layer.class_embed = params_.add(tag + ".class", glorot(rng, c, h));
    layer.geometry = params_.add(tag + ".geom", glorot(rng, kPairGeometryDim, h));
    layer.bias = params_.add(tag + ".b", zeros(1, h));
    pair_layers_.push_back(layer);
    if (l < config_.blocks) {
      NodeUpdate upd{};
      upd.weight = params_.add(tag + ".update.w", glorot(rng, 2 * h, h));
      upd.bias = params_.add(tag + ".update.b", zeros(1, h));
      node_updates_.push_back(upd);
    }
  }
  out_weight_ = params_.add("edge.out.w", glorot(rng, h, c));
  out_bias_ = params_.add("edge.out.b", zeros(1, c));
}

template <typename S>
MatrixX<S> degree_features(std::span<const std::uint8_t> classes, const PairIndex& pairs) {
  std::vector<int> deg(static_cast<std::size_t>(pairs.nodes), 0);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    if (classes[p] == 0) continue;
    ++deg[static_cast<std::size_t>(pairs.first[p])];
    ++deg[static_cast<std::size_t>(pairs.second[p])];
  }
  MatrixX<S> out = MatrixX<S>::Zero(pairs.nodes, kDegreeDim);
  for (int i = 0; i < pairs.nodes; ++i) out(i, std::min(deg[static_cast<std::size_t>(i)], kDegreeDim - 1)) = S(1);
  return out;
}

template <typename S>
ad::Var<S> EdgeDenoiser::forward(ad::Tape<S>& tape, std::span<const ad::Var<S>> w,
                                 std::span<const std::uint8_t> classes, const MatrixX<S>& coords,
                                 const PairIndex& pairs, const MatrixX<S>& geometry, int t, int steps) const {
  const auto n = coords.rows();
  if (coords.cols() != 3 || pairs.nodes != n || classes.size() != pairs.size() ||
      static_cast<std::size_t>(geometry.rows()) != pairs.size()) {
    throw std::invalid_argument("edge denoiser: inconsistent input shapes");
  }
  std::vector<int> cls(classes.size());
  for (std::size_t p = 0; p < classes.size(); ++p) {
    cls[p] = classes[p];
    if (cls[p] >= config_.classes) throw std::invalid_argument("edge denoiser: class index out of range");
  }
  auto x = tape.constant(coords);
  auto tau = tape.constant(time_embedding<S>(t, steps).replicate(n, 1));
  auto geo = tape.constant(geometry);
  auto deg = tape.constant(degree_features<S>(classes, pairs));
  auto node = ad::silu(ad::affine(ad::concat_cols({x, tau, deg}), w[static_cast<std::size_t>(input_weight_)],
                                  w[static_cast<std::size_t>(input_bias_)]));

  auto pair_layer = [&](const Layer& layer, ad::Var<S> h) {
    auto proj = ad::matmul(h, w[static_cast<std::size_t>(layer.node_proj)]);
    auto pre = ad::pair_sum(proj, std::span<const int>(pairs.first), std::span<const int>(pairs.second));
    pre = pre + ad::gather_rows(w[static_cast<std::size_t>(layer.class_embed)], std::span<const int>(cls));
    pre = pre + ad::matmul(geo, w[static_cast<std::size_t>(layer.geometry)]);
    return ad::silu(ad::add_row(pre, w[static_cast<std::size_t>(layer.bias)]));
  };

  for (int l = 0; l < config_.blocks; ++l) {
    const auto& upd = node_updates_[static_cast<std::size_t>(l)];
    auto pair = pair_layer(pair_layers_[static_cast<std::size_t>(l)], node);
    auto agg = ad::pair_mean_to_nodes(pair, std::span<const int>(pairs.first), std::span<const int>(pairs.second),
                                      static_cast<int>(n));
    node = node + ad::silu(ad::affine(ad::concat_cols({node, agg}), w[static_cast<std::size_t>(upd.weight)],
                                      w[static_cast<std::size_t>(upd.bias)]));
  }
  auto head = pair_layer(pair_layers_.back(), node);
  auto logits = ad::affine(head, w[static_cast<std::size_t>(out_weight_)], w[static_cast<std::size_t>(out_bias_)]);
  require_finite(logits.value(), "edge denoiser");
  return logits;
}

template <typename S>
MatrixX<S> EdgeDenoiser::predict(const ad::Parameters<S>& w, std::span<const std::uint8_t> classes,
                                 const MatrixX<S>& coords, const PairIndex& pairs, const MatrixX<S>& geometry, int t,
                                 int steps) const {
  ad::Tape<S> tape(false);
  const auto vars = tape.bind(w);
  return ad::softmax_rows<S>(forward<S>(tape, vars, classes, coords, pairs, geometry, t, steps).value());
}

MatrixX<double> EdgeDenoiser::predict(std::span<const std::uint8_t> classes, const MatrixX<double>& coords, int t,
                                      int steps) const {
  const PairIndex pairs(static_cast<int>(coords.rows()));
  return predict<double>(params_, classes, coords, pairs, pair_geometry<double>(coords, pairs), t, steps);
}

template <typename S>
EdgeInference<S>::EdgeInference(const EdgeDenoiser& model, const MatrixX<S>& coords)
    : model_(&model),
      w_(model.params().template cast<S>()),
      coords_(coords),
      pairs_(static_cast<int>(coords.rows())) {
  const MatrixX<S> geometry = pair_geometry<S>(coords_, pairs_);
  for (const auto& layer : model.pair_layers_) {
    MatrixX<S> term = geometry * w_[layer.geometry];
    term.rowwise() += w_[layer.bias].row(0);
    geometry_terms_.push_back(std::move(term));
  }
}

template <typename S>
void EdgeInference<S>::pair_layer(std::size_t layer, const MatrixX<S>& node, std::span<const std::uint8_t> classes) {
  const auto& spec = model_->pair_layers_[layer];
  proj_.noalias() = node * w_[spec.node_proj];
  const auto& embed = w_[spec.class_embed];
  const auto& geo = geometry_terms_[layer];
  const auto h = proj_.cols();
  pair_.resize(static_cast<Eigen::Index>(pairs_.size()), h);
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const S* a = proj_.row(pairs_.first[p]).data();
    const S* b = proj_.row(pairs_.second[p]).data();
    const S* e = embed.row(classes[p]).data();
    const S* g = geo.row(static_cast<Eigen::Index>(p)).data();
    S* out = pair_.row(static_cast<Eigen::Index>(p)).data();
    for (Eigen::Index k = 0; k < h; ++k) out[k] = a[k] + b[k] + e[k] + g[k];
  }
  silu_inplace(pair_);
}

template <typename S>
const MatrixX<S>& EdgeInference<S>::predict(std::span<const std::uint8_t> classes, int t, int steps) {
  if (classes.size() != pairs_.size()) throw std::invalid_argument("edge inference: class count mismatch");
  const int c = model_->config_.classes;
  for (auto cls : classes) {
    if (cls >= c) throw std::invalid_argument("edge denoiser: class index out of range");
  }
  const auto n = coords_.rows();
  MatrixX<S> input(n, 3 + kTimeEmbedDim + kDegreeDim);
  input.leftCols(3) = coords_;
  input.middleCols(3, kTimeEmbedDim) = time_embedding<S>(t, steps).replicate(n, 1);
  input.rightCols(kDegreeDim) = degree_features<S>(classes, pairs_);
  MatrixX<S> node = input * w_[model_->input_weight_];
  node.rowwise() += w_[model_->input_bias_].row(0);
  silu_inplace(node);

  const S inv = n > 1 ? S(1) / static_cast<S>(n - 1) : S(0);
  MatrixX<S> joined(n, 2 * node.cols());
  for (std::size_t l = 0; l < model_->node_updates_.size(); ++l) {
    pair_layer(l, node, classes);
    agg_.setZero(n, pair_.cols());
    for (std::size_t p = 0; p < pairs_.size(); ++p) {
      const auto row = pair_.row(static_cast<Eigen::Index>(p));
      agg_.row(pairs_.first[p]) += row;
      agg_.row(pairs_.second[p]) += row;
    }
    const auto& upd = model_->node_updates_[l];
    joined.leftCols(node.cols()) = node;
    joined.rightCols(node.cols()) = agg_ * inv;
    MatrixX<S> delta = joined * w_[upd.weight];
    delta.rowwise() += w_[upd.bias].row(0);
    silu_inplace(delta);
    node += delta;
  }
  pair_layer(model_->pair_layers_.size() - 1, node, classes);
  probs_.noalias() = pair_ * w_[model_->out_weight_];
  probs_.rowwise() += w_[model_->out_bias_].row(0);
  require_finite(probs_, "edge denoiser");
  probs_ = ad::softmax_rows<S>(probs_);
  return probs_;
}

template class EdgeInference<float>;
template class EdgeInference<double>;

// ---------------------------------------------------------------------------
// AdamW

AdamW::AdamW(const ad::Parameters<double>& params, AdamWConfig config) : config_(config) {
  for (const auto& p : params.values()) {
    m_.push_back(MatrixX<double>::Zero(p.rows(), p.cols()));
    v_.push_back(MatrixX<double>::Zero(p.rows(), p.cols()));
  }
}

void AdamW::step(ad::Parameters<double>& params, const std::vector<MatrixX<double>>& grads) {
  if (grads.size() != m_.size()) throw std::invalid_argument("AdamW: gradient set does not match parameters");
  ++step_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (std::size_t k = 0; k < grads.size(); ++k) {
    auto& p = params.values()[k];
    const auto& g = grads[k];
    m_[k] = config_.beta1 * m_[k] + (1.0 - config_.beta1) * g;
    v_[k] = config_.beta2 * v_[k] + (1.0 - config_.beta2) * g.cwiseProduct(g);
    p *= 1.0 - config_.lr * config_.weight_decay;
    p.array() -= config_.lr * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + config_.eps);
  }
}

template MatrixX<double> degree_features<double>(std::span<const std::uint8_t>, const PairIndex&);
template MatrixX<float> degree_features<float>(std::span<const std::uint8_t>, const PairIndex&);
template MatrixX<double> neighbour_weights<double>(const MatrixX<double>&, double);
template MatrixX<float> neighbour_weights<float>(const MatrixX<float>&, double);
template ad::Var<double> CoordDenoiser::forward<double>(ad::Tape<double>&, std::span<const ad::Var<double>>,
                                                        const MatrixX<double>&, int, int) const;
template ad::Var<float> CoordDenoiser::forward<float>(ad::Tape<float>&, std::span<const ad::Var<float>>,
                                                      const MatrixX<float>&, int, int) const;
template MatrixX<double> CoordDenoiser::predict<double>(const ad::Parameters<double>&, const MatrixX<double>&, int,
                                                        int) const;
template MatrixX<float> CoordDenoiser::predict<float>(const ad::Parameters<float>&, const MatrixX<float>&, int,
                                                      int) const;
template MatrixX<double> pair_geometry<double>(const MatrixX<double>&, const PairIndex&);
template MatrixX<float> pair_geometry<float>(const MatrixX<float>&, const PairIndex&);
template ad::Var<double> EdgeDenoiser::forward<double>(ad::Tape<double>&, std::span<const ad::Var<double>>,
                                                       std::span<const std::uint8_t>, const MatrixX<double>&,
                                                       const PairIndex&, const MatrixX<double>&, int, int) const;
template ad::Var<float> EdgeDenoiser::forward<float>(ad::Tape<float>&, std::span<const ad::Var<float>>,
                                                     std::span<const std::uint8_t>, const MatrixX<float>&,
                                                     const PairIndex&, const MatrixX<float>&, int, int) const;
template MatrixX<double> EdgeDenoiser::predict<double>(const ad::Parameters<double>&, std::span<const std::uint8_t>,
                                                       const MatrixX<double>&, const PairIndex&,
                                                       const MatrixX<double>&, int, int) const;
template MatrixX<float> EdgeDenoiser::predict<float>(const ad::Parameters<float>&, std::span<const std::uint8_t>,
                                                     const MatrixX<float>&, const PairIndex&, const MatrixX<float>&,
                                                     int, int) const;

}  // namespace sgdiff

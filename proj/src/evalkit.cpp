/* SPDX-License-Identifier: Apache-2.0 */
#include "sgdiff/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sgdiff {

GraphStats graph_stats(const SpatialGraph& g) {
  GraphStats s;
  const Index n = g.node_count();
  s.degrees.assign(static_cast<std::size_t>(n), 0);
  s.edge_count = static_cast<int>(g.edge_count());
  const auto& x = g.coords();
  for (const auto& e : g.edges()) {
    ++s.degrees[static_cast<std::size_t>(e.i)];
    ++s.degrees[static_cast<std::size_t>(e.j)];
    const double len = (x.row(e.j) - x.row(e.i)).norm();
    s.lengths.push_back(len);
    if (len == 0.0) ++s.zero_length_edges;
  }
  const int max_deg = s.degrees.empty() ? 0 : *std::max_element(s.degrees.begin(), s.degrees.end());
  s.degree_histogram.assign(static_cast<std::size_t>(max_deg) + 1, 0);
  for (int d : s.degrees) ++s.degree_histogram[static_cast<std::size_t>(d)];

  std::vector<Eigen::RowVector3d> dirs;
  for (Index v = 0; v < n; ++v) {
    dirs.clear();
    for (const auto& nb : g.incident(v)) {
      const Eigen::RowVector3d d = x.row(nb.node) - x.row(v);
      const double len = d.norm();
      if (len > 0.0) dirs.push_back(d / len);
    }
    for (std::size_t a = 0; a < dirs.size(); ++a) {
      for (std::size_t b = a + 1; b < dirs.size(); ++b) {
        const double c = std::clamp(dirs[a].dot(dirs[b]), -1.0, 1.0);
        s.angles.push_back(std::acos(c) * 180.0 / std::numbers::pi);
      }
    }
  }
  s.betti0 = static_cast<int>(betti0(g));
  s.betti1 = static_cast<int>(betti1(g));
  return s;
}

std::string to_string(Feature f) {
  switch (f) {
    case Feature::degree: return "degree";
    case Feature::edge_count: return "edge_count";
    case Feature::length: return "length";
    case Feature::angle: return "angle";
  }
  return "degree";
}

namespace {

std::vector<double> collect(std::span<const GraphStats> corpus, Feature f) {
  std::vector<double> out;
  for (const auto& s : corpus) {
    switch (f) {
      case Feature::degree: out.insert(out.end(), s.degrees.begin(), s.degrees.end()); break;
      case Feature::edge_count: out.push_back(s.edge_count); break;
      case Feature::length: out.insert(out.end(), s.lengths.begin(), s.lengths.end()); break;
      case Feature::angle: out.insert(out.end(), s.angles.begin(), s.angles.end()); break;
    }
  }
  return out;
}

std::vector<double> histogram(const std::vector<double>& values, double lo, double width, int bins) {
  std::vector<double> h(static_cast<std::size_t>(bins), 1.0);
  for (double v : values) {
    const double pos = width > 0.0 ? std::floor((v - lo) / width) : 0.0;
    const int b = static_cast<int>(std::clamp(pos, 0.0, static_cast<double>(bins - 1)));
    h[static_cast<std::size_t>(b)] += 1.0;
  }
  return h;
}

}  // namespace

double kl_feature(std::span<const GraphStats> reference, std::span<const GraphStats> generated, Feature feature,
                  int bins) {
  if (reference.empty() || generated.empty()) throw std::invalid_argument("kl_feature: empty corpus");
  if (bins < 1) throw std::invalid_argument("kl_feature: bins must be positive");
  const auto ref = collect(reference, feature);
  const auto gen = collect(generated, feature);
  double lo = 0.0;
  double hi = 0.0;
  if (!ref.empty()) {
    const auto [mn, mx] = std::minmax_element(ref.begin(), ref.end());
    lo = *mn;
    hi = *mx;
  }
  double width = 0.0;
  if (feature == Feature::degree || feature == Feature::edge_count) {
    lo = std::floor(lo);
    bins = static_cast<int>(std::floor(hi) - lo) + 1;
    width = 1.0;
  } else {
    width = (hi - lo) / bins;
  }
  const auto p = histogram(ref, lo, width, bins);
  const auto q = histogram(gen, lo, width, bins);
  const double ps = static_cast<double>(ref.size()) + bins;
  const double qs = static_cast<double>(gen.size()) + bins;
  double kl = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double pb = p[static_cast<std::size_t>(b)] / ps;
    const double qb = q[static_cast<std::size_t>(b)] / qs;
    kl += pb * std::log(pb / qb);
  }
  return std::max(kl, 0.0);
}

double validity_rate(std::span<const SpatialGraph> graphs, const OmegaMatrix* omega, bool forest) {
  if (graphs.empty()) return 100.0;
  std::size_t ok = 0;
  for (const auto& g : graphs) {
    bool valid = omega == nullptr || check_omega(g, *omega).empty();
    if (valid && forest) valid = betti1(g) == 0;
    ok += valid ? 1 : 0;
  }
  return 100.0 * static_cast<double>(ok) / static_cast<double>(graphs.size());
}

LinkPredictionScore link_pred_metrics(const SpatialGraph& predicted, const SpatialGraph& truth,
                                      const SpatialGraph& input) {
  const Index n = truth.node_count();
  if (predicted.node_count() != n || input.node_count() != n) {
    throw std::invalid_argument("link_pred_metrics: node sets differ");
  }
  int classes = 1;
  for (const auto* g : {&predicted, &truth, &input})
    for (const auto& e : g->edges()) classes = std::max(classes, e.label + 1);
  const auto c = static_cast<std::size_t>(classes);
  // confusion[truth][pred]
  std::vector<std::vector<std::size_t>> confusion(c, std::vector<std::size_t>(c, 0));
  LinkPredictionScore score;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (input.has_edge(i, j)) continue;
      const auto t = static_cast<std::size_t>(truth.label_of(i, j));
      const auto p = static_cast<std::size_t>(predicted.label_of(i, j));
      ++confusion[t][p];
      ++score.pairs;
    }
  }
  double recall_sum = 0.0;
  int recall_classes = 0;
  double f1_sum = 0.0;
  int f1_classes = 0;
  for (std::size_t k = 0; k < c; ++k) {
    std::size_t row = 0;
    std::size_t col = 0;
    for (std::size_t m = 0; m < c; ++m) {
      row += confusion[k][m];
      col += confusion[m][k];
    }
    const double tp = static_cast<double>(confusion[k][k]);
    if (row > 0) {
      recall_sum += tp / static_cast<double>(row);
      ++recall_classes;
    }
    if (row > 0 || col > 0) {
      f1_sum += 2.0 * tp / static_cast<double>(row + col);
      ++f1_classes;
    }
  }
  score.balanced_accuracy = recall_classes > 0 ? 100.0 * recall_sum / recall_classes : 0.0;
  score.macro_f1 = f1_classes > 0 ? f1_sum / f1_classes : 0.0;
  return score;
}

CorpusComparison compare_corpora(std::span<const SpatialGraph> reference, std::span<const SpatialGraph> generated,
                                 const OmegaMatrix* omega, bool forest, int bins) {
  std::vector<GraphStats> ref;
  std::vector<GraphStats> gen;
  for (const auto& g : reference) ref.push_back(graph_stats(g));
  for (const auto& g : generated) gen.push_back(graph_stats(g));
  CorpusComparison out;
  out.reference_size = ref.size();
  out.generated_size = gen.size();
  out.kl_degree = 1e3 * kl_feature(ref, gen, Feature::degree, bins);
  out.kl_edges = 1e3 * kl_feature(ref, gen, Feature::edge_count, bins);
  out.kl_length = 1e3 * kl_feature(ref, gen, Feature::length, bins);
  out.kl_angle = 1e3 * kl_feature(ref, gen, Feature::angle, bins);
  const auto mean = [](const std::vector<GraphStats>& v, int GraphStats::*field) {
    double total = 0.0;
    for (const auto& s : v) total += s.*field;
    return total / static_cast<double>(v.size());
  };
  out.betti0_diff = std::abs(mean(ref, &GraphStats::betti0) - mean(gen, &GraphStats::betti0));
  out.betti1_diff = std::abs(mean(ref, &GraphStats::betti1) - mean(gen, &GraphStats::betti1));
  out.validity = validity_rate(generated, omega, forest);
  return out;
}

json to_json(const CorpusComparison& c) {
  return json{{"kl_scale", 1e-3},
              {"deg", c.kl_degree},
              {"edges", c.kl_edges},
              {"length", c.kl_length},
              {"angle", c.kl_angle},
              {"betti0_mean_abs_diff", c.betti0_diff},
              {"betti1_mean_abs_diff", c.betti1_diff},
              {"semantic_validity_pct", c.validity},
              {"reference_graphs", c.reference_size},
              {"generated_graphs", c.generated_size}};
}

}  // namespace sgdiff

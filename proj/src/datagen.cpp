/* SPDX-License-Identifier: Apache-2.0 */
#include "sgdiff/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "sgdiff/graph_io.hpp"
#include "sgdiff/rng.hpp"

namespace sgdiff {

int tree_level(int depth, int levels) {
  if (depth < 1) throw std::invalid_argument("tree_level: depth must be >= 1");
  const int level = 1 + static_cast<int>(std::floor(std::log2(static_cast<double>(depth))));
  return std::min(level, levels);
}

namespace {

Eigen::RowVector3d gaussian3(std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  return {nd(rng), nd(rng), nd(rng)};
}

// Unit vector at roughly `angle` radians from `axis`, random azimuth.
Eigen::RowVector3d deflect(const Eigen::RowVector3d& axis, double angle, std::mt19937_64& rng) {
  Eigen::RowVector3d side = gaussian3(rng);
  side -= side.dot(axis) * axis;
  if (side.norm() < 1e-9) side = axis.unitOrthogonal();
  side.normalize();
  return (std::cos(angle) * axis + std::sin(angle) * side).normalized();
}

}  // namespace

SpatialGraph gen_airway_tree(int n, std::mt19937_64& rng, int levels) {
  if (n < 2) throw std::invalid_argument("gen_airway_tree: need at least 2 nodes");
  if (levels < 1) throw std::invalid_argument("gen_airway_tree: need at least 1 level");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> nd;

  Coords x(n, 3);
  std::vector<int> depth(static_cast<std::size_t>(n), 0);
  std::vector<int> children(static_cast<std::size_t>(n), 0);
  std::vector<Eigen::RowVector3d> heading(static_cast<std::size_t>(n), Eigen::RowVector3d(0, 0, -1));
  std::vector<Edge> edges;

  x.row(0) = Eigen::RowVector3d::Zero();
  x.row(1) = Eigen::RowVector3d(0, 0, -1.0);
  depth[1] = 1;
  children[0] = 1;
  edges.push_back({0, 1, tree_level(1, levels)});

  std::vector<double> weight(static_cast<std::size_t>(n), 0.0);
  for (int k = 2; k < n; ++k) {
    // the trachea top never branches; open ends grow more often than they split
    for (int v = 0; v < k; ++v) {
      const int c = children[static_cast<std::size_t>(v)];
      weight[static_cast<std::size_t>(v)] = v == 0 || c >= 2 ? 0.0 : (c == 0 ? 2.0 : 1.0);
    }
    std::discrete_distribution<int> pick(weight.begin(), weight.begin() + k);
    const int parent = pick(rng);
    const auto p = static_cast<std::size_t>(parent);
    const double spread = children[p] == 0 ? 0.25 + 0.1 * std::abs(nd(rng)) : 0.6 + 0.15 * nd(rng);
    const Eigen::RowVector3d dir = deflect(heading[p], spread, rng);
    const double len = std::max(0.15, std::pow(0.96, depth[p]) * (0.7 + 0.6 * unit(rng)));
    x.row(k) = x.row(parent) + len * dir;
    heading[static_cast<std::size_t>(k)] = dir;
    depth[static_cast<std::size_t>(k)] = depth[p] + 1;
    ++children[p];
    edges.push_back({parent, k, tree_level(depth[static_cast<std::size_t>(k)], levels)});
  }
  return SpatialGraph(x, edges);
}

TemplateSpec cow_template() {
  Coords x(14, 3);
  x << 0.0, -1.0, -1.5,   // 0 basilar, proximal
      0.0, -1.0, 0.0,     // 1 basilar tip
      -0.6, -0.9, 0.1,    // 2 left P1/Pcom junction
      0.6, -0.9, 0.1,     // 3 right P1/Pcom junction
      -1.4, -1.6, 0.3,    // 4 left PCA distal
      1.4, -1.6, 0.3,     // 5 right PCA distal
      -0.8, 0.2, 0.0,     // 6 left ICA terminus
      0.8, 0.2, 0.0,      // 7 right ICA terminus
      -0.8, 0.2, -1.5,    // 8 left ICA proximal
      0.8, 0.2, -1.5,     // 9 right ICA proximal
      -2.0, 0.3, 0.2,     // 10 left MCA distal
      2.0, 0.3, 0.2,      // 11 right MCA distal
      -0.2, 1.0, 0.1,     // 12 left A1/Acom junction
      0.2, 1.0, 0.1;      // 13 right A1/Acom junction
  enum : int { BA = 1, PCA, Pcom, ICA, MCA, ACA };
  const std::vector<Edge> edges{{0, 1, BA},    {1, 2, PCA},   {1, 3, PCA},  {2, 4, PCA}, {3, 5, PCA},
                                {2, 6, Pcom},  {3, 7, Pcom},  {6, 8, ICA},  {7, 9, ICA}, {6, 10, MCA},
                                {7, 11, MCA},  {6, 12, ACA},  {7, 13, ACA}, {12, 13, ACA}};
  TemplateSpec spec;
  spec.graph = SpatialGraph(x, edges);
  spec.labels = {"BA", "PCA", "Pcom", "ICA", "MCA", "ACA"};
  const int c = static_cast<int>(spec.labels.size());
  Eigen::MatrixXi forbidden = Eigen::MatrixXi::Ones(c, c);
  for (Index v = 0; v < spec.graph.node_count(); ++v) {
    const auto& inc = spec.graph.incident(v);
    for (std::size_t a = 0; a < inc.size(); ++a) {
      for (std::size_t b = a + 1; b < inc.size(); ++b) {
        forbidden(inc[a].label - 1, inc[b].label - 1) = 0;
        forbidden(inc[b].label - 1, inc[a].label - 1) = 0;
      }
    }
  }
  spec.omega = OmegaMatrix(forbidden, spec.labels);
  return spec;
}

SpatialGraph gen_cow_like(const TemplateSpec& spec, std::mt19937_64& rng) {
  if (!check_omega(spec.graph, spec.omega).empty()) {
    throw std::invalid_argument("gen_cow_like: template violates its own omega");
  }
  if (spec.jitter < 0.0 || spec.dropout < 0.0 || spec.dropout > 1.0) {
    throw std::invalid_argument("gen_cow_like: jitter must be >= 0 and dropout in [0, 1]");
  }
  std::bernoulli_distribution drop(spec.dropout);
  Coords x = spec.graph.coords();
  if (spec.jitter > 0.0) {
    for (Index r = 0; r < x.rows(); ++r) x.row(r) += spec.jitter * gaussian3(rng);
  }
  std::vector<Edge> kept;
  for (const auto& e : spec.graph.edges()) {
    if (!drop(rng)) kept.push_back(e);
  }
  return SpatialGraph(x, kept);
}

std::vector<std::string> tree_labels(int levels) {
  std::vector<std::string> out;
  for (int l = 1; l <= levels; ++l) out.push_back("G" + std::to_string(l));
  return out;
}

Corpus gen_tree_corpus(int count, int min_nodes, int max_nodes, std::uint64_t seed) {
  if (count < 0 || min_nodes < 2 || max_nodes < min_nodes) {
    throw std::invalid_argument("gen_tree_corpus: need count >= 0 and 2 <= min_nodes <= max_nodes");
  }
  const CounterRng root = CounterRng(seed).stream("trees");
  Corpus corpus;
  corpus.labels = tree_labels();
  for (int k = 0; k < count; ++k) {
    auto rng = root.stream(static_cast<std::uint64_t>(k)).engine();
    std::uniform_int_distribution<int> size(min_nodes, max_nodes);
    const int n = size(rng);
    corpus.graphs.push_back(gen_airway_tree(n, rng));
  }
  return corpus;
}

Corpus gen_cow_corpus(int count, const TemplateSpec& spec, std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("gen_cow_corpus: negative count");
  const CounterRng root = CounterRng(seed).stream("cow");
  Corpus corpus;
  corpus.labels = spec.labels;
  for (int k = 0; k < count; ++k) {
    auto rng = root.stream(static_cast<std::uint64_t>(k)).engine();
    corpus.graphs.push_back(gen_cow_like(spec, rng));
  }
  return corpus;
}

namespace {

std::string graph_file_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "graph_%04zu.json", k);
  return buf;
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_json_file(dir / "corpus.json",
                  json{{"format", "sgdiff-corpus/1"}, {"labels", corpus.labels}, {"count", corpus.graphs.size()}}, 2);
  for (std::size_t k = 0; k < corpus.graphs.size(); ++k) write_graph(dir / graph_file_name(k), corpus.graphs[k]);
}

Corpus load_corpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error(dir.string() + ": not a directory");
  Corpus corpus;
  const auto index = dir / "corpus.json";
  if (std::filesystem::exists(index)) {
    const json doc = read_json_file(index);
    try {
      corpus.labels = doc.at("labels").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw std::runtime_error(index.string() + ": bad label list (" + e.what() + ")");
    }
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with("graph_") && name.ends_with(".json")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  const int max_label = static_cast<int>(corpus.labels.size());
  for (const auto& f : files) corpus.graphs.push_back(read_graph(f, max_label));
  return corpus;
}

}  // namespace sgdiff

/* SPDX-License-Identifier: Apache-2.0 */
#include "sgdiff/graph.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace sgdiff {

SpatialGraph::SpatialGraph(Coords coords) { set_coords(std::move(coords)); }

SpatialGraph::SpatialGraph(Coords coords, const std::vector<Edge>& edges)
    : SpatialGraph(std::move(coords)) {
  for (const auto& e : edges) add_edge(e.i, e.j, e.label);
}

void SpatialGraph::set_coords(Coords coords) {
  if (!edges_.empty() && coords.rows() != coords_.rows()) {
    throw GraphError("set_coords: node count change on a graph with edges");
  }
  coords_ = std::move(coords);
  adjacency_.resize(static_cast<std::size_t>(coords_.rows()));
}

void SpatialGraph::check_node(Index v) const {
  if (v < 0 || v >= node_count()) {
    throw GraphError("node index " + std::to_string(v) + " out of range [0, " +
                     std::to_string(node_count()) + ")");
  }
}

const std::vector<Neighbor>& SpatialGraph::incident(Index v) const {
  check_node(v);
  return adjacency_[static_cast<std::size_t>(v)];
}

Label SpatialGraph::label_of(Index i, Index j) const {
  check_node(i);
  check_node(j);
  const auto& a = adjacency_[static_cast<std::size_t>(i)];
  const auto& b = adjacency_[static_cast<std::size_t>(j)];
  // scan the shorter list
  const auto& list = a.size() <= b.size() ? a : b;
  const Index other = a.size() <= b.size() ? j : i;
  for (const auto& nb : list) {
    if (nb.node == other) return nb.label;
  }
  return 0;
}

bool SpatialGraph::has_edge(Index i, Index j) const { return label_of(i, j) != 0; }

void SpatialGraph::add_edge(Index i, Index j, Label label) {
  check_node(i);
  check_node(j);
  if (i == j) throw GraphError("self-loop at node " + std::to_string(i));
  if (label < 1) throw GraphError("edge label must be >= 1, got " + std::to_string(label));
  if (i > j) std::swap(i, j);
  if (has_edge(i, j)) {
    throw GraphError("duplicate edge (" + std::to_string(i) + ", " + std::to_string(j) + ")");
  }
  edges_.push_back({i, j, label});
  adjacency_[static_cast<std::size_t>(i)].push_back({j, label});
  adjacency_[static_cast<std::size_t>(j)].push_back({i, label});
}

bool operator==(const SpatialGraph& a, const SpatialGraph& b) {
  if (a.coords_.rows() != b.coords_.rows() || a.coords_ != b.coords_) return false;
  if (a.edges_.size() != b.edges_.size()) return false;
  auto key = [](const Edge& e) { return std::tuple(e.i, e.j, e.label); };
  auto ea = a.edges_;
  auto eb = b.edges_;
  std::ranges::sort(ea, {}, key);
  std::ranges::sort(eb, {}, key);
  return ea == eb;
}

OmegaMatrix::OmegaMatrix(Eigen::MatrixXi forbidden, std::vector<std::string> labels)
    : forbidden_(std::move(forbidden)), labels_(std::move(labels)) {
  if (forbidden_.rows() != forbidden_.cols()) throw GraphError("omega matrix must be square");
  if ((forbidden_.array() != 0 && forbidden_.array() != 1).any()) {
    throw GraphError("omega entries must be 0 or 1");
  }
  if (forbidden_ != forbidden_.transpose()) throw GraphError("omega matrix must be symmetric");
  if (!labels_.empty() && static_cast<Eigen::Index>(labels_.size()) != forbidden_.rows()) {
    throw GraphError("omega label count does not match matrix size");
  }
  if (labels_.empty()) {
    for (Eigen::Index a = 0; a < forbidden_.rows(); ++a) labels_.push_back("L" + std::to_string(a + 1));
  }
}

OmegaMatrix OmegaMatrix::hierarchy(int levels) {
  Eigen::MatrixXi m(levels, levels);
  for (int a = 0; a < levels; ++a)
    for (int b = 0; b < levels; ++b) m(a, b) = std::abs(a - b) >= 2 ? 1 : 0;
  return OmegaMatrix(std::move(m));
}

std::vector<Index> neighbors(const SpatialGraph& g, Index v) {
  std::vector<Index> out;
  for (const auto& nb : g.incident(v)) out.push_back(nb.node);
  std::ranges::sort(out);
  return out;
}

namespace {

void check_labels(const SpatialGraph& g, const OmegaMatrix& omega) {
  for (const auto& e : g.edges()) {
    if (e.label > omega.label_count()) {
      throw GraphError("edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) + ") label " +
                       std::to_string(e.label) + " outside omega range 1.." +
                       std::to_string(omega.label_count()));
    }
  }
}

Edge canonical(Index a, Index b, Label label) {
  return a < b ? Edge{a, b, label} : Edge{b, a, label};
}

}  // namespace

ViolationReport check_omega(const SpatialGraph& g, const OmegaMatrix& omega) {
  check_labels(g, omega);
  ViolationReport report;
  for (Index v = 0; v < g.node_count(); ++v) {
    const auto& inc = g.incident(v);
    for (std::size_t p = 0; p < inc.size(); ++p) {
      for (std::size_t q = p + 1; q < inc.size(); ++q) {
        if (omega.forbidden(inc[p].label, inc[q].label)) {
          report.violations.push_back(
              {v, canonical(inc[p].node, v, inc[p].label), canonical(v, inc[q].node, inc[q].label)});
        }
      }
    }
  }
  return report;
}

ViolationReport check_constraints(const SpatialGraph& g, const OmegaMatrix* omega, bool forest) {
  ViolationReport report;
  if (omega != nullptr) report = check_omega(g, *omega);
  if (forest) report.cycle_edges = cycle_edges(g);
  return report;
}

bool would_violate(const SpatialGraph& g, Index i, Index j, Label label, const OmegaMatrix& omega) {
  if (g.has_edge(i, j)) {
    throw GraphError("edge (" + std::to_string(i) + ", " + std::to_string(j) + ") already present");
  }
  if (label < 1 || label > omega.label_count()) {
    throw GraphError("label " + std::to_string(label) + " outside omega range");
  }
  for (Index end : {i, j}) {
    for (const auto& nb : g.incident(end)) {
      if (omega.forbidden(label, nb.label)) return true;
    }
  }
  return false;
}

DisjointSets::DisjointSets(Index n)
    : parent_(static_cast<std::size_t>(n)), size_(static_cast<std::size_t>(n), 1), components_(n) {
  std::iota(parent_.begin(), parent_.end(), 0);
}

Index DisjointSets::find(Index v) {
  auto& p = parent_;
  while (p[static_cast<std::size_t>(v)] != v) {
    auto& pv = p[static_cast<std::size_t>(v)];
    pv = p[static_cast<std::size_t>(pv)];
    v = pv;
  }
  return v;
}

bool DisjointSets::unite(Index a, Index b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (size_[static_cast<std::size_t>(a)] < size_[static_cast<std::size_t>(b)]) std::swap(a, b);
  parent_[static_cast<std::size_t>(b)] = a;
  size_[static_cast<std::size_t>(a)] += size_[static_cast<std::size_t>(b)];
  --components_;
  return true;
}

int betti0(const SpatialGraph& g) {
  DisjointSets sets(g.node_count());
  for (const auto& e : g.edges()) sets.unite(e.i, e.j);
  return sets.component_count();
}

int betti1(const SpatialGraph& g) {
  return static_cast<int>(g.edge_count()) - g.node_count() + betti0(g);
}

bool creates_cycle(const SpatialGraph& g, Index i, Index j) {
  if (g.has_edge(i, j)) {
    throw GraphError("edge (" + std::to_string(i) + ", " + std::to_string(j) + ") already present");
  }
  DisjointSets sets(g.node_count());
  for (const auto& e : g.edges()) sets.unite(e.i, e.j);
  return sets.connected(i, j);
}

std::vector<Edge> cycle_edges(const SpatialGraph& g) {
  // Tarjan bridge search; every non-bridge lies on a cycle.
  const auto n = static_cast<std::size_t>(g.node_count());
  std::vector<int> order(n, -1);
  std::vector<int> low(n, 0);
  std::vector<Edge> out;
  int counter = 0;
  std::function<void(Index, Index)> visit = [&](Index v, Index parent) {
    const auto vi = static_cast<std::size_t>(v);
    order[vi] = low[vi] = counter++;
    for (const auto& nb : g.incident(v)) {
      const auto ui = static_cast<std::size_t>(nb.node);
      if (nb.node == parent) continue;
      if (order[ui] >= 0) {
        low[vi] = std::min(low[vi], order[ui]);
        if (order[ui] < order[vi]) out.push_back(canonical(v, nb.node, nb.label));
        continue;
      }
      visit(nb.node, v);
      low[vi] = std::min(low[vi], low[ui]);
      if (low[ui] <= order[vi]) out.push_back(canonical(v, nb.node, nb.label));
    }
  };
  for (Index v = 0; v < g.node_count(); ++v) {
    if (order[static_cast<std::size_t>(v)] < 0) visit(v, -1);
  }
  return out;
}

}  // namespace sgdiff

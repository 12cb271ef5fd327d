/* SPDX-License-Identifier: Apache-2.0 */
// Labeled undirected spatial graphs, the label-adjacency (Omega) constraint,
// and the topological primitives used by the sampler and the metrics.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sgdiff {

using Index = int;
using Label = int;
using Coords = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// Raised for malformed input: bad indices, labels, or files.
class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Undirected edge in canonical form (i < j). Label 0 is "no edge" and is never stored.
struct Edge {
  Index i = 0;
  Index j = 0;
  Label label = 1;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Neighbor {
  Index node = 0;
  Label label = 0;
};

class SpatialGraph {
 public:
  SpatialGraph() = default;
  explicit SpatialGraph(Coords coords);
  SpatialGraph(Coords coords, const std::vector<Edge>& edges);

  Index node_count() const { return static_cast<Index>(coords_.rows()); }
  std::size_t edge_count() const { return edges_.size(); }
  const Coords& coords() const { return coords_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Neighbor>& incident(Index v) const;

  bool has_edge(Index i, Index j) const;
  /// Label of (i, j), or 0 when absent.
  Label label_of(Index i, Index j) const;

  /// Adds (i, j, label) in either order; rejects self-loops, duplicates and labels < 1.
  void add_edge(Index i, Index j, Label label);

  void set_coords(Coords coords);

  friend bool operator==(const SpatialGraph& a, const SpatialGraph& b);

 private:
  void check_node(Index v) const;

  Coords coords_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

/// Binary c'xc' table over real edge labels 1..c'. Entry 1 forbids the two
/// labels from meeting at a shared node.
class OmegaMatrix {
 public:
  OmegaMatrix() = default;
  explicit OmegaMatrix(Eigen::MatrixXi forbidden, std::vector<std::string> labels = {});

  int label_count() const { return static_cast<int>(forbidden_.rows()); }
  bool forbidden(Label a, Label b) const { return forbidden_(a - 1, b - 1) != 0; }
  const Eigen::MatrixXi& matrix() const { return forbidden_; }
  const std::vector<std::string>& labels() const { return labels_; }

  /// Levels 1..levels; labels whose levels differ by two or more are forbidden.
  static OmegaMatrix hierarchy(int levels);

 private:
  Eigen::MatrixXi forbidden_;
  std::vector<std::string> labels_;
};

struct OmegaViolation {
  Index center = 0;
  Edge first;
  Edge second;
};

struct ViolationReport {
  std::vector<OmegaViolation> violations;
  std::vector<Edge> cycle_edges;

  bool empty() const { return violations.empty() && cycle_edges.empty(); }
};

std::vector<Index> neighbors(const SpatialGraph& g, Index v);

/// Every unordered pair of distinct incident edges at every node whose labels are forbidden.
ViolationReport check_omega(const SpatialGraph& g, const OmegaMatrix& omega);

/// check_omega plus, when `forest` is set, the edges lying on cycles.
ViolationReport check_constraints(const SpatialGraph& g, const OmegaMatrix* omega, bool forest);

/// Whether inserting (i, j, label) into a valid graph creates a forbidden pair at i or j.
bool would_violate(const SpatialGraph& g, Index i, Index j, Label label, const OmegaMatrix& omega);

int betti0(const SpatialGraph& g);
int betti1(const SpatialGraph& g);

/// True iff i and j already share a component.
bool creates_cycle(const SpatialGraph& g, Index i, Index j);

/// Edges that lie on at least one cycle (non-bridges).
std::vector<Edge> cycle_edges(const SpatialGraph& g);

/// Union-find with path halving and union by size. Single writer.
class DisjointSets {
 public:
  explicit DisjointSets(Index n = 0);

  Index find(Index v);
  /// Returns false when a and b were already joined.
  bool unite(Index a, Index b);
  bool connected(Index a, Index b) { return find(a) == find(b); }
  Index component_count() const { return components_; }

 private:
  std::vector<Index> parent_;
  std::vector<Index> size_;
  Index components_ = 0;
};

}  // namespace sgdiff

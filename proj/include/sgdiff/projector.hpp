/* SPDX-License-Identifier: Apache-2.0 */
// Constrained reverse sampling for edges.
//
// Under absorbing (edge-deletion) noising the reverse chain only ever inserts
// edges. Both constraints handled here (forbidden label adjacency and
// acyclicity) are preserved by deletion, so each intermediate graph can be
// kept valid by filtering the insertions of every step:
//
//   1. a candidate that would close a cycle is rejected outright;
//   2. a candidate whose sampled label is admissible is accepted;
//   3. otherwise up to k labels are redrawn from the candidate's posterior
//      restricted to edge classes, and the first admissible one is kept;
//      if none is, the candidate is rejected.
//
// Candidates are visited in a fresh random order each step and accepted
// sequentially, so later candidates see edges accepted earlier in the step.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgdiff/coord_ddpm.hpp"
#include "sgdiff/denoiser.hpp"
#include "sgdiff/edge_diffusion.hpp"
#include "sgdiff/graph.hpp"
#include "sgdiff/rng.hpp"
#include "sgdiff/schedule.hpp"

namespace sgdiff {

/// Input that violates the requested constraints.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Structural { none, forest };

std::string to_string(Structural s);
Structural parse_structural(const std::string& name);

struct ProjectorConfig {
  std::optional<OmegaMatrix> omega;
  Structural structural = Structural::none;
  int k = 4;

  bool active() const { return omega.has_value() || structural != Structural::none; }
};

struct InterventionLog {
  long candidates = 0;
  long accepted = 0;  // first sampled label admissible
  long fixed = 0;     // admissible after resampling
  long rejected = 0;
  long rejected_structural = 0;  // subset of rejected

  /// Share of proposed edges the projector changed or dropped.
  double rate() const {
    return candidates > 0 ? static_cast<double>(fixed + rejected) / static_cast<double>(candidates) : 0.0;
  }
  bool consistent() const { return accepted + fixed + rejected == candidates; }

  InterventionLog& operator+=(const InterventionLog& o);
};

/// A proposed insertion: pair (i < j) currently empty, sampled class > 0.
struct Candidate {
  int i = 0;
  int j = 0;
  int label = 1;
};

/// Chain state kept in sync across the dense pair classes, the sparse graph
/// used for Omega checks and the union-find used for cycle checks.
class ConstrainedState {
 public:
  ConstrainedState(const Coords& coords, int classes);
  ConstrainedState(const SpatialGraph& g, int classes);

  const EdgeState& edges() const { return edges_; }
  const SpatialGraph& graph() const { return graph_; }
  int classes() const { return classes_; }
  bool connected(int i, int j) { return components_.connected(i, j); }
  void insert(int i, int j, int label);

 private:
  int classes_;
  EdgeState edges_;
  SpatialGraph graph_;
  DisjointSets components_;
};

/// Applies one projection step in place; `rows` holds one posterior row per candidate.
InterventionLog project_step(ConstrainedState& state, std::span<const Candidate> candidates,
                             const MatrixX<double>& rows, const ProjectorConfig& cfg, const CounterRng& rng);

struct ProjectionResult {
  EdgeState edges;
  InterventionLog log;
};

/// Value form: returns E_{t-1} for a given E_t.
ProjectionResult project_step(const EdgeState& e_t, std::span<const Candidate> candidates, const MatrixX<double>& rows,
                              const ProjectorConfig& cfg, const Coords& coords, const CounterRng& rng);

struct SamplerOptions {
  /// Evaluate the edge denoiser in float.
  bool single_precision = true;
  /// Observer called after every reverse step with (t, E_{t-1}).
  std::function<void(int, const EdgeState&)> on_step;
};

struct EdgeSample {
  SpatialGraph graph;
  InterventionLog log;
};

/// Full reverse chain T -> 0 for the given (normalized) coordinates.
EdgeSample reverse_sample(const EdgeDenoiser& model, const PointCloud& coords, const TransitionModel& tm,
                          const DiffusionSchedule& sched, const ProjectorConfig& cfg, const CounterRng& rng,
                          const SamplerOptions& options = {});

/// Truncated chain from t0 = steps with the observed edges present. The
/// partial graph's coordinates must already be normalized.
EdgeSample link_predict(const EdgeDenoiser& model, const SpatialGraph& partial, const TransitionModel& tm,
                        const DiffusionSchedule& sched, const ProjectorConfig& cfg, int steps, const CounterRng& rng,
                        const SamplerOptions& options = {});

}  // namespace sgdiff

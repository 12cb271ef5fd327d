/* SPDX-License-Identifier: Apache-2.0 */
#include "sgdiff/projector.hpp"

#include <numeric>
#include <stdexcept>

namespace sgdiff {

std::string to_string(Structural s) { return s == Structural::forest ? "forest" : "none"; }

Structural parse_structural(const std::string& name) {
  if (name == "forest") return Structural::forest;
  if (name == "none" || name.empty()) return Structural::none;
  throw std::invalid_argument("unknown structural constraint '" + name + "' (expected forest|none)");
}

InterventionLog& InterventionLog::operator+=(const InterventionLog& o) {
  candidates += o.candidates;
  accepted += o.accepted;
  fixed += o.fixed;
  rejected += o.rejected;
  rejected_structural += o.rejected_structural;
  return *this;
}

ConstrainedState::ConstrainedState(const Coords& coords, int classes)
    : classes_(classes),
      edges_(static_cast<int>(coords.rows())),
      graph_(coords),
      components_(static_cast<Index>(coords.rows())) {}

ConstrainedState::ConstrainedState(const SpatialGraph& g, int classes)
    : classes_(classes), edges_(EdgeState::from_graph(g, classes)), graph_(g), components_(g.node_count()) {
  for (const auto& e : g.edges()) components_.unite(e.i, e.j);
}

void ConstrainedState::insert(int i, int j, int label) {
  graph_.add_edge(i, j, label);
  edges_.set(i, j, static_cast<std::uint8_t>(label));
  components_.unite(i, j);
}

namespace {

// Counter tags inside a step's stream.
constexpr std::uint64_t kOrderTag = 1;
constexpr std::uint64_t kResampleTag = 2;

std::vector<std::size_t> random_order(std::size_t count, const CounterRng& rng) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t k = count; k > 1; --k) {
    const auto pick = static_cast<std::size_t>(rng.bits(kOrderTag, k) % k);
    std::swap(order[k - 1], order[pick]);
  }
  return order;
}

}  // namespace

InterventionLog project_step(ConstrainedState& state, std::span<const Candidate> candidates,
                             const MatrixX<double>& rows, const ProjectorConfig& cfg, const CounterRng& rng) {
  if (static_cast<std::size_t>(rows.rows()) != candidates.size()) {
    throw std::invalid_argument("project_step: one posterior row per candidate required");
  }
  if (cfg.k < 0) throw std::invalid_argument("project_step: k must be non-negative");
  for (const auto& cand : candidates) {
    if (state.edges().at(cand.i, cand.j) != 0) {
      throw std::invalid_argument("project_step: candidate (" + std::to_string(cand.i) + ", " +
                                  std::to_string(cand.j) + ") already present");
    }
  }
  InterventionLog log;
  const OmegaMatrix* omega = cfg.omega ? &*cfg.omega : nullptr;
  const bool forest = cfg.structural == Structural::forest;
  std::vector<double> restricted(static_cast<std::size_t>(state.classes()), 0.0);

  for (std::size_t slot : random_order(candidates.size(), rng)) {
    const auto& cand = candidates[slot];
    ++log.candidates;
    // an earlier candidate in this step may already have claimed the pair
    if (state.edges().at(cand.i, cand.j) != 0) {
      ++log.rejected;
      continue;
    }
    if (forest && state.connected(cand.i, cand.j)) {
      ++log.rejected;
      ++log.rejected_structural;
      continue;
    }
    if (omega == nullptr || !would_violate(state.graph(), cand.i, cand.j, cand.label, *omega)) {
      state.insert(cand.i, cand.j, cand.label);
      ++log.accepted;
      continue;
    }
    const auto row = rows.row(static_cast<Eigen::Index>(slot));
    restricted[0] = 0.0;
    for (int c = 1; c < state.classes(); ++c) restricted[static_cast<std::size_t>(c)] = row(c);
    bool placed = false;
    for (int draw = 0; draw < cfg.k && !placed; ++draw) {
      const int label = sample_categorical(
          restricted, rng.uniform(kResampleTag, PairIndex::index(state.edges().node_count(), cand.i, cand.j),
                                  static_cast<std::uint64_t>(draw)));
      if (label < 1) break;
      if (!would_violate(state.graph(), cand.i, cand.j, label, *omega)) {
        state.insert(cand.i, cand.j, label);
        placed = true;
      }
    }
    if (placed) {
      ++log.fixed;
    } else {
      ++log.rejected;
    }
  }
  return log;
}

ProjectionResult project_step(const EdgeState& e_t, std::span<const Candidate> candidates, const MatrixX<double>& rows,
                              const ProjectorConfig& cfg, const Coords& coords, const CounterRng& rng) {
  const int classes = static_cast<int>(rows.cols());
  ConstrainedState state(e_t.to_graph(coords), classes);
  auto log = project_step(state, candidates, rows, cfg, rng);
  return {state.edges(), log};
}

namespace {

template <typename S>
EdgeSample run_chain(const EdgeDenoiser& model, ConstrainedState state, const PointCloud& coords,
                     const TransitionModel& tm, const DiffusionSchedule& sched, const ProjectorConfig& cfg,
                     int t_start, const CounterRng& rng, const SamplerOptions& options) {
  const int steps = sched.steps();
  const int classes = tm.classes();
  EdgeInference<S> denoiser(model, coords.cast<S>());
  const PairIndex& pairs = denoiser.pairs();
  const CounterRng edge_rng = rng.stream("edges");
  const CounterRng proj_rng = rng.stream("projector");
  const bool absorbing = tm.kind() == NoisingKind::absorbing;

  // Non-absorbing kinds evolve the dense state directly; the projector is absorbing-only.
  EdgeState dense = state.edges();
  InterventionLog log;
  std::vector<Candidate> candidates;
  std::vector<std::size_t> candidate_pairs;

  for (int t = t_start; t >= 1; --t) {
    const auto& current = absorbing ? state.edges() : dense;
    const MatrixX<double> p0 = denoiser.predict(current.classes(), t, steps).template cast<double>();
    const MatrixX<double> post = posterior_rows(current.classes(), p0, t, tm, sched);
    candidates.clear();
    candidate_pairs.clear();
    EdgeState next = current;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const double u = edge_rng.uniform(static_cast<std::uint64_t>(t), p);
      const int drawn = sample_categorical(
          std::span<const double>(post.row(static_cast<Eigen::Index>(p)).data(), static_cast<std::size_t>(classes)),
          u);
      if (absorbing) {
        if (current[p] == 0 && drawn > 0) {
          candidates.push_back({pairs.first[p], pairs.second[p], drawn});
          candidate_pairs.push_back(p);
        }
      } else {
        next[p] = static_cast<std::uint8_t>(drawn);
      }
    }
    if (absorbing) {
      MatrixX<double> rows(static_cast<Eigen::Index>(candidates.size()), classes);
      for (std::size_t k = 0; k < candidate_pairs.size(); ++k) {
        rows.row(static_cast<Eigen::Index>(k)) = post.row(static_cast<Eigen::Index>(candidate_pairs[k]));
      }
      log += project_step(state, candidates, rows, cfg, proj_rng.stream(static_cast<std::uint64_t>(t)));
      if (options.on_step) options.on_step(t, state.edges());
    } else {
      dense = std::move(next);
      if (options.on_step) options.on_step(t, dense);
    }
  }
  if (absorbing) return {state.graph(), log};
  return {dense.to_graph(state.graph().coords()), log};
}

EdgeSample dispatch(const EdgeDenoiser& model, ConstrainedState state, const PointCloud& coords,
                    const TransitionModel& tm, const DiffusionSchedule& sched, const ProjectorConfig& cfg, int t_start,
                    const CounterRng& rng, const SamplerOptions& options) {
  if (model.config().classes != tm.classes()) {
    throw std::invalid_argument("sampler: denoiser and transition model disagree on class count");
  }
  if (cfg.omega && cfg.omega->label_count() != tm.classes() - 1) {
    throw std::invalid_argument("sampler: omega size must equal the number of edge labels");
  }
  if (options.single_precision) {
    return run_chain<float>(model, std::move(state), coords, tm, sched, cfg, t_start, rng, options);
  }
  return run_chain<double>(model, std::move(state), coords, tm, sched, cfg, t_start, rng, options);
}

}  // namespace

EdgeSample reverse_sample(const EdgeDenoiser& model, const PointCloud& coords, const TransitionModel& tm,
                          const DiffusionSchedule& sched, const ProjectorConfig& cfg, const CounterRng& rng,
                          const SamplerOptions& options) {
  if (cfg.active() && tm.kind() != NoisingKind::absorbing) {
    throw std::invalid_argument("projection requires absorbing noising");
  }
  const Coords xyz = coords;
  ConstrainedState state(xyz, tm.classes());
  if (tm.kind() != NoisingKind::absorbing) {
    // E_T ~ m, drawn per pair
    EdgeState init(static_cast<int>(coords.rows()));
    const CounterRng init_rng = rng.stream("init");
    for (std::size_t p = 0; p < init.pair_count(); ++p) {
      init[p] = static_cast<std::uint8_t>(sample_categorical(
          std::span<const double>(tm.target().data(), static_cast<std::size_t>(tm.classes())), init_rng.uniform(p)));
    }
    state = ConstrainedState(init.to_graph(xyz), tm.classes());
  }
  return dispatch(model, std::move(state), coords, tm, sched, cfg, sched.steps(), rng, options);
}

EdgeSample link_predict(const EdgeDenoiser& model, const SpatialGraph& partial, const TransitionModel& tm,
                        const DiffusionSchedule& sched, const ProjectorConfig& cfg, int steps, const CounterRng& rng,
                        const SamplerOptions& options) {
  if (tm.kind() != NoisingKind::absorbing) throw std::invalid_argument("link prediction requires absorbing noising");
  if (steps < 1 || steps > sched.steps()) throw std::invalid_argument("link prediction steps outside 1..T");
  const auto report = check_constraints(partial, cfg.omega ? &*cfg.omega : nullptr,
                                        cfg.structural == Structural::forest);
  if (!report.empty()) {
    throw ValidationError("input graph violates constraints (" + std::to_string(report.violations.size()) +
                          " label conflicts, " + std::to_string(report.cycle_edges.size()) + " cycle edges)");
  }
  const PointCloud coords = partial.coords();
  return dispatch(model, ConstrainedState(partial, tm.classes()), coords, tm, sched, cfg, steps, rng, options);
}

}  // namespace sgdiff

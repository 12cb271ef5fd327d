/* SPDX-License-Identifier: Apache-2.0 */
#include "sgdiff/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <cmath>
#include <mutex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

namespace sgdiff {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

Model train_model(const Corpus& corpus, const TrainOptions& options, TrainReport* report) {
  if (corpus.graphs.empty()) throw std::invalid_argument("train: empty corpus");
  if (corpus.labels.empty()) throw std::invalid_argument("train: corpus has no label alphabet");
  Model m;
  m.shape = options.shape;
  m.steps = options.steps;
  m.noising = options.noising;
  m.labels = corpus.labels;
  m.normalizer = CoordNormalizer::fit(corpus.graphs);
  const int classes = static_cast<int>(corpus.labels.size()) + 1;

  m.class_frequencies = Eigen::VectorXd::Zero(classes);
  for (const auto& g : corpus.graphs) {
    m.node_counts.push_back(static_cast<int>(g.node_count()));
    const double pairs = static_cast<double>(PairIndex::count(static_cast<int>(g.node_count())));
    m.class_frequencies(0) += pairs - static_cast<double>(g.edge_count());
    for (const auto& e : g.edges()) {
      if (e.label >= classes) throw std::invalid_argument("train: edge label outside the corpus alphabet");
      m.class_frequencies(e.label) += 1.0;
    }
  }
  m.class_frequencies /= m.class_frequencies.sum();

  const CounterRng root = CounterRng(options.seed).stream("train");
  m.coord = CoordDenoiser(options.coord, root.bits(1));
  EdgeDenoiserConfig edge_cfg = options.edge;
  edge_cfg.classes = classes;
  m.edge = EdgeDenoiser(edge_cfg, root.bits(2));

  TrainReport local;
  std::vector<PointCloud> clouds;
  std::vector<EdgeExample> examples;
  for (const auto& g : corpus.graphs) {
    clouds.push_back(m.normalizer.normalize(g.coords()));
    examples.push_back({clouds.back(), EdgeState::from_graph(g, classes)});
  }
  if (options.train_coords) {
    auto cfg = options.coord_train;
    cfg.seed = root.bits(3);
    const auto start = std::chrono::steady_clock::now();
    local.coord_curve = fit_coords(m.coord, clouds, m.coord_schedule(), cfg);
    local.coord_seconds = seconds_since(start);
  }
  if (options.train_edges) {
    auto cfg = options.edge_train;
    cfg.seed = root.bits(4);
    const auto start = std::chrono::steady_clock::now();
    local.edge_curve = fit_edges(m.edge, examples, m.transition(), m.edge_schedule(), cfg);
    local.edge_seconds = seconds_since(start);
  }
  if (report != nullptr) *report = std::move(local);
  return m;
}

std::vector<GeneratedGraph> generate(const Model& model, const GenerateOptions& options) {
  if (options.count < 0) throw std::invalid_argument("generate: negative count");
  if (!options.nodes && model.node_counts.empty()) throw std::invalid_argument("generate: model has no node counts");
  if (options.nodes && *options.nodes < 1) throw std::invalid_argument("generate: node count must be positive");
  const auto tm = model.transition(options.noising.value_or(model.noising));
  if (options.projector.active() && tm.kind() != NoisingKind::absorbing) {
    throw std::invalid_argument("projection requires absorbing noising");
  }
  const auto coord_sched = model.coord_schedule();
  const auto edge_sched = model.edge_schedule();
  const CounterRng root(options.seed);

  std::vector<GeneratedGraph> out(static_cast<std::size_t>(options.count));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (int i = next++; i < options.count; i = next++) {
      try {
        const auto start = std::chrono::steady_clock::now();
        const CounterRng chain = root.stream(static_cast<std::uint64_t>(i));
        int n = options.nodes.value_or(0);
        if (!options.nodes) {
          n = model.node_counts[chain.stream("nodes").bits(0) % model.node_counts.size()];
        }
        const PointCloud coords = sample_coords(model.coord, n, coord_sched, chain.stream("coords"));
        SamplerOptions sampler;
        sampler.single_precision = options.single_precision;
        auto edges = reverse_sample(model.edge, coords, tm, edge_sched, options.projector, chain.stream("edges"), sampler);
        auto& slot = out[static_cast<std::size_t>(i)];
        slot.graph = SpatialGraph(model.normalizer.denormalize(coords), edges.graph.edges());
        slot.log = edges.log;
        slot.seconds = seconds_since(start);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = options.count;
      }
    }
  };
  int threads = options.threads > 0 ? options.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, std::max(1, options.count));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

EdgeSample complete_graph(const Model& model, const SpatialGraph& partial, const ProjectorConfig& cfg, int steps,
                          std::uint64_t seed, bool single_precision) {
  const SpatialGraph normalized(model.normalizer.normalize(partial.coords()), partial.edges());
  SamplerOptions sampler;
  sampler.single_precision = single_precision;
  auto result = link_predict(model.edge, normalized, model.transition(NoisingKind::absorbing), model.edge_schedule(),
                             cfg, steps, CounterRng(seed).stream("linkpredict"), sampler);
  result.graph = SpatialGraph(partial.coords(), result.graph.edges());
  return result;
}

SpatialGraph drop_edges(const SpatialGraph& g, double fraction, std::uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0) throw std::invalid_argument("drop_edges: fraction outside [0, 1]");
  const auto& edges = g.edges();
  std::vector<std::size_t> order(edges.size());
  std::iota(order.begin(), order.end(), 0);
  auto rng = CounterRng(seed).stream("drop").engine();
  std::shuffle(order.begin(), order.end(), rng);
  const auto removed = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(edges.size())));
  std::vector<Edge> kept;
  for (std::size_t k = removed; k < order.size(); ++k) kept.push_back(edges[order[k]]);
  return SpatialGraph(g.coords(), kept);
}

}  // namespace sgdiff

/* SPDX-License-Identifier: Apache-2.0 */
// Synthetic labeled spatial graphs and on-disk corpora.
#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sgdiff/graph.hpp"

namespace sgdiff {

inline constexpr int kTreeLevels = 4;

/// Airway-like tree of n nodes. Edge labels are depth levels 1..levels,
/// non-decreasing away from the root by at most one per edge, so every tree
/// is valid under OmegaMatrix::hierarchy(levels).
SpatialGraph gen_airway_tree(int n, std::mt19937_64& rng, int levels = kTreeLevels);

/// Tree label of an edge whose child endpoint sits at `depth` (root edge = 1).
int tree_level(int depth, int levels = kTreeLevels);

struct TemplateSpec {
  SpatialGraph graph;
  std::vector<std::string> labels;
  OmegaMatrix omega;
  double jitter = 0.05;   // std-dev of per-coordinate Gaussian noise
  double dropout = 0.1;   // per-edge deletion probability
};

/// Ring-plus-branches template with six vessel labels; Omega permits exactly
/// the label pairs that meet in the template.
TemplateSpec cow_template();

/// Jittered template with random edge drop-out.
SpatialGraph gen_cow_like(const TemplateSpec& spec, std::mt19937_64& rng);

struct Corpus {
  std::vector<SpatialGraph> graphs;
  std::vector<std::string> labels;  // alphabet for labels 1..size()

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

Corpus gen_tree_corpus(int count, int min_nodes, int max_nodes, std::uint64_t seed);
Corpus gen_cow_corpus(int count, const TemplateSpec& spec, std::uint64_t seed);

std::vector<std::string> tree_labels(int levels = kTreeLevels);

/// DIR/corpus.json (label alphabet, count) plus DIR/graph_NNNN.json per graph.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);

/// Loads every graph_*.json in name order. A directory without graphs gives an
/// empty corpus. Errors name the offending file.
Corpus load_corpus(const std::filesystem::path& dir);

}  // namespace sgdiff

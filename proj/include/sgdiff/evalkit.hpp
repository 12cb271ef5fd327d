/* SPDX-License-Identifier: Apache-2.0 */
// Corpus statistics and scores for generated graphs.
#pragma once

#include <span>
#include <string>
#include <vector>

#include "sgdiff/graph.hpp"
#include "sgdiff/graph_io.hpp"

namespace sgdiff {

struct GraphStats {
  std::vector<int> degrees;     // per node
  std::vector<int> degree_histogram;  // [d] = number of nodes of degree d
  int edge_count = 0;
  std::vector<double> lengths;
  std::vector<double> angles;   // degrees, all incident-edge pairs per node
  int zero_length_edges = 0;    // excluded from angles
  int betti0 = 0;
  int betti1 = 0;
};

GraphStats graph_stats(const SpatialGraph& g);

enum class Feature { degree, edge_count, length, angle };

std::string to_string(Feature f);

/// KL(reference || generated) over histograms binned on the reference range,
/// with one pseudo-count per bin on both sides. Degree and edge count use
/// unit-width integer bins; `bins` applies to the continuous features.
double kl_feature(std::span<const GraphStats> reference, std::span<const GraphStats> generated, Feature feature,
                  int bins = 50);

/// Percentage of graphs with no Omega violation (and no cycle if `forest`).
double validity_rate(std::span<const SpatialGraph> graphs, const OmegaMatrix* omega, bool forest);

struct LinkPredictionScore {
  double balanced_accuracy = 0.0;  // percent
  double macro_f1 = 0.0;           // in [0, 1]
  std::size_t pairs = 0;
};

/// Scores the pairs absent from `input` as a c-class problem (no-edge = class 0).
LinkPredictionScore link_pred_metrics(const SpatialGraph& predicted, const SpatialGraph& truth,
                                      const SpatialGraph& input);

struct CorpusComparison {
  double kl_degree = 0.0;  // all KL values scaled by 1e3
  double kl_edges = 0.0;
  double kl_length = 0.0;
  double kl_angle = 0.0;
  double betti0_diff = 0.0;  // |mean reference - mean generated|
  double betti1_diff = 0.0;
  double validity = 0.0;     // percent, over the generated corpus
  std::size_t reference_size = 0;
  std::size_t generated_size = 0;
};

CorpusComparison compare_corpora(std::span<const SpatialGraph> reference, std::span<const SpatialGraph> generated,
                                 const OmegaMatrix* omega, bool forest, int bins = 50);

json to_json(const CorpusComparison& c);

}  // namespace sgdiff

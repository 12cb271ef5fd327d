/* SPDX-License-Identifier: Apache-2.0 */
// JSON graph and Omega files.
//
// Graph:  {"nodes": [[x,y,z], ...], "edges": [[i, j, label], ...], "meta": {...}}
// Omega:  {"labels": ["a", "b", ...], "matrix": [[0,1,...], ...]}
#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "sgdiff/graph.hpp"

namespace sgdiff {

using json = nlohmann::json;

json graph_to_json(const SpatialGraph& g, const json& meta = json::object());

/// `max_label` of 0 leaves labels unbounded above. `where` prefixes error messages.
SpatialGraph graph_from_json(const json& doc, int max_label = 0, const std::string& where = "graph");

json omega_to_json(const OmegaMatrix& omega);
OmegaMatrix omega_from_json(const json& doc, const std::string& where = "omega");

json read_json_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames, so readers never see partial output.
void write_json_file(const std::filesystem::path& path, const json& doc, int indent = -1);

SpatialGraph read_graph(const std::filesystem::path& path, int max_label = 0);
void write_graph(const std::filesystem::path& path, const SpatialGraph& g, const json& meta = json::object());

OmegaMatrix read_omega(const std::filesystem::path& path);
void write_omega(const std::filesystem::path& path, const OmegaMatrix& omega);

}  // namespace sgdiff

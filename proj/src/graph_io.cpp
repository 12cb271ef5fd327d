/* SPDX-License-Identifier: Apache-2.0 */
#include "sgdiff/graph_io.hpp"

#include <cmath>
#include <fstream>

namespace sgdiff {

json graph_to_json(const SpatialGraph& g, const json& meta) {
  json nodes = json::array();
  for (Index v = 0; v < g.node_count(); ++v) {
    nodes.push_back({g.coords()(v, 0), g.coords()(v, 1), g.coords()(v, 2)});
  }
  json edges = json::array();
  for (const auto& e : g.edges()) edges.push_back({e.i, e.j, e.label});
  json doc = {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
  if (!meta.is_null() && !meta.empty()) doc["meta"] = meta;
  return doc;
}

SpatialGraph graph_from_json(const json& doc, int max_label, const std::string& where) {
  auto fail = [&](const std::string& what) { throw GraphError(where + ": " + what); };
  if (!doc.is_object()) fail("expected a JSON object");
  if (!doc.contains("nodes") || !doc["nodes"].is_array()) fail("missing \"nodes\" array");
  const auto& nodes = doc["nodes"];
  Coords coords(static_cast<Eigen::Index>(nodes.size()), 3);
  for (std::size_t v = 0; v < nodes.size(); ++v) {
    const auto& p = nodes[v];
    if (!p.is_array() || p.size() != 3) fail("nodes[" + std::to_string(v) + "]: expected [x, y, z]");
    for (std::size_t k = 0; k < 3; ++k) {
      if (!p[k].is_number()) fail("nodes[" + std::to_string(v) + "]: non-numeric coordinate");
      const double x = p[k].get<double>();
      if (!std::isfinite(x)) fail("nodes[" + std::to_string(v) + "]: non-finite coordinate");
      coords(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(k)) = x;
    }
  }
  SpatialGraph g(std::move(coords));
  if (!doc.contains("edges")) return g;
  if (!doc["edges"].is_array()) fail("\"edges\" must be an array");
  const auto& edges = doc["edges"];
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto& e = edges[k];
    const std::string tag = "edges[" + std::to_string(k) + "]";
    if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() || !e[1].is_number_integer() ||
        !e[2].is_number_integer()) {
      fail(tag + ": expected [i, j, label] integers");
    }
    const auto i = e[0].get<long long>();
    const auto j = e[1].get<long long>();
    const auto label = e[2].get<long long>();
    if (i < 0 || j < 0 || i >= g.node_count() || j >= g.node_count()) fail(tag + ": node index out of range");
    if (label < 1 || (max_label > 0 && label > max_label)) {
      fail(tag + ": label " + std::to_string(label) + " out of range 1.." +
           (max_label > 0 ? std::to_string(max_label) : std::string("inf")));
    }
    try {
      g.add_edge(static_cast<Index>(i), static_cast<Index>(j), static_cast<Label>(label));
    } catch (const GraphError& err) {
      fail(tag + ": " + err.what());
    }
  }
  return g;
}

json omega_to_json(const OmegaMatrix& omega) {
  json rows = json::array();
  for (int a = 0; a < omega.label_count(); ++a) {
    json row = json::array();
    for (int b = 0; b < omega.label_count(); ++b) row.push_back(omega.matrix()(a, b));
    rows.push_back(std::move(row));
  }
  return {{"labels", omega.labels()}, {"matrix", std::move(rows)}};
}

OmegaMatrix omega_from_json(const json& doc, const std::string& where) {
  auto fail = [&](const std::string& what) { throw GraphError(where + ": " + what); };
  if (!doc.is_object() || !doc.contains("matrix") || !doc["matrix"].is_array()) {
    fail("missing \"matrix\" array");
  }
  const auto& rows = doc["matrix"];
  const auto size = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXi m(size, size);
  for (Eigen::Index a = 0; a < size; ++a) {
    const auto& row = rows[static_cast<std::size_t>(a)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != size) {
      fail("matrix row " + std::to_string(a) + " has wrong length");
    }
    for (Eigen::Index b = 0; b < size; ++b) {
      const auto& x = row[static_cast<std::size_t>(b)];
      if (!x.is_number_integer()) fail("matrix entries must be 0 or 1");
      m(a, b) = x.get<int>();
    }
  }
  std::vector<std::string> labels;
  if (doc.contains("labels")) {
    if (!doc["labels"].is_array()) fail("\"labels\" must be an array of strings");
    for (const auto& s : doc["labels"]) {
      if (!s.is_string()) fail("\"labels\" must be an array of strings");
      labels.push_back(s.get<std::string>());
    }
  }
  try {
    return OmegaMatrix(std::move(m), std::move(labels));
  } catch (const GraphError& err) {
    fail(err.what());
  }
  return {};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GraphError(path.string() + ": cannot open");
  try {
    return json::parse(in);
  } catch (const json::parse_error& err) {
    throw GraphError(path.string() + ": " + err.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& doc, int indent) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw GraphError(path.string() + ": cannot write");
    out << doc.dump(indent) << '\n';
    if (!out) throw GraphError(path.string() + ": write failed");
  }
  std::filesystem::rename(tmp, path);
}

SpatialGraph read_graph(const std::filesystem::path& path, int max_label) {
  return graph_from_json(read_json_file(path), max_label, path.filename().string());
}

void write_graph(const std::filesystem::path& path, const SpatialGraph& g, const json& meta) {
  write_json_file(path, graph_to_json(g, meta));
}

OmegaMatrix read_omega(const std::filesystem::path& path) {
  return omega_from_json(read_json_file(path), path.filename().string());
}

void write_omega(const std::filesystem::path& path, const OmegaMatrix& omega) {
  write_json_file(path, omega_to_json(omega), 2);
}

}  // namespace sgdiff

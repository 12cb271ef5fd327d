/* SPDX-License-Identifier: Apache-2.0 */
#include "sgdiff/checkpoint.hpp"

#include <stdexcept>

namespace sgdiff {

TransitionModel Model::transition(NoisingKind kind) const {
  switch (kind) {
    case NoisingKind::absorbing: return TransitionModel::absorbing(classes());
    case NoisingKind::uniform: return TransitionModel::uniform(classes());
    case NoisingKind::marginal:
      if (class_frequencies.size() != classes()) throw std::runtime_error("model has no class frequencies");
      return TransitionModel::marginal(class_frequencies);
  }
  return TransitionModel::absorbing(classes());
}

namespace {

json params_to_json(const ad::Parameters<double>& p) {
  json out = json::object();
  for (int s = 0; s < p.size(); ++s) {
    const auto& v = p[s];
    out[p.name(s)] = json{{"rows", v.rows()}, {"cols", v.cols()},
                          {"data", std::vector<double>(v.data(), v.data() + v.size())}};
  }
  return out;
}

void params_from_json(ad::Parameters<double>& p, const json& doc, const std::string& what) {
  if (!doc.is_object() || static_cast<int>(doc.size()) != p.size()) {
    throw std::runtime_error("checkpoint: " + what + " parameter set does not match its config");
  }
  for (int s = 0; s < p.size(); ++s) {
    const auto it = doc.find(p.name(s));
    if (it == doc.end()) throw std::runtime_error("checkpoint: missing parameter " + p.name(s));
    auto& v = p[s];
    const auto data = it->at("data").get<std::vector<double>>();
    if (it->at("rows").get<Eigen::Index>() != v.rows() || it->at("cols").get<Eigen::Index>() != v.cols() ||
        static_cast<Eigen::Index>(data.size()) != v.size()) {
      throw std::runtime_error("checkpoint: shape mismatch for " + p.name(s));
    }
    std::copy(data.begin(), data.end(), v.data());
  }
}

}  // namespace

json model_to_json(const Model& m) {
  return json{
      {"format", kCheckpointFormat},
      {"schedule", {{"shape", to_string(m.shape)}, {"steps", m.steps}}},
      {"noising", to_string(m.noising)},
      {"class_frequencies", std::vector<double>(m.class_frequencies.data(),
                                                m.class_frequencies.data() + m.class_frequencies.size())},
      {"normalization", {{"mean", {m.normalizer.mean(0), m.normalizer.mean(1), m.normalizer.mean(2)}},
                         {"scale", m.normalizer.scale}}},
      {"labels", m.labels},
      {"node_counts", m.node_counts},
      {"coord",
       {{"hidden", m.coord.config().hidden},
        {"bandwidths", m.coord.config().bandwidths},
        {"params", params_to_json(m.coord.params())}}},
      {"edge",
       {{"classes", m.edge.config().classes},
        {"hidden", m.edge.config().hidden},
        {"blocks", m.edge.config().blocks},
        {"params", params_to_json(m.edge.params())}}},
  };
}

Model model_from_json(const json& doc) {
  if (doc.value("format", std::string()) != kCheckpointFormat) {
    throw std::runtime_error(std::string("checkpoint: expected format ") + kCheckpointFormat);
  }
  try {
    Model m;
    m.shape = parse_schedule_shape(doc.at("schedule").at("shape").get<std::string>());
    m.steps = doc.at("schedule").at("steps").get<int>();
    m.noising = parse_noising_kind(doc.at("noising").get<std::string>());
    const auto freq = doc.at("class_frequencies").get<std::vector<double>>();
    m.class_frequencies = Eigen::Map<const Eigen::VectorXd>(freq.data(), static_cast<Eigen::Index>(freq.size()));
    const auto mean = doc.at("normalization").at("mean").get<std::vector<double>>();
    if (mean.size() != 3) throw std::runtime_error("checkpoint: normalization mean must have 3 entries");
    m.normalizer.mean = Eigen::RowVector3d(mean[0], mean[1], mean[2]);
    m.normalizer.scale = doc.at("normalization").at("scale").get<double>();
    m.labels = doc.at("labels").get<std::vector<std::string>>();
    m.node_counts = doc.at("node_counts").get<std::vector<int>>();

    const auto& c = doc.at("coord");
    m.coord = CoordDenoiser(CoordDenoiserConfig{.hidden = c.at("hidden").get<int>(),
                                                .bandwidths = c.value("bandwidths", std::vector<double>{})},
                            0);
    params_from_json(m.coord.params(), c.at("params"), "coord");
    const auto& e = doc.at("edge");
    m.edge = EdgeDenoiser(EdgeDenoiserConfig{.classes = e.at("classes").get<int>(),
                                             .hidden = e.at("hidden").get<int>(),
                                             .blocks = e.at("blocks").get<int>()},
                          0);
    params_from_json(m.edge.params(), e.at("params"), "edge");
    if (m.classes() != static_cast<int>(m.labels.size()) + 1) {
      throw std::runtime_error("checkpoint: class count does not match label alphabet");
    }
    return m;
  } catch (const json::exception& err) {
    throw std::runtime_error(std::string("checkpoint: ") + err.what());
  }
}

void save_model(const std::filesystem::path& path, const Model& m) { write_json_file(path, model_to_json(m)); }

Model load_model(const std::filesystem::path& path) { return model_from_json(read_json_file(path)); }

}  // namespace sgdiff

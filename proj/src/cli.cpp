/* SPDX-License-Identifier: Apache-2.0 */
#include "sgdiff/cli.hpp"

#ifdef __GLIBC__
#include <malloc.h>
#endif
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <stdexcept>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "sgdiff/datagen.hpp"
#include "sgdiff/evalkit.hpp"
#include "sgdiff/graph_io.hpp"
#include "sgdiff/pipeline.hpp"

namespace sgdiff {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  // shared
  std::string out;
  std::string omega;
  std::string structural = "none";
  std::uint64_t seed = 0;
  int threads = 0;

  // datagen
  int count = 500;
  int min_nodes = 40;
  int max_nodes = 120;
  double jitter = 0.05;
  double dropout = 0.1;

  // train
  std::string data;
  std::string schedule = "linear";
  int steps = 500;
  std::string noising = "absorbing";
  double lr = 3e-4;
  double weight_decay = 1e-2;
  int epochs = 200;
  int coord_epochs = 200;
  int batch = 4;
  int blocks = 3;
  int hidden = 32;
  int coord_hidden = 64;

  // generate / linkpredict / evaluate / validate
  std::string model;
  int k = 4;
  std::string sample_noising;
  int nodes = 0;
  std::string input;
  std::string reference;
  std::string generated;
  int bins = 50;
  int link_steps = 100;
  bool double_precision = false;
};

json versions() {
  return json{{"sgdiff", kVersion},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"compiler", __VERSION__}};
}

// SGDIFF_OUT_DIR replaces the directory part of every output path.
fs::path output_dir(const std::string& dir) {
  if (const char* env = std::getenv("SGDIFF_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return dir;
}

fs::path output_file(const std::string& file) {
  if (const char* env = std::getenv("SGDIFF_OUT_DIR"); env != nullptr && *env != '\0') {
    return fs::path(env) / fs::path(file).filename();
  }
  return file;
}

void write_manifest(const fs::path& dir, const std::string& command, json config, double seconds) {
  fs::create_directories(dir.empty() ? fs::path(".") : dir);
  write_json_file((dir.empty() ? fs::path(".") : dir) / (command + ".manifest.json"),
                  json{{"command", command}, {"config", std::move(config)}, {"versions", versions()},
                       {"seconds", seconds}},
                  2);
}

ProjectorConfig projector_config(const Options& o, int labels) {
  ProjectorConfig cfg;
  if (!o.omega.empty()) {
    cfg.omega = read_omega(o.omega);
    if (labels > 0 && cfg.omega->label_count() != labels) {
      throw UsageError("omega has " + std::to_string(cfg.omega->label_count()) + " labels, model has " +
                       std::to_string(labels));
    }
  }
  cfg.structural = parse_structural(o.structural);
  cfg.k = o.k;
  return cfg;
}

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int cmd_datagen(const Options& o, bool trees, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir = output_dir(o.out);
  Corpus corpus;
  OmegaMatrix omega;
  if (trees) {
    corpus = gen_tree_corpus(o.count, o.min_nodes, o.max_nodes, o.seed);
    const auto labels = tree_labels();
    omega = OmegaMatrix(OmegaMatrix::hierarchy(kTreeLevels).matrix(), labels);
  } else {
    auto spec = cow_template();
    spec.jitter = o.jitter;
    spec.dropout = o.dropout;
    corpus = gen_cow_corpus(o.count, spec, o.seed);
    omega = spec.omega;
  }
  save_corpus(corpus, dir);
  write_omega(dir / "omega.json", omega);
  json cfg{{"kind", trees ? "trees" : "cow"}, {"count", o.count}, {"seed", o.seed}, {"out", dir.string()}};
  if (trees) {
    cfg["min_nodes"] = o.min_nodes;
    cfg["max_nodes"] = o.max_nodes;
  } else {
    cfg["jitter"] = o.jitter;
    cfg["dropout"] = o.dropout;
  }
  write_manifest(dir, "datagen", cfg, elapsed(start));
  out << "wrote " << corpus.graphs.size() << " graphs to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const Corpus corpus = load_corpus(o.data);
  if (corpus.graphs.empty()) throw UsageError(o.data + ": no graphs to train on");
  TrainOptions opt;
  opt.shape = parse_schedule_shape(o.schedule);
  if (opt.shape == ScheduleShape::custom) throw UsageError("--schedule must be linear or cosine");
  opt.steps = o.steps;
  opt.noising = parse_noising_kind(o.noising);
  opt.coord.hidden = o.coord_hidden;
  opt.edge.hidden = o.hidden;
  opt.edge.blocks = o.blocks;
  for (auto* cfg : {&opt.coord_train, &opt.edge_train}) {
    cfg->lr = o.lr;
    cfg->weight_decay = o.weight_decay;
    cfg->batch = o.batch;
  }
  opt.coord_train.epochs = o.coord_epochs;
  opt.edge_train.epochs = o.epochs;
  opt.seed = o.seed;
  opt.edge_train.on_epoch = [&](int epoch, double loss) {
    out << "edges epoch " << epoch + 1 << " loss " << loss << "\n" << std::flush;
  };
  opt.coord_train.on_epoch = [&](int epoch, double loss) {
    out << "coords epoch " << epoch + 1 << " loss " << loss << "\n" << std::flush;
  };
  TrainReport report;
  const Model model = train_model(corpus, opt, &report);
  const fs::path path = output_file(o.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_model(path, model);
  write_manifest(path.parent_path(), "train",
                 json{{"data", o.data}, {"out", path.string()}, {"schedule", o.schedule}, {"steps", o.steps},
                      {"noising", o.noising}, {"lr", o.lr}, {"weight_decay", o.weight_decay},
                      {"epochs", o.epochs}, {"coord_epochs", o.coord_epochs}, {"batch", o.batch},
                      {"blocks", o.blocks}, {"hidden", o.hidden}, {"coord_hidden", o.coord_hidden},
                      {"seed", o.seed}, {"coord_loss", report.coord_curve}, {"edge_loss", report.edge_curve},
                      {"coord_seconds", report.coord_seconds}, {"edge_seconds", report.edge_seconds}},
                 elapsed(start));
  out << "saved model to " << path.string() << "\n";
  return kExitOk;
}

int cmd_generate(const Options& o, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const Model model = load_model(o.model);
  GenerateOptions opt;
  opt.count = o.count;
  opt.seed = o.seed;
  opt.projector = projector_config(o, static_cast<int>(model.labels.size()));
  if (!o.sample_noising.empty()) opt.noising = parse_noising_kind(o.sample_noising);
  if (o.nodes > 0) opt.nodes = o.nodes;
  opt.threads = o.threads;
  opt.single_precision = !o.double_precision;
  if (opt.projector.active() && opt.noising.value_or(model.noising) != NoisingKind::absorbing) {
    throw UsageError("constraints require absorbing noising");
  }
  const auto samples = generate(model, opt);

  const fs::path dir = output_dir(o.out);
  fs::create_directories(dir);
  const OmegaMatrix* omega = opt.projector.omega ? &*opt.projector.omega : nullptr;
  const bool forest = opt.projector.structural == Structural::forest;
  InterventionLog total;
  json per_sample = json::array();
  std::vector<SpatialGraph> graphs;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    char name[32];
    std::snprintf(name, sizeof name, "graph_%04zu.json", i);
    write_graph(dir / name, s.graph, json{{"index", i}, {"seed", o.seed}});
    const bool valid = (omega == nullptr || check_omega(s.graph, *omega).empty()) &&
                       (!forest || betti1(s.graph) == 0);
    per_sample.push_back(json{{"file", name}, {"nodes", s.graph.node_count()}, {"edges", s.graph.edge_count()},
                              {"candidates", s.log.candidates}, {"accepted", s.log.accepted},
                              {"fixed", s.log.fixed}, {"rejected", s.log.rejected},
                              {"intervention_rate", s.log.rate()}, {"valid", valid}, {"seconds", s.seconds}});
    total += s.log;
    graphs.push_back(s.graph);
  }
  const double validity = validity_rate(graphs, omega, forest);
  write_json_file(dir / "run_report.json",
                  json{{"count", samples.size()},
                       {"intervention_rate", total.rate()},
                       {"candidates", total.candidates},
                       {"accepted", total.accepted},
                       {"fixed", total.fixed},
                       {"rejected", total.rejected},
                       {"rejected_structural", total.rejected_structural},
                       {"validity_pct", validity},
                       {"seconds", elapsed(start)},
                       {"samples", per_sample}},
                  2);
  write_manifest(dir, "generate",
                 json{{"model", o.model}, {"count", o.count}, {"omega", o.omega}, {"structural", o.structural},
                      {"k", o.k}, {"seed", o.seed}, {"noising", o.sample_noising.empty() ? to_string(model.noising)
                                                                                        : o.sample_noising},
                      {"threads", o.threads}, {"out", dir.string()}},
                 elapsed(start));
  out << "wrote " << samples.size() << " graphs to " << dir.string() << " (validity " << validity
      << "%, intervention rate " << total.rate() << ")\n";
  return kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const Corpus ref = load_corpus(o.reference);
  const Corpus gen = load_corpus(o.generated);
  if (ref.graphs.empty() || gen.graphs.empty()) throw UsageError("evaluate: both corpora must be non-empty");
  const auto cfg = projector_config(o, 0);
  const auto cmp = compare_corpora(ref.graphs, gen.graphs, cfg.omega ? &*cfg.omega : nullptr,
                                   cfg.structural == Structural::forest, o.bins);
  const json report = to_json(cmp);
  const fs::path path = output_file(o.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_json_file(path, report, 2);
  write_manifest(path.parent_path(), "evaluate",
                 json{{"reference", o.reference}, {"generated", o.generated}, {"omega", o.omega},
                      {"structural", o.structural}, {"bins", o.bins}, {"out", path.string()}},
                 elapsed(start));
  out << report.dump(2) << "\n";
  return kExitOk;
}

int cmd_linkpredict(const Options& o, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const Model model = load_model(o.model);
  const auto cfg = projector_config(o, static_cast<int>(model.labels.size()));
  const SpatialGraph partial = read_graph(o.input, static_cast<int>(model.labels.size()));
  if (o.link_steps < 1 || o.link_steps > model.steps) {
    throw UsageError("--steps must be in 1.." + std::to_string(model.steps));
  }
  const auto result = complete_graph(model, partial, cfg, o.link_steps, o.seed, !o.double_precision);
  const fs::path path = output_file(o.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_graph(path, result.graph, json{{"source", fs::path(o.input).filename().string()}, {"steps", o.link_steps}});
  write_manifest(path.parent_path(), "linkpredict",
                 json{{"model", o.model}, {"input", o.input}, {"steps", o.link_steps}, {"omega", o.omega},
                      {"structural", o.structural}, {"k", o.k}, {"seed", o.seed}, {"out", path.string()},
                      {"added_edges", result.graph.edge_count() - partial.edge_count()},
                      {"intervention_rate", result.log.rate()}},
                 elapsed(start));
  out << "added " << result.graph.edge_count() - partial.edge_count() << " edges, wrote " << path.string() << "\n";
  return kExitOk;
}

int cmd_validate(const Options& o, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const auto cfg = projector_config(o, 0);
  const SpatialGraph g = read_graph(o.input, cfg.omega ? cfg.omega->label_count() : 0);
  const auto report = check_constraints(g, cfg.omega ? &*cfg.omega : nullptr, cfg.structural == Structural::forest);
  const fs::path dir = output_dir(".");
  write_manifest(dir, "validate",
                 json{{"input", o.input}, {"omega", o.omega}, {"structural", o.structural},
                      {"violations", report.violations.size()}, {"cycle_edges", report.cycle_edges.size()}},
                 elapsed(start));
  if (report.empty()) {
    out << "valid\n";
    return kExitOk;
  }
  for (const auto& v : report.violations) {
    out << "omega node " << v.center << ": edge (" << v.first.i << "," << v.first.j << ") label " << v.first.label
        << " conflicts with edge (" << v.second.i << "," << v.second.j << ") label " << v.second.label << "\n";
  }
  for (const auto& e : report.cycle_edges) {
    out << "cycle edge (" << e.i << "," << e.j << ") label " << e.label << "\n";
  }
  return kExitInvalid;
}

void print_error(std::ostream& err, const std::string& kind, const std::string& message) {
  err << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

}  // namespace

void tune_allocator() {
#ifdef __GLIBC__
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Constrained diffusion generator for labeled spatial graphs", "sgdiff"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  auto* datagen = app.add_subcommand("datagen", "Generate a synthetic corpus");
  datagen->require_subcommand(1);
  auto* trees = datagen->add_subcommand("trees", "Airway-like trees with four depth levels");
  auto* cow = datagen->add_subcommand("cow", "Ring-plus-branches graphs with six vessel labels");
  for (auto* sub : {trees, cow}) {
    sub->add_option("--count", o.count, "Number of graphs")->capture_default_str()->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", o.seed, "Random seed")->required();
    sub->add_option("--out", o.out, "Output directory")->required();
  }
  trees->add_option("--min-nodes", o.min_nodes, "Smallest tree")->capture_default_str()->check(CLI::Range(2, 100000));
  trees->add_option("--max-nodes", o.max_nodes, "Largest tree")->capture_default_str()->check(CLI::Range(2, 100000));
  cow->add_option("--jitter", o.jitter, "Coordinate noise std-dev")->capture_default_str()->check(
      CLI::NonNegativeNumber);
  cow->add_option("--dropout", o.dropout, "Per-edge deletion probability")->capture_default_str()->check(
      CLI::Range(0.0, 1.0));

  auto* train = app.add_subcommand("train", "Fit the coordinate and edge denoisers");
  train->set_config("--config", "", "Read options from a key = value file");
  train->add_option("--data", o.data, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--out", o.out, "Checkpoint path")->required();
  train->add_option("--seed", o.seed, "Random seed")->required();
  train->add_option("--schedule", o.schedule, "linear|cosine")->capture_default_str()->check(
      CLI::IsMember({"linear", "cosine"}));
  train->add_option("--steps", o.steps, "Diffusion steps T")->capture_default_str()->check(CLI::Range(1, 100000));
  train->add_option("--noising", o.noising, "absorbing|uniform|marginal")->capture_default_str()->check(
      CLI::IsMember({"absorbing", "uniform", "marginal"}));
  train->add_option("--lr", o.lr, "AdamW learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--weight-decay", o.weight_decay, "AdamW weight decay")->capture_default_str()->check(
      CLI::NonNegativeNumber);
  train->add_option("--epochs", o.epochs, "Edge denoiser epochs")->capture_default_str()->check(
      CLI::NonNegativeNumber);
  train->add_option("--coord-epochs", o.coord_epochs, "Coordinate denoiser epochs")->capture_default_str()->check(
      CLI::NonNegativeNumber);
  train->add_option("--batch", o.batch, "Minibatch size")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--blocks", o.blocks, "Edge denoiser blocks (L)")->capture_default_str()->check(
      CLI::PositiveNumber);
  train->add_option("--hidden", o.hidden, "Edge denoiser width (h)")->capture_default_str()->check(
      CLI::PositiveNumber);
  train->add_option("--coord-hidden", o.coord_hidden, "Coordinate denoiser width")->capture_default_str()->check(
      CLI::PositiveNumber);

  auto* gen = app.add_subcommand("generate", "Sample graphs from a trained model");
  gen->add_option("--model", o.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  gen->add_option("--count", o.count, "Number of samples")->capture_default_str()->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", o.seed, "Random seed")->required();
  gen->add_option("--out", o.out, "Output directory")->required();
  gen->add_option("--noising", o.sample_noising, "Override the sampling noising kind")->check(
      CLI::IsMember({"absorbing", "uniform", "marginal"}));
  gen->add_option("--nodes", o.nodes, "Fixed node count (default: training sizes)")->check(CLI::PositiveNumber);
  gen->add_option("--threads", o.threads, "Worker threads (0: all cores)")->capture_default_str()->check(
      CLI::NonNegativeNumber);

  auto* link = app.add_subcommand("linkpredict", "Complete a partial graph");
  link->add_option("--model", o.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  link->add_option("--input", o.input, "Partial graph JSON")->required()->check(CLI::ExistingFile);
  link->add_option("--steps", o.link_steps, "Reverse steps from the partial graph")->capture_default_str();
  link->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  link->add_option("--out", o.out, "Completed graph JSON")->required();

  for (auto* sub : {gen, link}) {
    sub->add_option("--omega", o.omega, "Omega JSON")->check(CLI::ExistingFile);
    sub->add_option("--structural", o.structural, "forest|none")->capture_default_str()->check(
        CLI::IsMember({"forest", "none"}));
    sub->add_option("--k", o.k, "Label resampling budget")->capture_default_str()->check(CLI::NonNegativeNumber);
    sub->add_flag("--double", o.double_precision, "Evaluate the edge denoiser in double precision");
  }

  auto* eval = app.add_subcommand("evaluate", "Compare a generated corpus with a reference corpus");
  eval->add_option("--reference", o.reference, "Reference corpus directory")->required()->check(
      CLI::ExistingDirectory);
  eval->add_option("--generated", o.generated, "Generated corpus directory")->required()->check(
      CLI::ExistingDirectory);
  eval->add_option("--bins", o.bins, "Histogram bins for continuous features")->capture_default_str()->check(
      CLI::PositiveNumber);
  eval->add_option("--out", o.out, "Report JSON")->required();

  auto* validate = app.add_subcommand("validate", "Check a graph against constraints");
  validate->add_option("--input", o.input, "Graph JSON")->required()->check(CLI::ExistingFile);

  for (auto* sub : {eval, validate}) {
    sub->add_option("--omega", o.omega, "Omega JSON")->check(CLI::ExistingFile);
    sub->add_option("--structural", o.structural, "forest|none")->capture_default_str()->check(
        CLI::IsMember({"forest", "none"}));
  }

  std::vector<std::string> argv_store{"sgdiff"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    print_error(err, "usage", e.what());
    return kExitUsage;
  }

  try {
    if (trees->parsed()) return cmd_datagen(o, true, out);
    if (cow->parsed()) return cmd_datagen(o, false, out);
    if (train->parsed()) return cmd_train(o, out);
    if (gen->parsed()) return cmd_generate(o, out);
    if (eval->parsed()) return cmd_evaluate(o, out);
    if (link->parsed()) return cmd_linkpredict(o, out);
    if (validate->parsed()) return cmd_validate(o, out);
    print_error(err, "usage", "no subcommand");
    return kExitUsage;
  } catch (const ValidationError& e) {
    print_error(err, "validation", e.what());
    return kExitInvalid;
  } catch (const UsageError& e) {
    print_error(err, "usage", e.what());
    return kExitUsage;
  } catch (const GraphError& e) {
    print_error(err, "input", e.what());
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    print_error(err, "usage", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
    return kExitInternal;
  }
}

}  // namespace sgdiff

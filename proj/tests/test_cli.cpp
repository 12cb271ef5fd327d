/* SPDX-License-Identifier: Apache-2.0 */
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sgdiff/cli.hpp"
#include "sgdiff/graph_io.hpp"
#include "support.hpp"

using namespace sgdiff;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("validate") {
  const auto dir = test::scratch_dir("cli_validate");
  setenv("SGDIFF_OUT_DIR", dir.c_str(), 1);
  write_omega(dir / "omega.json", OmegaMatrix::hierarchy(3));
  write_graph(dir / "good.json", test::path_graph({1, 2, 3}));
  write_graph(dir / "bad.json", test::path_graph({1, 3}));
  auto cyc = test::path_graph({1, 1, 1});
  cyc.add_edge(0, 3, 1);
  write_graph(dir / "cycle.json", cyc);
  const std::string omega = (dir / "omega.json").string();

  auto r = run({"validate", "--input", (dir / "good.json").string(), "--omega", omega, "--structural", "forest"});
  CHECK(r.code == 0);
  CHECK(r.out == "valid\n");
  CHECK(fs::exists(dir / "validate.manifest.json"));

  r = run({"validate", "--input", (dir / "bad.json").string(), "--omega", omega});
  CHECK(r.code == 2);
  CHECK(r.out.find("omega node 1") != std::string::npos);

  CHECK(run({"validate", "--input", (dir / "cycle.json").string(), "--omega", omega}).code == 0);
  r = run({"validate", "--input", (dir / "cycle.json").string(), "--structural", "forest"});
  CHECK(r.code == 2);
  CHECK(r.out.find("cycle edge") != std::string::npos);

  // labels beyond the Omega alphabet are an input error
  write_graph(dir / "wide.json", test::path_graph({1, 4}));
  r = run({"validate", "--input", (dir / "wide.json").string(), "--omega", omega});
  CHECK(r.code == 64);
  CHECK(json::parse(r.err).at("error") == "input");
  unsetenv("SGDIFF_OUT_DIR");
}

TEST_CASE("usage errors") {
  CHECK(run({}).code == 64);
  CHECK(run({"frobnicate"}).code == 64);
  CHECK(run({"--version"}).out == std::string(kVersion) + "\n");
  CHECK(run({"--help"}).code == 0);
  const auto r = run({"generate", "--model", "x.json", "--out", "somewhere"});
  CHECK(r.code == 64);
  CHECK(json::parse(r.err).at("error") == "usage");
  CHECK(run({"datagen", "trees", "--out", "x"}).code == 64);
}

TEST_CASE("datagen, train, generate, evaluate, linkpredict") {
  const auto dir = test::scratch_dir("cli_pipeline");
  const auto d = [&](const std::string& name) { return (dir / name).string(); };

  auto r = run({"datagen", "trees", "--count", "6", "--seed", "4", "--min-nodes", "6", "--max-nodes", "10", "--out",
                d("trees")});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "trees" / "graph_0005.json"));
  CHECK(fs::exists(dir / "trees" / "omega.json"));
  CHECK(fs::exists(dir / "trees" / "datagen.manifest.json"));

  r = run({"train", "--data", d("trees"), "--out", d("model.json"), "--seed", "1", "--steps", "12", "--epochs", "1",
           "--coord-epochs", "1", "--hidden", "8", "--blocks", "1", "--coord-hidden", "8"});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "train.manifest.json"));

  const std::vector<std::string> gen{"generate", "--model", d("model.json"), "--count", "3", "--seed", "5",
                                     "--omega", d("trees/omega.json"), "--structural", "forest"};
  auto a = gen;
  a.insert(a.end(), {"--out", d("gen_a"), "--threads", "1"});
  auto b = gen;
  b.insert(b.end(), {"--out", d("gen_b"), "--threads", "1"});
  auto c = gen;
  c.insert(c.end(), {"--out", d("gen_c"), "--threads", "3"});
  REQUIRE(run(a).code == 0);
  REQUIRE(run(b).code == 0);
  REQUIRE(run(c).code == 0);
  for (const char* f : {"graph_0000.json", "graph_0001.json", "graph_0002.json"}) {
    CHECK(slurp(dir / "gen_a" / f) == slurp(dir / "gen_b" / f));
    CHECK(slurp(dir / "gen_a" / f) == slurp(dir / "gen_c" / f));
  }
  const json report = read_json_file(dir / "gen_a" / "run_report.json");
  CHECK(report.at("count") == 3);

  r = run({"evaluate", "--reference", d("trees"), "--generated", d("gen_a"), "--out", d("eval.json")});
  REQUIRE(r.code == 0);
  CHECK(read_json_file(dir / "eval.json").contains("semantic_validity_pct"));

  r = run({"linkpredict", "--model", d("model.json"), "--input", d("trees/graph_0000.json"), "--steps", "5", "--out",
           d("done.json"), "--omega", d("trees/omega.json"), "--structural", "forest"});
  REQUIRE(r.code == 0);
  const auto in = read_graph(dir / "trees" / "graph_0000.json");
  const auto done = read_graph(dir / "done.json");
  for (const auto& e : in.edges()) CHECK(done.label_of(e.i, e.j) == e.label);

  auto bad = test::path_graph({1, 4});
  write_graph(dir / "bad.json", bad);
  r = run({"linkpredict", "--model", d("model.json"), "--input", d("bad.json"), "--steps", "5", "--out", d("x.json"),
           "--omega", d("trees/omega.json")});
  CHECK(r.code == 2);
  CHECK(json::parse(r.err).at("error") == "validation");

  // a model path that is not a checkpoint
  r = run({"generate", "--model", d("trees/omega.json"), "--seed", "1", "--out", d("gen_x")});
  CHECK(r.code != 0);
}

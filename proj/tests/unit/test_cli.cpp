#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "probekit/cli/commands.hpp"
#include "probekit/cli/config.hpp"
#include "probekit/core/error.hpp"
#include "probekit/detect/experiment.hpp"
#include "probekit/probing/loopback.hpp"

using namespace probekit;
using namespace probekit::cli;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "probekit");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

const char* kSmallVector = R"(seed: 7
zoo:
  archs:
    - {name: relu-32, hidden_layers: [32], activation: relu, weight_init_scale: 1.0}
    - {name: tanh-48, hidden_layers: [48], activation: tanh, weight_init_scale: 1.0}
    - {name: sigmoid-64, hidden_layers: [64], activation: sigmoid, weight_init_scale: 4.0}
  grid: {count: 4, samples_per_class: 12}
  train: {epochs: 5}
  fine_tune: {epochs: 2}
probes:
  architecture:
    pool: {rays: 16}
detect:
  repeats: 2
  forest: {n_trees: 20}
)";

fs::path small_config(const fs::path& dir) {
  write_text_file(dir / "small.yaml", kSmallVector);
  return dir / "small.yaml";
}

Json parse(const std::string& yaml) { return yaml_to_json(yaml, "test"); }

}  // namespace

TEST_CASE("yaml scalars: plain values are typed, quoted values stay strings") {
  const auto j = parse("a: 3\nb: '3'\nc: true\nd: \"true\"\ne: 0.5\nf: ~\ng: [1, x]\n");
  CHECK(j["a"] == 3);
  CHECK(j["b"] == "3");
  CHECK(j["c"] == true);
  CHECK(j["d"] == "true");
  CHECK(j["e"] == 0.5);
  CHECK(j["f"].is_null());
  CHECK(j["g"][1] == "x");
}

TEST_CASE("config parsing fills defaults and rejects unknown keys") {
  const auto base = ExperimentConfig();
  CHECK(base.archs.size() == 7);
  CHECK(base.architecture.layout == detect::VectorLayout::sorted);
  CHECK(base.dataset.probes.selection == Selection::jsd);

  const auto cfg = parse_config(parse("seed: 9\ndetect: {holdout: 0.25, forest: {n_trees: 7}}\n"), ".");
  CHECK(cfg.master_seed == 9);
  CHECK(cfg.holdout == 0.25);
  CHECK(cfg.forest.n_trees == 7);
  CHECK(cfg.repeats == base.repeats);

  try {
    parse_config(parse("detect: {forset: {n_trees: 7}}\n"), ".");
    FAIL("unknown key accepted");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("detect.forset") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config(parse("probes: {dataset: {selection: best}}\n"), "."), ValidationError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.yaml"), ValidationError);
}

TEST_CASE("the shipped configs parse") {
  const auto def = load_config(testing::source_dir() / "configs" / "default.yaml");
  CHECK(def.text.has_value());
  CHECK(def.text->permutations == 100);
  const auto smoke = load_config(testing::source_dir() / "configs" / "smoke.yaml");
  CHECK(smoke.master_seed == 7);
  CHECK(smoke.archs.size() == 3);
  // Reports keep only corpus file names, so resolve them against the corpus directory.
  const auto again = parse_config(config_to_json(smoke), testing::source_dir() / "corpora");
  CHECK(config_to_json(again) == config_to_json(smoke));
}

TEST_CASE("a missing corpus path is a validation error naming the path") {
  const auto dir = testing::scratch("cli-missing-corpus");
  write_text_file(dir / "c.yaml", std::string(kSmallVector) + "text: {corpora: [nowhere/verse.txt]}\n");
  const auto r = run({"--config", (dir / "c.yaml").string(), "--out-dir", (dir / "out").string(), "pipeline"});
  CHECK(r.code == 2);
  CHECK(r.err.find("nowhere/verse.txt") != std::string::npos);
}

TEST_CASE("usage errors exit 2, help exits 0") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"detect", "train"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("pipeline without text writes the vector artifacts") {
  const auto dir = testing::scratch("cli-pipeline");
  const auto r = run({"--config", small_config(dir).string(), "--out-dir", (dir / "out").string(), "pipeline"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  for (const char* f : {"zoo/zoo.json", "probes-arch.json", "probes-dataset.json", "records.jsonl", "forest-arch.json",
                        "forest-dataset.json", "report-arch.json", "report-dataset.json", "confusion-arch.csv",
                        "confusion-dataset.csv", "summary.json"}) {
    CHECK_MESSAGE(fs::exists(dir / "out" / f), f);
  }
  CHECK_FALSE(fs::exists(dir / "out" / "records-text.jsonl"));
  const auto report = read_json_file(dir / "out" / "report-dataset.json");
  CHECK(report["kind"] == "dataset");
  CHECK(report["experiment"]["report"]["accuracy"].get<double>() > 0.25);
}

TEST_CASE("command chain: zoo build, probe select, collect, detect train and eval") {
  const auto dir = testing::scratch("cli-chain");
  const auto cfg = small_config(dir).string();
  const auto in = [&](const char* f) { return (dir / f).string(); };

  auto r = run({"--config", cfg, "zoo", "build", "--out", in("zoo")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(zoo::load_zoo(dir / "zoo").size() == 12);

  r = run({"--config", cfg, "probe", "select", "--zoo", in("zoo"), "--kind", "dataset", "--out", in("probes.json")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(load_probe_set(dir / "probes.json").size() == 5);

  write_text_file(dir / "campaign.yaml", "probes: probes.json\nzoo: zoo\nkind: dataset\n");
  r = run({"--config", cfg, "collect", "--campaign", in("campaign.yaml"), "--out", in("records.jsonl")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(read_jsonl_file(dir / "records.jsonl").size() == 60);
  CHECK_FALSE(fs::exists(dir / "records.jsonl.tmp"));

  r = run({"--config", cfg, "detect", "train", "--records", in("records.jsonl"), "--kind", "dataset", "--out",
           in("forest.json")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(detect::load_detector(dir / "forest.json").forest.trees.size() == 20);

  r = run({"detect", "eval", "--records", in("records.jsonl"), "--forest", in("forest.json"), "--report",
           in("report.json"), "--confusion", in("confusion.csv")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto report = read_json_file(dir / "report.json");
  CHECK(report["n_test"] == 12);
  CHECK(fs::exists(dir / "confusion.csv"));

  // Restricting to one architecture's models.
  r = run({"detect", "eval", "--records", in("records.jsonl"), "--forest", in("forest.json"), "--targets", "^relu-32@",
           "--report", in("relu.json")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(read_json_file(dir / "relu.json")["n_test"] == 4);
  r = run({"detect", "eval", "--records", in("records.jsonl"), "--forest", in("forest.json"), "--targets", "nomatch"});
  CHECK(r.code == 2);
  r = run({"detect", "eval", "--records", in("records.jsonl"), "--forest", in("forest.json"), "--targets", "("});
  CHECK(r.code == 2);

  write_text_file(dir / "bad.yaml", "probes: probes.json\nzoo: zoo\nfoo: 1\n");
  CHECK(run({"collect", "--campaign", in("bad.yaml")}).code == 2);
}

TEST_CASE("attribute queries a live endpoint") {
  const auto dir = testing::scratch("cli-attribute");
  const auto cfg = small_config(dir).string();
  const auto in = [&](const char* f) { return (dir / f).string(); };
  REQUIRE(run({"--config", cfg, "zoo", "build", "--out", in("zoo")}).code == 0);
  REQUIRE(run({"--config", cfg, "probe", "select", "--zoo", in("zoo"), "--kind", "dataset", "--out",
               in("probes.json")})
              .code == 0);
  write_text_file(dir / "campaign.yaml", "probes: probes.json\nzoo: zoo\nkind: dataset\n");
  REQUIRE(run({"--config", cfg, "collect", "--campaign", in("campaign.yaml"), "--out", in("records.jsonl")}).code == 0);
  REQUIRE(run({"--config", cfg, "detect", "train", "--records", in("records.jsonl"), "--kind", "dataset", "--out",
               in("forest.json")})
              .code == 0);

  const auto members = zoo::load_zoo(dir / "zoo");
  const auto& member = members[5];
  probing::LoopbackServer server(probing::serve_surrogate(std::make_shared<const zoo::SurrogateModel>(member.model)));
  auto r = run({"--config", cfg, "attribute", "--forest", in("forest.json"), "--target", server.url(), "--probes",
                in("probes.json")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto verdict = Json::parse(r.out);
  CHECK(verdict["predicted_label"] == member.base_dataset());

  probing::LoopbackServer broken([](const std::string&) { return probing::HttpReply{200, "{\"probs\": [0.5,"}; });
  r = run({"attribute", "--forest", in("forest.json"), "--target", broken.url(), "--probes", in("probes.json")});
  CHECK(r.code == 3);

  write_json_file(dir / "empty.json", probe_set_to_json(ProbeSet("none", Modality::vector, 16, {})));
  r = run({"attribute", "--forest", in("forest.json"), "--target", server.url(), "--probes", in("empty.json")});
  CHECK(r.code == 2);
}

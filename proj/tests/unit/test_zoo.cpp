#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "probekit/core/error.hpp"
#include "probekit/core/rng.hpp"
#include "probekit/zoo/zoo.hpp"

using namespace probekit;
using namespace probekit::zoo;
using testing::arch;
using testing::dataset;

namespace {

// Nearest-centroid classifier fit on `train`, scored on `test`.
double nearest_centroid_accuracy(const Dataset& train, const Dataset& test) {
  const auto centroids = class_centroids(train);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      double d = 0;
      for (std::size_t j = 0; j < test.dim(); ++j) d += std::pow(test.row(i)[j] - centroids[c][j], 2);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    hits += best == test.y[i];
  }
  return static_cast<double>(hits) / test.size();
}

Layer layer(std::size_t in, std::size_t out, std::vector<double> w, std::vector<double> b) {
  Layer l;
  l.in = in;
  l.out = out;
  l.weights = std::move(w);
  l.bias = std::move(b);
  return l;
}

}  // namespace

TEST_CASE("synth_dataset is deterministic and sized by its spec") {
  auto spec = dataset("d", 7);
  CHECK(synth_dataset(spec) == synth_dataset(spec));
  spec.n_classes = 2;
  spec.samples_per_class = 4;
  const auto d = synth_dataset(spec);
  CHECK(d.size() == 8);
  CHECK(d.X.size() == 8 * spec.dim);
  CHECK(std::set<std::size_t>(d.y.begin(), d.y.end()) == std::set<std::size_t>{0, 1});
  spec.samples_per_class = 3;
  CHECK_THROWS_AS(synth_dataset(spec), ValidationError);
}

TEST_CASE("tight clusters are separable by nearest centroid") {
  auto spec = dataset("d", 21, 30, 10, 8);
  spec.cluster_spread = 0.01;
  const auto train = synth_dataset(spec);
  // Same class means (same seed), fresh draws: the means come first in the
  // generator, so a different sample count changes only the samples.
  auto spec2 = spec;
  spec2.samples_per_class = 20;
  const auto test = synth_dataset(spec2);
  CHECK(nearest_centroid_accuracy(train, test) >= 0.99);
}

TEST_CASE("init_model: deterministic, zero biases, bounded weights") {
  const auto a = arch("a", {16, 8}, Activation::tanh, 2.0);
  const auto m = init_model(a, 5, 3, 42);
  CHECK(m == init_model(a, 5, 3, 42));
  CHECK_FALSE(m == init_model(a, 5, 3, 43));
  for (const auto& l : m.layers()) {
    for (double b : l.bias) CHECK(b == 0.0);
    const double bound = a.weight_init_scale / std::sqrt(static_cast<double>(l.in));
    for (double w : l.weights) CHECK(std::abs(w) <= bound);
  }
}

TEST_CASE("forward on hand-built networks") {
  // No hidden layers, identity weights.
  ArchSpec id = arch("id", {}, Activation::relu);
  SurrogateModel identity(id, {layer(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0})});
  const std::vector<double> x{0.5, -2.0, 7.0};
  CHECK(forward(identity, x) == x);

  SurrogateModel relu(arch("r", {2}, Activation::relu), {layer(1, 2, {1, -1}, {0, 0}), layer(2, 1, {1, 1}, {0})});
  CHECK(forward(relu, std::vector<double>{2.0}) == std::vector<double>{2.0});

  for (auto act : {Activation::relu, Activation::tanh, Activation::sigmoid}) {
    const auto m = init_model(arch("m", {8}, act, 4.0), 4, 3, 1);
    for (double s : {1e-3, 1.0, 1e3, 1e6}) {
      for (double v : forward(m, std::vector<double>(4, s))) CHECK(std::isfinite(v));
    }
  }
}

TEST_CASE("softmax examples and properties") {
  const auto u = softmax(std::vector<double>{2, 2, 2, 2});
  for (double p : u) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));
  const auto big = softmax(std::vector<double>{1000, 0});
  CHECK(big[0] == doctest::Approx(1.0));
  CHECK(big[1] == doctest::Approx(0.0));
  CHECK(std::isfinite(big[1]));
  const auto q = softmax(std::vector<double>{std::log(1.0), std::log(3.0)});
  CHECK(std::abs(q[0] - 0.25) < 1e-15);
  CHECK(std::abs(q[1] - 0.75) < 1e-15);

  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> z(1 + rng.below(10));
    for (auto& v : z) v = rng.uniform(-50, 50);
    const auto p = softmax(z);
    double sum = 0;
    for (double v : p) sum += v;
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    auto shifted = z;
    const double c = rng.uniform(-100, 100);
    for (auto& v : shifted) v += c;
    const auto ps = softmax(shifted);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(ps[i] - p[i]) <= 1e-12);
  }
}

TEST_CASE("training: zero learning rate, determinism, fit quality") {
  auto spec = dataset("easy", 3, 30, 10, 16);
  spec.cluster_spread = 0.05;
  const auto data = synth_dataset(spec);
  const auto a = default_arch_specs()[1];
  const auto m0 = init_model(a, 16, 10, 1);

  TrainConfig still{3, 0.0, 16, 1};
  const auto same = train(m0, data, still);
  CHECK(same.layers() == m0.layers());
  CHECK(same.provenance().base_dataset == "easy");

  TrainConfig cfg{50, 0.1, 16, 1};
  const auto t1 = train(m0, data, cfg);
  CHECK(t1 == train(m0, data, cfg));
  CHECK(accuracy(t1, data) >= 0.95);

  auto test_spec = spec;
  test_spec.samples_per_class = 20;
  CHECK(nearest_centroid_accuracy(data, synth_dataset(test_spec)) >= 0.99);

  CHECK_THROWS_AS(train(m0, data, TrainConfig{1, 2.0, 16, 1}), ValidationError);
  CHECK_THROWS_AS(train(m0, data, TrainConfig{1, 0.1, 0, 1}), ValidationError);
}

TEST_CASE("training aborts on a non-finite loss") {
  const auto data = synth_dataset(dataset("d", 2));
  auto m = init_model(arch("big", {8}, Activation::relu), 6, 4, 1);
  m.mutable_layers()[0].weights[0] = 1e308;
  m.mutable_layers()[0].weights[1] = 1e308;
  CHECK_THROWS_AS(train(m, data, TrainConfig{2, 1.0, 4, 1}), TrainingDiverged);
}

TEST_CASE("fine_tune: provenance and effect") {
  const auto A = synth_dataset(dataset("A", 1));
  const auto B = synth_dataset(dataset("B", 2));
  const auto a = arch("m", {16}, Activation::tanh);
  const auto base = train(init_model(a, 6, 4, 9), A, TrainConfig{10, 0.1, 8, 9});

  const auto noop = fine_tune(base, B, TrainConfig{0, 0.1, 8, 9});
  CHECK(noop.layers() == base.layers());
  CHECK(noop.provenance().base_dataset == "A");
  CHECK(noop.provenance().fine_tune_dataset == std::optional<std::string>("B"));

  const auto tuned = fine_tune(base, B, TrainConfig{10, 0.1, 8, 9});
  CHECK(tuned.provenance().base_dataset == "A");
  CHECK(tuned.provenance().fine_tune_dataset == std::optional<std::string>("B"));
  const auto only_b = train(init_model(a, 6, 4, 9), B, TrainConfig{10, 0.1, 8, 9});
  double diff = 0;
  for (std::size_t i = 0; i < B.size(); ++i) {
    const auto p = predict_proba(tuned, B.row(i)).values();
    const auto q = predict_proba(only_b, B.row(i)).values();
    for (std::size_t c = 0; c < p.size(); ++c) diff = std::max(diff, std::abs(p[c] - q[c]));
  }
  CHECK(diff > 1e-6);

  SurrogateModel untrained = init_model(a, 6, 4, 9);
  CHECK_THROWS_AS(fine_tune(untrained, B, TrainConfig{1, 0.1, 8, 9}), ValidationError);
}

TEST_CASE("default grid builds 70 labelled models") {
  const auto archs = default_arch_specs();
  REQUIRE(archs.size() == 7);
  const auto datasets = default_dataset_specs(1);
  REQUIRE(datasets.size() == 10);
  ZooConfig cfg;
  cfg.train.epochs = 2;
  cfg.fine_tune->epochs = 1;
  const auto zoo = build_zoo(archs, datasets, cfg, 1);
  CHECK(zoo.size() == 70);
  std::set<std::string> ids;
  for (const auto& m : zoo) {
    ids.insert(m.id);
    CHECK(m.id == m.arch_name() + "@" + m.base_dataset());
    REQUIRE(m.model.provenance().fine_tune_dataset.has_value());
    CHECK(*m.model.provenance().fine_tune_dataset != m.base_dataset());
    CHECK(m.label(AttributeKind::architecture).value == m.arch_name());
    CHECK(m.label(AttributeKind::dataset).value == m.base_dataset());
  }
  CHECK(ids.size() == 70);
}

TEST_CASE("zoo: determinism, worker independence, distinct responses, persistence") {
  const std::vector<ArchSpec> archs{arch("r", {16}, Activation::relu), arch("t", {16}, Activation::tanh)};
  const std::vector<DatasetSpec> sets{dataset("a", 1), dataset("b", 2)};
  ZooConfig cfg;
  cfg.train.epochs = 5;
  cfg.workers = 1;
  const auto z1 = build_zoo(archs, sets, cfg, 77);
  cfg.workers = 3;
  const auto z2 = build_zoo(archs, sets, cfg, 77);
  REQUIRE(z1.size() == 4);
  for (std::size_t i = 0; i < z1.size(); ++i) CHECK(z1[i].model == z2[i].model);

  // Response matrices over a few probes, pairwise distinct.
  Rng rng(1);
  std::vector<std::vector<double>> probes(5, std::vector<double>(6));
  for (auto& p : probes)
    for (auto& v : p) v = rng.uniform(-1, 1);
  for (std::size_t i = 0; i < z1.size(); ++i) {
    for (std::size_t j = i + 1; j < z1.size(); ++j) {
      double diff = 0;
      for (const auto& p : probes) {
        const auto a = predict_proba(z1[i].model, p).values();
        const auto b = predict_proba(z1[j].model, p).values();
        for (std::size_t c = 0; c < a.size(); ++c) diff = std::max(diff, std::abs(a[c] - b[c]));
      }
      CHECK(diff > 1e-6);
    }
  }

  const auto dir = testing::scratch("zoo-save");
  save_zoo(dir, ZooManifest{77, archs, sets, cfg}, z1);
  ZooManifest manifest;
  const auto loaded = load_zoo(dir, &manifest);
  REQUIRE(loaded.size() == z1.size());
  for (std::size_t i = 0; i < z1.size(); ++i) {
    CHECK(loaded[i].id == z1[i].id);
    CHECK(loaded[i].model == z1[i].model);
  }
  CHECK(manifest.master_seed == 77);
  CHECK(manifest.datasets == sets);
  CHECK(model_from_json(model_to_json(z1[0].model)) == z1[0].model);
  CHECK_THROWS_AS(load_zoo(dir / "nope"), ValidationError);
}

TEST_CASE("architecture specs validate") {
  CHECK_THROWS_AS(arch("x", {}, Activation::relu).validate(), ValidationError);
  CHECK_THROWS_AS(arch("x", {2}, Activation::relu).validate(), ValidationError);
  CHECK_THROWS_AS(arch("x", {8}, Activation::relu, 0.0).validate(), ValidationError);
  CHECK_THROWS_AS(parse_activation("gelu"), ValidationError);
  CHECK(arch_from_json(arch_to_json(default_arch_specs()[4])) == default_arch_specs()[4]);
}

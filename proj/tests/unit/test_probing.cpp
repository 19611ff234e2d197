#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "probekit/core/error.hpp"
#include "probekit/probing/divergence.hpp"
#include "probekit/probing/loopback.hpp"
#include "probekit/text/markov.hpp"

using namespace probekit;
using namespace probekit::probing;

namespace {

const double kLn2 = std::log(2.0);

// Two inputs, softmax(sign * x): a model and its mirror image.
zoo::SurrogateModel linear(double sign) {
  zoo::Layer l;
  l.in = 2;
  l.out = 2;
  l.weights = {sign, 0, 0, sign};
  l.bias = {0, 0};
  return zoo::SurrogateModel(testing::arch("lin", {}, zoo::Activation::relu), {l});
}

ProbeSet two_probe_set() {
  return ProbeSet("c", Modality::vector, 2, {Probe::vector("a", {0, 0}), Probe::vector("z", {1000, 0})});
}

RemoteEndpoint endpoint(const std::string& url) {
  RemoteEndpoint ep;
  ep.url = url;
  ep.timeout_ms = 2000;
  ep.max_retries = 2;
  ep.backoff_base_ms = 1;
  return ep;
}

zoo::ZooConfig tiny_zoo(std::size_t epochs) {
  zoo::ZooConfig cfg;
  cfg.train.epochs = epochs;
  cfg.fine_tune.reset();
  return cfg;
}

HttpReply reply(std::string body) { return {200, std::move(body)}; }

std::vector<double> random_distribution(Rng& rng, std::size_t k) {
  std::vector<double> p(k);
  double sum = 0.0;
  for (auto& x : p) {
    x = rng.below(4) == 0 ? 0.0 : rng.uniform();
    sum += x;
  }
  if (sum == 0.0) p[0] = sum = 1.0;
  for (auto& x : p) x /= sum;
  return p;
}

}  // namespace

TEST_CASE("JSD hand values") {
  const std::vector<double> a{1, 0}, b{0, 1}, h{0.5, 0.5};
  CHECK(js_divergence(a, b) == doctest::Approx(kLn2).epsilon(1e-14));
  CHECK(js_divergence(h, h) == 0.0);
  CHECK(js_divergence(h, a) == doctest::Approx(0.75 * std::log(4.0 / 3.0)).epsilon(1e-14));
  CHECK(kl_divergence(a, h) == doctest::Approx(kLn2).epsilon(1e-14));
  CHECK_THROWS_AS(js_divergence(a, std::vector<double>{1, 0, 0}), ValidationError);
}

TEST_CASE("property: JSD is symmetric, bounded and zero on the diagonal") {
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    const std::size_t k = 1 + rng.below(10);
    const auto p = random_distribution(rng, k);
    const auto q = random_distribution(rng, k);
    const double d = js_divergence(p, q);
    REQUIRE(d >= 0.0);
    REQUIRE(d <= kLn2 + 1e-12);
    REQUIRE(d == doctest::Approx(js_divergence(q, p)).epsilon(1e-12));
    REQUIRE(js_divergence(p, p) == doctest::Approx(0.0));
  }
}

TEST_CASE("select_probes on identical targets keeps the first ids") {
  const std::vector<Target> same{Target::local("t1", linear(1)), Target::local("t2", linear(1))};
  const ProbeSet pool("c", Modality::vector, 2,
                      {Probe::vector("d", {1, 0}), Probe::vector("b", {0, 3}), Probe::vector("c", {2, 2}),
                       Probe::vector("a", {0, 0})});
  const auto sel = select_probes(pool, same, 2);
  for (const auto& s : sel.ranking) CHECK(s.score == 0.0);
  REQUIRE(sel.selected.size() == 2);
  CHECK(sel.selected.probes()[0].id == "a");
  CHECK(sel.selected.probes()[1].id == "b");
}

TEST_CASE("select_probes ranks the separating probe first") {
  const std::vector<Target> mirror{Target::local("t1", linear(1)), Target::local("t2", linear(-1))};
  const auto sel = select_probes(two_probe_set(), mirror, 1);
  REQUIRE(sel.ranking.size() == 2);
  CHECK(sel.ranking[0].probe_id == "z");
  CHECK(sel.ranking[0].score == doctest::Approx(kLn2));
  CHECK(sel.ranking[1].score == 0.0);
  CHECK(sel.selected.probes()[0].id == "z");

  const auto all = select_probes(two_probe_set(), mirror, 2);
  CHECK(all.selected.size() == 2);
  CHECK_THROWS_AS(select_probes(two_probe_set(), mirror, 3), ValidationError);
}

TEST_CASE("select_probes does not depend on candidate order") {
  const auto zoo = zoo::build_zoo({testing::arch("r", {8}, zoo::Activation::relu),
                                   testing::arch("t", {8}, zoo::Activation::tanh)},
                                  {testing::dataset("d1", 1), testing::dataset("d2", 2)}, tiny_zoo(3), 0);
  std::vector<Target> targets;
  for (const auto& m : zoo) targets.push_back(Target::local(m.id, m.model));
  auto probes = candidate_pool(6, 12, 3.0, {testing::dataset("d1", 1)}, 5).probes();
  const auto ref = select_probes(ProbeSet("c", Modality::vector, 6, probes), targets, 5);
  Rng rng(2);
  for (int i = 0; i < 5; ++i) {
    rng.shuffle(std::span<Probe>(probes));
    const auto again = select_probes(ProbeSet("c", Modality::vector, 6, probes), targets, 5);
    CHECK(again.selected.probes() == ref.selected.probes());
  }
}

TEST_CASE("radial pool radii stay in range and shells pick one probe each") {
  const auto pool = radial_pool(3, 200, 0.3, 30.0, 4);
  CHECK(pool.size() == 200);
  double lo = 1e9, hi = 0;
  for (const auto& p : pool.probes()) {
    const auto& v = p.values();
    const double r = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    REQUIRE(r >= 0.3 * (1 - 1e-12));
    REQUIRE(r <= 30.0 * (1 + 1e-12));
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  CHECK(lo < 0.5);
  CHECK(hi > 15.0);

  zoo::Layer l;
  l.in = 3;
  l.out = 2;
  l.weights = {1, 0, 0, 0, 1, 0};
  l.bias = {0, 0};
  const zoo::SurrogateModel a(testing::arch("a", {}, zoo::Activation::relu), {l});
  l.weights = {0, 1, 0, 1, 0, 0};
  const zoo::SurrogateModel b(testing::arch("b", {}, zoo::Activation::relu), {l});
  const std::vector<Target> targets{Target::local("a", a), Target::local("b", b)};
  const std::vector<double> radii{0.3, 3.0, 30.0};
  const auto sel = select_probes_by_shell(pool, targets, radii);
  REQUIRE(sel.selected.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& v = sel.selected.probes()[i].values();
    const double r = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    std::size_t nearest = 0;
    for (std::size_t s = 1; s < radii.size(); ++s) {
      if (std::abs(std::log(r / radii[s])) < std::abs(std::log(r / radii[nearest]))) nearest = s;
    }
    CHECK(nearest == i);
  }
  CHECK_THROWS_AS(select_probes_by_shell(pool, targets, {0.3, 1e6}), ValidationError);
}

TEST_CASE("candidate pool lists random probes then centroids") {
  const auto pool = candidate_pool(6, 3, 2.0, {testing::dataset("d1", 1), testing::dataset("d2", 2)}, 0);
  CHECK(pool.size() == 3 + 8);
  CHECK(pool.probes()[0].id == "rand-000");
  CHECK(pool.probes()[3].id == "d1/c00");
  CHECK(pool.probes().back().id == "d2/c03");
  CHECK_THROWS_AS(merge_pools("m", pool, pool), ValidationError);
}

TEST_CASE("local vector query returns the model's distribution") {
  const auto t = Target::local("t", linear(1), {{AttributeKind::architecture, "lin"}});
  Rng rng(0);
  const auto r = query(t, Probe::vector("z", {1000, 0}), rng, AttributeKind::architecture, [] { return 5; });
  CHECK(std::get<ProbabilityVector>(r.output).values() == std::vector<double>{1.0, 0.0});
  CHECK(r.true_label->value == "lin");
  CHECK(r.adapter == AdapterKind::local);
  CHECK(r.unix_time_ms == 5);
  CHECK_THROWS_AS(query(t, Probe::vector("w", {1, 2, 3}), rng), ValidationError);
}

TEST_CASE("loopback endpoint passes valid distributions through") {
  LoopbackServer server([](const std::string& body) {
    const auto j = Json::parse(body);
    CHECK(j["modality"] == "vector");
    CHECK(j["payload"] == Json::array({1.0, 2.0}));
    return reply(R"({"probs":[0.25,0.75]})");
  });
  auto ep = endpoint(server.url());
  ep.output_dim = 2;
  const auto t = Target::remote("field", ep, Modality::vector);
  Rng rng(0);
  const auto r = query(t, Probe::vector("p", {1, 2}), rng);
  CHECK(std::get<ProbabilityVector>(r.output).values() == std::vector<double>{0.25, 0.75});
  CHECK(r.adapter == AdapterKind::remote);
  CHECK_FALSE(r.true_label.has_value());
}

TEST_CASE("loopback endpoint protocol errors") {
  std::string body;
  LoopbackServer server([&](const std::string&) { return reply(body); });
  auto ep = endpoint(server.url());
  ep.output_dim = 2;
  const auto t = Target::remote("field", ep, Modality::vector);
  const auto probe = Probe::vector("p", {1, 2});
  Rng rng(0);
  for (const std::string bad : {R"({"probs":[0.5,0.6]})", "{not json", R"({"probs":[1.0]})", R"({"text":"x"})",
                                R"({"probs":["a","b"]})"}) {
    body = bad;
    try {
      query(t, probe, rng);
      FAIL("expected a protocol error for " << bad);
    } catch (const ProtocolError& e) {
      CHECK(e.raw_body() == bad);
      CHECK(e.kind() == ErrorKind::network);
    }
  }
}

TEST_CASE("remote sessions retry transient failures") {
  int calls = 0;
  LoopbackServer server([&](const std::string&) {
    ++calls;
    return calls < 3 ? HttpReply{503, "busy"} : reply(R"({"probs":[1.0,0.0]})");
  });
  RemoteSession session(endpoint(server.url()));
  CHECK(session.post("{}") == R"({"probs":[1.0,0.0]})");
  CHECK(session.attempts() == 3);

  calls = -100;
  RemoteSession hopeless(endpoint(server.url()));
  CHECK_THROWS_AS(hopeless.post("{}"), NetworkError);
  CHECK(hopeless.attempts() == 3);

  auto ep = endpoint("http://127.0.0.1:1/predict");
  ep.max_retries = 0;
  ep.timeout_ms = 200;
  RemoteSession refused(ep);
  CHECK_THROWS_AS(refused.post("{}"), NetworkError);
  CHECK_THROWS_AS(parse_url("ftp://x"), ValidationError);
  CHECK(parse_url("http://h:81/p").port == 81);
}

TEST_CASE("collect emits one record per target, probe and repeat") {
  const auto zoo = zoo::build_zoo({testing::arch("r", {8}, zoo::Activation::relu)},
                                  {testing::dataset("d1", 1), testing::dataset("d2", 2), testing::dataset("d3", 3)},
                                  tiny_zoo(2), 0);
  Campaign c{candidate_pool(6, 4, 2.0, {}, 1), {}, 1, 9, AttributeKind::dataset};
  for (const auto& m : zoo) c.targets.push_back(Target::local(m.id, m.model, {{AttributeKind::dataset, m.base_dataset()}}));
  const auto records = testing::collect_records(c);
  CHECK(records.size() == 12);
  CHECK(records[0].target_id == zoo[0].id);
  CHECK(records[0].probe_id == "rand-000");
  CHECK(records[4].target_id == zoo[1].id);
  for (const auto& r : records) CHECK(r.true_label->kind == AttributeKind::dataset);
  CHECK(testing::collect_jsonl(c) == testing::collect_jsonl(c));

  const std::string body = std::string(200, 'a') + "b";
  const std::vector<text::Corpus> corpora{{"x", body}};
  Campaign tc{ProbeSet("t", Modality::text, 0, {Probe::text("p1", "aa"), Probe::text("p2", "ab")}), {}, 5, 3, {}};
  tc.targets.push_back(Target::local_text("g1", text::fit_markov(corpora[0], 1), 16));
  tc.targets.push_back(Target::local_text("g2", text::fit_markov(corpora[0], 2), 16));
  tc.targets.push_back(Target::local_text("g3", text::fit_markov(corpora[0], 3), 16));
  tc.targets.push_back(Target::local_text("g4", text::fit_markov(corpora[0], 1), 16));
  const auto text_records = testing::collect_records(tc);
  CHECK(text_records.size() == 40);
  const auto jsonl = testing::collect_jsonl(tc);
  CHECK(jsonl == testing::collect_jsonl(tc));
  // Repeats draw from different streams.
  std::set<std::string> outputs;
  for (std::size_t i = 0; i < 5; ++i) outputs.insert(std::get<GeneratedText>(text_records[i].output).text);
  CHECK(outputs.size() > 1);
}

TEST_CASE("collect tallies failing targets and moves on") {
  LoopbackServer server([](const std::string&) { return reply("garbage"); });
  auto ep = endpoint(server.url());
  ep.max_retries = 0;
  Campaign c{two_probe_set(), {Target::remote("bad", ep, Modality::vector), Target::local("good", linear(1))}, 1, 0,
             {}};
  std::ostringstream out;
  JsonlWriter w(out);
  const auto report = collect(c, w, [] { return std::int64_t{0}; });
  CHECK(report.n_records == 2);
  CHECK(report.n_errors == 2);
  REQUIRE(report.targets.size() == 2);
  CHECK(report.targets[0].n_errors == 2);
  CHECK(report.targets[1].n_records == 2);

  Campaign mismatched{two_probe_set(), {Target::local_text("g", text::fit_markov({"x", "abcabc"}, 1), 4)}, 1, 0, {}};
  CHECK_THROWS_AS(mismatched.validate(), ValidationError);
}

TEST_CASE("loopback surrogate matches the local adapter") {
  const auto m = std::make_shared<const zoo::SurrogateModel>(linear(1));
  LoopbackServer server(serve_surrogate(m));
  const auto probe = Probe::vector("p", {0.3, -1.2});
  Rng rng(0);
  const auto remote = query(Target::remote("r", endpoint(server.url()), Modality::vector), probe, rng);
  const auto local = query(Target::local("l", *m), probe, rng);
  CHECK(remote.output == local.output);
  CHECK(server.requests_served() == 1);
}

TEST_CASE("default text probes form a valid text set") {
  const auto probes = default_text_probes();
  CHECK(probes.modality() == Modality::text);
  REQUIRE(probes.size() == 4);
  CHECK(probes.probes()[0].text() == "Hello");
  CHECK(probes.probes()[3].text() == "Mario");
}

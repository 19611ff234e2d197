// Acceptance suite: one PASS/FAIL line per criterion. With arguments, runs
// only the listed criteria (e.g. `acceptance 6 7 8`).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "probekit/cli/commands.hpp"
#include "probekit/cli/config.hpp"
#include "probekit/cli/pipeline.hpp"
#include "probekit/core/rng.hpp"
#include "probekit/detect/metrics.hpp"
#include "probekit/detect/tree.hpp"
#include "probekit/probing/divergence.hpp"
#include "probekit/probing/loopback.hpp"
#include "probekit/zoo/dataset.hpp"

namespace fs = std::filesystem;
using namespace probekit;

namespace {

const fs::path kSource = PROBEKIT_SOURCE_DIR;
const fs::path kWork = PROBEKIT_WORK_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, x);
  return buf;
}

std::string sci(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double max_dev(const std::vector<double>& v) {
  const double m = mean_of(v);
  double d = 0.0;
  for (double x : v) d = std::max(d, std::abs(x - m));
  return d;
}

cli::ExperimentConfig default_config(std::uint64_t seed) {
  auto cfg = cli::load_config(kSource / "configs" / "default.yaml");
  cfg.master_seed = seed;
  return cfg;
}

// ---- shared: default pipeline (criteria 2, 3, 4) ----

Json g_summary;
fs::path g_pipeline_dir;

void run_default_pipeline() {
  if (!g_summary.is_null()) return;
  g_pipeline_dir = kWork / "default";
  fs::remove_all(g_pipeline_dir);
  g_summary = cli::run_pipeline(default_config(1), g_pipeline_dir, &std::cerr);
}

// ---- shared: vector experiments over ten master seeds (criteria 1, 5) ----

struct SeedRun {
  double arch_selected = 0, arch_random = 0;
  double data_selected = 0, data_random = 0, data_macro_ap = 0;
};
std::map<std::uint64_t, SeedRun> g_seed_runs;

const SeedRun& seed_run(std::uint64_t seed) {
  if (auto it = g_seed_runs.find(seed); it != g_seed_runs.end()) return it->second;
  auto cfg = default_config(seed);
  const auto datasets = cli::resolve_datasets(cfg);
  const auto members = zoo::build_zoo(cfg.archs, datasets, cfg.zoo, cfg.master_seed);
  SeedRun r;
  for (auto kind : {AttributeKind::architecture, AttributeKind::dataset}) {
    const auto selected = cli::run_vector_kind(cfg, kind, members, datasets, false);
    auto rcfg = cfg;
    auto& probes = rcfg.kind(kind).probes;
    probes.k = probes.count();
    probes.selection = cli::Selection::random;
    const auto random = cli::run_vector_kind(rcfg, kind, members, datasets, false);
    if (kind == AttributeKind::architecture) {
      r.arch_selected = selected.experiment.report.accuracy;
      r.arch_random = random.experiment.report.accuracy;
    } else {
      r.data_selected = selected.experiment.report.accuracy;
      r.data_macro_ap = selected.experiment.report.macro_ap;
      r.data_random = random.experiment.report.accuracy;
    }
  }
  std::cerr << "seed " << seed << ": arch " << fmt(r.arch_selected) << " (random " << fmt(r.arch_random)
            << "), dataset " << fmt(r.data_selected) << " (random " << fmt(r.data_random) << ")\n";
  return g_seed_runs.emplace(seed, r).first->second;
}

// ---- criteria ----

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> acc, ap;
  for (std::uint64_t s = 1; s <= 3; ++s) {
    acc.push_back(seed_run(s).data_selected);
    ap.push_back(seed_run(s).data_macro_ap);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool pass = true;
  for (std::size_t i = 0; i < 3; ++i) pass = pass && acc[i] > 0.5 && ap[i] > 0.5;
  pass = pass && max_dev(acc) <= 0.05 && max_dev(ap) <= 0.05;
  std::string d = "dataset accuracy";
  for (double a : acc) d += " " + fmt(a);
  d += ", macro AP";
  for (double a : ap) d += " " + fmt(a);
  d += " (seeds 1-3, need > 0.5 and within +-0.05 of the mean; max dev " + fmt(max_dev(acc)) + "/" +
       fmt(max_dev(ap)) + "; " + fmt(secs, 0) + " s)";
  return {pass, d};
}

Outcome criterion2() {
  run_default_pipeline();
  const auto report = read_json_file(g_pipeline_dir / "report-arch.json");
  const double acc = report.at("experiment").at("report").at("accuracy").get<double>();
  const std::size_t k = report.at("experiment").at("report").at("labels").size();
  const double min_ap = report.at("min_slice_ap").get<double>();
  const std::size_t n_probes = report.at("probes").at("selected").size();
  const bool sliced = report.at("slices").size() == 10;
  const bool pass = k == 7 && n_probes == 5 && sliced && acc > 5.0 / 7.0;
  return {pass, "architecture accuracy " + fmt(acc) + " > " + fmt(5.0 / 7.0) + " with " + std::to_string(n_probes) +
                    " probes; min per-dataset slice AP " + fmt(min_ap)};
}

Outcome criterion3() {
  run_default_pipeline();
  const auto report = read_json_file(g_pipeline_dir / "report-text-dataset.json");
  const auto& r = report.at("experiment").at("report");
  const double acc = r.at("accuracy").get<double>();
  const std::size_t k = r.at("labels").size();
  const bool csv = fs::exists(g_pipeline_dir / "confusion-text-dataset.csv");
  const auto cj = read_json_file(g_pipeline_dir / "confusion-text-dataset.json");
  const bool json_ok = cj.at("matrix").size() == k;
  const bool setup = report.at("zoo").at("order").get<int>() == 2 &&
                     report.at("zoo").at("generations_per_probe").get<std::size_t>() == 20;
  const bool pass = k == 8 && csv && json_ok && setup && acc > 0.5;
  return {pass, "text dataset accuracy " + fmt(acc) + " over " + std::to_string(k) +
                    " corpora; confusion CSV and JSON written"};
}

Outcome criterion4() {
  run_default_pipeline();
  const auto report = read_json_file(g_pipeline_dir / "report-text-arch.json");
  const double acc = report.at("experiment").at("report").at("accuracy").get<double>();
  const auto& null = report.at("permutation_test");
  const double sd = null.at("null_sd").get<double>();
  const double mu = null.at("null_mean").get<double>();
  const std::size_t perms = null.at("null_accuracies").size();
  const double bar = std::max(0.5, mu) + 3.0 * sd;
  const bool probes_ok = report.at("probes") == Json({"Hello", "2+2", "A", "Mario"});
  const bool pass = perms == 100 && probes_ok && acc > bar;
  return {pass, "order-2 vs order-3 accuracy " + fmt(acc) + " > max(0.5, null mean " + fmt(mu) + ") + 3 x " +
                    fmt(sd) + " = " + fmt(bar) + " (" + std::to_string(perms) + " permutations)"};
}

Outcome criterion5() {
  std::vector<double> as, ar, ds, dr;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const auto& r = seed_run(s);
    as.push_back(r.arch_selected);
    ar.push_back(r.arch_random);
    ds.push_back(r.data_selected);
    dr.push_back(r.data_random);
  }
  const bool pass = mean_of(as) >= mean_of(ar) && mean_of(ds) >= mean_of(dr);
  return {pass, "mean accuracy over 10 seeds, selected vs random: architecture " + fmt(mean_of(as)) + " vs " +
                    fmt(mean_of(ar)) + ", dataset " + fmt(mean_of(ds)) + " vs " + fmt(mean_of(dr))};
}

// Brute-force CART: every split enumerated, impurities computed from scratch.
struct OracleNode {
  bool leaf = true;
  std::size_t feature = 0;
  double threshold = 0;
  std::vector<std::size_t> counts;
  std::unique_ptr<OracleNode> left, right;
};

double oracle_gini(const std::vector<std::size_t>& idx, const std::vector<std::size_t>& y, std::size_t k) {
  std::vector<double> c(k, 0.0);
  for (auto i : idx) c[y[i]] += 1.0;
  double s = 0.0;
  for (double v : c) s += (v / idx.size()) * (v / idx.size());
  return 1.0 - s;
}

std::unique_ptr<OracleNode> oracle_tree(const std::vector<std::vector<double>>& X, const std::vector<std::size_t>& y,
                                        std::size_t k, const std::vector<std::size_t>& idx) {
  auto node = std::make_unique<OracleNode>();
  node->counts.assign(k, 0);
  for (auto i : idx) ++node->counts[y[i]];
  const double parent = oracle_gini(idx, y, k);
  if (parent == 0.0 || idx.size() < 2) return node;
  const std::size_t d = X.front().size();
  double best = 0.0;
  bool found = false;
  std::size_t bf = 0;
  double bt = 0.0;
  for (std::size_t f = 0; f < d; ++f) {
    std::set<double> values;
    for (auto i : idx) values.insert(X[i][f]);
    std::vector<double> v(values.begin(), values.end());
    for (std::size_t j = 0; j + 1 < v.size(); ++j) {
      const double t = v[j] + (v[j + 1] - v[j]) / 2.0;
      std::vector<std::size_t> l, r;
      for (auto i : idx) (X[i][f] <= t ? l : r).push_back(i);
      const double w = (l.size() * oracle_gini(l, y, k) + r.size() * oracle_gini(r, y, k)) / idx.size();
      const double dec = parent - w;
      if (dec <= detect::kSplitTieEpsilon) continue;
      if (!found || dec > best + detect::kSplitTieEpsilon) {
        found = true;
        best = dec;
        bf = f;
        bt = t;
      }
    }
  }
  if (!found) return node;
  node->leaf = false;
  node->feature = bf;
  node->threshold = bt;
  std::vector<std::size_t> l, r;
  for (auto i : idx) (X[i][bf] <= bt ? l : r).push_back(i);
  node->left = oracle_tree(X, y, k, l);
  node->right = oracle_tree(X, y, k, r);
  return node;
}

bool same_tree(const detect::Tree& t, int at, const OracleNode& o) {
  const auto& n = t.nodes[static_cast<std::size_t>(at)];
  if (n.is_leaf() != o.leaf) return false;
  if (o.leaf) return n.counts == o.counts;
  return static_cast<std::size_t>(n.feature) == o.feature && n.threshold == o.threshold &&
         same_tree(t, n.left, *o.left) && same_tree(t, n.right, *o.right);
}

Outcome criterion6() {
  Rng rng(606);
  int matched = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = 2 + rng.below(7);
    const std::size_t d = 1 + rng.below(3);
    const std::size_t k = 2 + rng.below(2);
    // Few distinct values, so ties between thresholds and features are common.
    std::vector<std::vector<double>> X(n, std::vector<double>(d));
    std::vector<std::size_t> y(n);
    std::vector<double> flat;
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& x : X[i]) {
        x = static_cast<double>(rng.below(5)) * 0.5 - 1.0;
        flat.push_back(x);
      }
      y[i] = rng.below(k);
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng tree_rng(static_cast<std::uint64_t>(inst));
    const auto tree = detect::fit_tree(detect::MatrixView{flat.data(), n, d}, y, k, idx, detect::TreeConfig{}, tree_rng);
    const auto oracle = oracle_tree(X, y, k, idx);
    if (same_tree(tree, 0, *oracle)) ++matched;
  }
  return {matched == 100, std::to_string(matched) + "/100 tiny instances match the exhaustive tree"};
}

double oracle_ap(const std::vector<double>& s, const std::vector<bool>& pos) {
  const std::size_t n = s.size();
  auto rank = [&](std::size_t i) {
    std::size_t r = 1;
    for (std::size_t j = 0; j < n; ++j) {
      if (s[j] > s[i] || (s[j] == s[i] && j < i)) ++r;
    }
    return r;
  };
  double sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!pos[i]) continue;
    ++n_pos;
    const std::size_t ri = rank(i);
    std::size_t hits = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (pos[j] && rank(j) <= ri) ++hits;
    }
    sum += static_cast<double>(hits) / static_cast<double>(ri);
  }
  return sum / static_cast<double>(n_pos);
}

Outcome criterion7() {
  Rng rng(707);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng.below(40);
    std::vector<double> s(n);
    std::vector<bool> pos(n);
    const bool coarse = rng.below(2) == 0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = coarse ? static_cast<double>(rng.below(4)) / 4.0 : rng.uniform();
      pos[i] = rng.below(3) == 0;
    }
    pos[rng.below(n)] = true;
    std::unique_ptr<bool[]> pb(new bool[n]);
    for (std::size_t i = 0; i < n; ++i) pb[i] = pos[i];
    const double got = detect::average_precision(s, std::span<const bool>(pb.get(), n));
    worst = std::max(worst, std::abs(got - oracle_ap(s, pos)));
  }
  const std::vector<std::pair<std::vector<std::size_t>, double>> gini_cases{
      {{10, 0}, 0.0}, {{5, 5}, 0.5}, {{3, 1}, 0.375}};
  double gini_err = 0.0;
  for (const auto& [c, want] : gini_cases) gini_err = std::max(gini_err, std::abs(detect::gini(c) - want));
  const std::vector<double> p{0.2, 0.3, 0.5}, a{1, 0}, b{0, 1}, h{0.5, 0.5};
  double jsd_err = std::abs(probing::js_divergence(p, p));
  jsd_err = std::max(jsd_err, std::abs(probing::js_divergence(a, b) - std::log(2.0)));
  // m = (0.75, 0.25): 1/2 * 1/2 ln(4/3) + 1/2 ln(4/3)
  jsd_err = std::max(jsd_err, std::abs(probing::js_divergence(h, a) - 0.75 * std::log(4.0 / 3.0)));
  const bool pass = worst <= 1e-12 && gini_err <= 1e-12 && jsd_err <= 1e-12;
  return {pass, "AP max error " + sci(worst) + " over 1000 vectors; gini error " +
                    sci(gini_err) + "; JSD error " + sci(jsd_err)};
}

Outcome criterion8() {
  double worst = 0.0;
  std::string where;
  for (auto act : {zoo::Activation::relu, zoo::Activation::tanh, zoo::Activation::sigmoid}) {
    zoo::ArchSpec arch;
    arch.name = std::string(zoo::to_string(act));
    arch.hidden_layers = {7, 5};
    arch.activation = act;
    arch.weight_init_scale = 1.5;
    zoo::DatasetSpec spec;
    spec.name = "gc";
    spec.n_classes = 4;
    spec.dim = 6;
    spec.samples_per_class = 5;
    spec.seed = 808;
    const auto data = zoo::synth_dataset(spec);
    auto model = zoo::init_model(arch, spec.dim, spec.n_classes, 81);
    // Nonzero biases so their gradients are exercised too.
    Rng rng(82);
    for (auto& layer : model.mutable_layers()) {
      for (auto& b : layer.bias) b = rng.uniform(-0.5, 0.5);
    }
    std::vector<std::size_t> batch;
    for (int i = 0; i < 5; ++i) batch.push_back(rng.below(data.size()));
    const auto g = zoo::loss_and_gradient(model, data, batch);
    const double step = 1e-5;
    for (std::size_t l = 0; l < model.layers().size(); ++l) {
      auto check = [&](double& param, double analytic, const std::string& name) {
        const double orig = param;
        param = orig + step;
        const double up = zoo::loss_and_gradient(model, data, batch).loss;
        param = orig - step;
        const double down = zoo::loss_and_gradient(model, data, batch).loss;
        param = orig;
        const double numeric = (up - down) / (2 * step);
        const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        if (rel > worst) {
          worst = rel;
          where = arch.name + " " + name;
        }
      };
      auto& layer = model.mutable_layers()[l];
      for (std::size_t i = 0; i < layer.weights.size(); ++i) {
        check(layer.weights[i], g.grads[l].weights[i], "w" + std::to_string(l));
      }
      for (std::size_t i = 0; i < layer.bias.size(); ++i) {
        check(layer.bias[i], g.grads[l].bias[i], "b" + std::to_string(l));
      }
    }
  }
  return {worst <= 1e-4, "worst relative error " + sci(worst) + " (" + where + ") over relu, tanh, sigmoid"};
}

std::vector<ResponseRecord> strip_transport(std::vector<ResponseRecord> recs) {
  for (auto& r : recs) {
    r.unix_time_ms = 0;
    r.adapter = AdapterKind::local;
  }
  return recs;
}

Outcome criterion9() {
  auto cfg = default_config(9);
  cfg.archs.resize(3);
  cfg.grid.count = 2;
  const auto datasets = cli::resolve_datasets(cfg);
  const auto members = zoo::build_zoo(cfg.archs, datasets, cfg.zoo, cfg.master_seed);
  const auto pool = cli::build_pool(cfg.dataset.probes.pool, 16, datasets, 9, "pool");
  std::vector<probing::Target> local = cli::zoo_targets(members);
  std::vector<std::unique_ptr<probing::LoopbackServer>> servers;
  std::vector<probing::Target> remote;
  for (std::size_t i = 0; i < members.size(); ++i) {
    servers.push_back(std::make_unique<probing::LoopbackServer>(
        probing::serve_surrogate(std::make_shared<zoo::SurrogateModel>(members[i].model))));
    probing::RemoteEndpoint ep;
    ep.url = servers.back()->url();
    remote.push_back(probing::Target::remote(members[i].id, ep, Modality::vector, local[i].labels));
  }
  const auto a = cli::collect_all(probing::Campaign{pool, local, 1, 99, AttributeKind::dataset, 2}, probing::system_clock_ms);
  const auto b = cli::collect_all(probing::Campaign{pool, remote, 1, 99, AttributeKind::dataset, 2}, probing::system_clock_ms);
  const bool pass = !a.empty() && strip_transport(a) == strip_transport(b);
  return {pass, std::to_string(a.size()) + " local records vs " + std::to_string(b.size()) +
                    " loopback records, identical outside timestamp and adapter"};
}

std::string normalized(const fs::path& file) {
  if (file.extension() != ".jsonl") return read_text_file(file);
  std::string out;
  for (const auto& r : strip_transport(read_jsonl_file(file))) out += record_to_jsonl(r) + "\n";
  return out;
}

Outcome criterion10() {
  const auto config = (kSource / "configs" / "smoke.yaml").string();
  std::vector<fs::path> dirs{kWork / "determinism-a", kWork / "determinism-b"};
  for (const auto& d : dirs) {
    fs::remove_all(d);
    const std::string out_dir = d.string();
    const char* argv[] = {"probekit", "--config", config.c_str(), "--out-dir", out_dir.c_str(), "pipeline"};
    std::ostringstream out, err;
    const int rc = cli::run_cli(6, argv, out, err);
    if (rc != 0) return {false, "pipeline exited " + std::to_string(rc) + ": " + err.str()};
  }
  std::size_t files = 0, reports = 0;
  for (const auto& e : fs::recursive_directory_iterator(dirs[0])) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dirs[0]);
    const auto other = dirs[1] / rel;
    if (!fs::exists(other) || normalized(e.path()) != normalized(other)) {
      return {false, rel.string() + " differs between runs"};
    }
    ++files;
    if (rel.string().rfind("report-", 0) == 0) ++reports;
  }
  return {reports == 4, std::to_string(files) + " artifacts identical across two runs (" + std::to_string(reports) +
                            " reports byte-identical; records compared without timestamps)"};
}

}  // namespace

int main(int argc, char** argv) {
  fs::create_directories(kWork);
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9, criterion10};
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));
  int failed = 0;
  for (int c = 1; c <= 10; ++c) {
    if (!only.empty() && !only.contains(c)) continue;
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(c - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c << ": " << o.detail << std::endl;
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}

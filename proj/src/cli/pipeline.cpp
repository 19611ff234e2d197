#include "probekit/cli/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <ostream>
#include <sstream>

#include "probekit/core/rng.hpp"

namespace probekit::cli {

Seeds derive_seeds(std::uint64_t master) {
  Seeds s;
  s.master = master;
  s.campaign = derive_seed(master, "campaign");
  s.probes_architecture = derive_seed(master, "probes-architecture");
  s.probes_dataset = derive_seed(master, "probes-dataset");
  s.split = derive_seed(master, "split");
  s.forest = derive_seed(master, "forest");
  s.text_campaign = derive_seed(master, "text-campaign");
  s.permutation = derive_seed(master, "permutation");
  return s;
}

Json seeds_to_json(const Seeds& s) {
  Json j = Json::object();
  j["master"] = s.master;
  j["zoo"] = s.master;
  j["campaign"] = s.campaign;
  j["probes_architecture"] = s.probes_architecture;
  j["probes_dataset"] = s.probes_dataset;
  j["split"] = s.split;
  j["forest"] = s.forest;
  j["text_campaign"] = s.text_campaign;
  j["permutation"] = s.permutation;
  return j;
}

std::vector<zoo::ZooMember> build_config_zoo(const ExperimentConfig& cfg) {
  return zoo::build_zoo(cfg.archs, resolve_datasets(cfg), cfg.zoo, cfg.master_seed);
}

std::vector<probing::Target> zoo_targets(const std::vector<zoo::ZooMember>& members) {
  std::vector<probing::Target> targets;
  targets.reserve(members.size());
  for (const auto& m : members) {
    targets.push_back(probing::Target::local(
        m.id, m.model,
        {{AttributeKind::architecture, m.arch_name()}, {AttributeKind::dataset, m.base_dataset()}}));
  }
  return targets;
}

ProbeSet build_pool(const PoolConfig& pool, std::size_t dim, const std::vector<zoo::DatasetSpec>& datasets,
                    std::uint64_t seed, const std::string& name) {
  ProbeSet out(name, Modality::vector, dim, {});
  if (pool.rays > 0) {
    out = probing::merge_pools(name, out, probing::radial_pool(dim, pool.rays, pool.ray_min, pool.ray_max, seed));
  }
  if (pool.cube > 0 || pool.centroids) {
    const std::vector<zoo::DatasetSpec> none;
    auto extra = probing::candidate_pool(dim, pool.cube, pool.cube_range, pool.centroids ? datasets : none, seed);
    out = probing::merge_pools(name, out, extra);
  }
  if (out.empty()) throw ValidationError("probe pool '" + name + "' is empty");
  return out;
}

probing::ProbeSelection choose_probes(const ProbeConfig& cfg, const ProbeSet& pool,
                                      const std::vector<probing::Target>& calibration, std::uint64_t seed) {
  switch (cfg.selection) {
    case Selection::jsd:
      return probing::select_probes(pool, calibration, cfg.k);
    case Selection::shells:
      return probing::select_probes_by_shell(pool, calibration, cfg.shells);
    case Selection::random: {
      if (cfg.k > pool.size()) {
        throw ValidationError("cannot draw " + std::to_string(cfg.k) + " probes from a pool of " +
                              std::to_string(pool.size()));
      }
      std::vector<Probe> all = pool.probes();
      Rng rng(derive_seed(seed, "random"));
      rng.shuffle(std::span<Probe>(all));
      all.resize(cfg.k);
      return probing::ProbeSelection{ProbeSet(pool.name() + "-random", pool.modality(), pool.dim(), all), {}};
    }
  }
  throw ValidationError("unknown selection");
}

std::vector<ResponseRecord> collect_all(const probing::Campaign& campaign, const probing::Clock& clock) {
  std::ostringstream buf;
  JsonlWriter writer(buf);
  const auto report = probing::collect(campaign, writer, clock);
  if (report.n_errors > 0) {
    bool remote = false;
    for (const auto& t : campaign.targets) remote = remote || t.adapter_kind() == AdapterKind::remote;
    std::string first;
    for (const auto& t : report.targets) {
      if (!t.errors.empty()) {
        first = t.target_id + ": " + t.errors.front();
        break;
      }
    }
    const std::string msg = std::to_string(report.n_errors) + " failed queries (first: " + first + ")";
    if (remote) throw NetworkError(msg);
    throw Error(ErrorKind::internal, msg);
  }
  std::istringstream in(buf.str());
  return read_jsonl(in);
}

namespace {

detect::ExperimentOptions experiment_options(const ExperimentConfig& cfg, AttributeKind kind,
                                             const detect::FeatureConfig& features) {
  const Seeds seeds = derive_seeds(cfg.master_seed);
  detect::ExperimentOptions o;
  o.kind = kind;
  o.split = detect::SplitConfig{cfg.holdout, seeds.split};
  o.forest = cfg.forest;
  o.forest.seed = seeds.forest;
  o.features = features;
  o.repeats = cfg.repeats;
  return o;
}

Json slice_summary(const detect::EvalReport& r) {
  Json j = Json::object();
  j["n_test"] = r.n_test;
  j["accuracy"] = r.accuracy;
  j["macro_ap"] = r.macro_ap;
  Json ap = Json::object();
  for (std::size_t c = 0; c < r.labels.size(); ++c) {
    ap[r.labels[c]] = r.per_class_ap[c] ? Json(*r.per_class_ap[c]) : Json(nullptr);
  }
  j["per_class_ap"] = std::move(ap);
  return j;
}

std::string short_kind(AttributeKind k) { return k == AttributeKind::architecture ? "arch" : "dataset"; }

ProbeSet text_probe_set(const std::vector<std::string>& texts) {
  std::vector<Probe> probes;
  for (const auto& t : texts) {
    std::string id = t;
    std::transform(id.begin(), id.end(), id.begin(), [](unsigned char c) { return std::tolower(c); });
    probes.push_back(Probe::text(id, t));
  }
  return ProbeSet("text-probes", Modality::text, 0, std::move(probes));
}

std::vector<probing::Target> text_targets(const std::vector<text::TextZooMember>& members,
                                          std::size_t generation_length) {
  std::vector<probing::Target> targets;
  for (const auto& m : members) {
    targets.push_back(probing::Target::local_text(
        m.id, m.model, generation_length,
        {{AttributeKind::dataset, m.corpus_label},
         {AttributeKind::architecture, m.label(AttributeKind::architecture).value}}));
  }
  return targets;
}

void log_line(std::ostream* log, const std::string& line) {
  if (log) *log << line << '\n' << std::flush;
}

std::string jsonl_of(std::span<const ResponseRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_jsonl(r);
    out += '\n';
  }
  return out;
}

}  // namespace

VectorKindResult run_vector_kind(const ExperimentConfig& cfg, AttributeKind kind,
                                 const std::vector<zoo::ZooMember>& members,
                                 const std::vector<zoo::DatasetSpec>& datasets, bool fit_full,
                                 const probing::Clock& clock) {
  if (members.empty() || datasets.empty()) throw ValidationError("empty zoo");
  const Seeds seeds = derive_seeds(cfg.master_seed);
  const KindConfig& kc = cfg.kind(kind);
  const std::string name = "probes-" + std::string(to_string(kind));
  const auto targets = zoo_targets(members);
  const ProbeSet pool = build_pool(kc.probes.pool, datasets.front().dim, datasets, seeds.probes(kind), name);
  auto selection = choose_probes(kc.probes, pool, targets, seeds.probes(kind));

  probing::Campaign campaign{selection.selected, targets, 1, seeds.campaign, kind, cfg.workers};
  auto records = collect_all(campaign, clock);

  auto options = experiment_options(cfg, kind, detect::FeatureConfig{kc.layout, 2, 256});
  auto experiment = detect::run_attribution_experiment(records, selection.selected, options);

  std::map<std::string, std::string> slice_of;
  for (const auto& m : members) {
    slice_of[m.id] = kind == AttributeKind::architecture ? m.base_dataset() : m.arch_name();
  }
  auto slices = detect::slice_reports(experiment.report, slice_of);
  const double min_ap = detect::min_slice_ap(slices);

  std::optional<detect::AttributionDetector> detector;
  if (fit_full) {
    detector = detect::train_detector(records, selection.selected, kind, options.forest, options.features);
  }
  return VectorKindResult{kind,
                          pool.size(),
                          std::move(selection),
                          std::move(records),
                          std::move(options),
                          std::move(experiment),
                          std::move(slices),
                          min_ap,
                          std::move(detector)};
}

Json vector_kind_report(const ExperimentConfig& cfg, const VectorKindResult& r) {
  const KindConfig& kc = cfg.kind(r.kind);
  Json j = Json::object();
  j["kind"] = to_string(r.kind);
  j["modality"] = "vector";
  j["seeds"] = seeds_to_json(derive_seeds(cfg.master_seed));
  j["chance"] = 1.0 / static_cast<double>(r.experiment.report.labels.size());
  Json probes = Json::object();
  probes["pool_size"] = r.pool_size;
  probes["selection"] = to_string(kc.probes.selection);
  Json selected = Json::array();
  for (const auto& p : r.selection.selected.probes()) {
    Json e = Json::object();
    e["id"] = p.id;
    e["values"] = p.values();
    for (const auto& s : r.selection.ranking) {
      if (s.probe_id == p.id) e["mean_pairwise_jsd"] = s.score;
    }
    selected.push_back(std::move(e));
  }
  probes["selected"] = std::move(selected);
  j["probes"] = std::move(probes);
  j["experiment"] = detect::experiment_result_to_json(r.experiment, r.options);
  Json slices = Json::object();
  for (const auto& [name, rep] : r.slices) slices[name] = slice_summary(rep);
  j["slice_by"] = r.kind == AttributeKind::architecture ? "base_dataset" : "architecture";
  j["slices"] = std::move(slices);
  j["min_slice_ap"] = r.min_slice_ap;
  j["config"] = config_to_json(cfg);
  return j;
}

std::vector<text::Corpus> load_config_corpora(const TextConfig& t) {
  std::vector<text::Corpus> out;
  for (const auto& p : t.corpora) {
    if (!std::filesystem::exists(p)) throw ValidationError("corpus path '" + p.string() + "' does not exist");
    if (std::filesystem::is_directory(p)) {
      auto dir = text::load_corpora(p);
      out.insert(out.end(), dir.begin(), dir.end());
    } else {
      out.push_back(text::load_corpus(p));
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.label < b.label; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].label == out[i - 1].label) throw ValidationError("duplicate corpus label '" + out[i].label + "'");
  }
  if (out.size() < 2) throw ValidationError("need at least two corpora");
  return out;
}

TextKindResult run_text_dataset(const ExperimentConfig& cfg, const std::vector<text::Corpus>& corpora,
                                bool fit_full, const probing::Clock& clock) {
  if (!cfg.text) throw ValidationError("text is not configured");
  const TextConfig& t = *cfg.text;
  const Seeds seeds = derive_seeds(cfg.master_seed);
  TextKindResult r;
  r.kind = AttributeKind::dataset;
  r.members = text::build_text_zoo(corpora, {t.dataset_order}, t.dataset_segments);
  const ProbeSet probes = text_probe_set(t.probes);
  probing::Campaign campaign{probes, text_targets(r.members, t.generation_length), t.generations,
                             derive_seed(seeds.text_campaign, "dataset"), r.kind, cfg.workers};
  r.records = collect_all(campaign, clock);
  r.options = experiment_options(cfg, r.kind, t.features);
  r.experiment = detect::run_attribution_experiment(r.records, probes, r.options);
  r.threshold = 0.5;
  if (fit_full) r.detector = detect::train_detector(r.records, probes, r.kind, r.options.forest, r.options.features);
  return r;
}

TextKindResult run_text_architecture(const ExperimentConfig& cfg, const std::vector<text::Corpus>& corpora,
                                     bool fit_full, const probing::Clock& clock) {
  if (!cfg.text) throw ValidationError("text is not configured");
  const TextConfig& t = *cfg.text;
  const Seeds seeds = derive_seeds(cfg.master_seed);
  std::vector<text::Corpus> one;
  for (const auto& c : corpora) {
    if (c.label == t.arch_corpus) one.push_back(c);
  }
  if (one.empty()) throw ValidationError("text.architecture.corpus '" + t.arch_corpus + "' is not among the corpora");
  TextKindResult r;
  r.kind = AttributeKind::architecture;
  r.members = text::build_text_zoo(one, t.arch_orders, t.arch_segments);
  const ProbeSet probes = text_probe_set(t.probes);
  probing::Campaign campaign{probes, text_targets(r.members, t.generation_length), t.generations,
                             derive_seed(seeds.text_campaign, "architecture"), r.kind, cfg.workers};
  r.records = collect_all(campaign, clock);
  r.options = experiment_options(cfg, r.kind, t.features);
  for (const auto& m : r.members) r.options.groups[m.id] = m.group();
  r.experiment = detect::run_attribution_experiment(r.records, probes, r.options);
  const double chance = 1.0 / static_cast<double>(t.arch_orders.size());
  r.threshold = chance;
  if (t.permutations > 0) {
    r.null = detect::permutation_test(r.records, probes, r.options, t.permutations, seeds.permutation);
    r.threshold = std::max(chance, r.null->null_mean) + 3.0 * r.null->null_sd;
  }
  if (fit_full) r.detector = detect::train_detector(r.records, probes, r.kind, r.options.forest, r.options.features);
  return r;
}

Json text_kind_report(const ExperimentConfig& cfg, const TextKindResult& r) {
  const TextConfig& t = *cfg.text;
  Json j = Json::object();
  j["kind"] = to_string(r.kind);
  j["modality"] = "text";
  j["seeds"] = seeds_to_json(derive_seeds(cfg.master_seed));
  j["chance"] = 1.0 / static_cast<double>(r.experiment.report.labels.size());
  Json zoo = Json::object();
  zoo["generators"] = r.members.size();
  if (r.kind == AttributeKind::dataset) {
    zoo["order"] = t.dataset_order;
    zoo["segments"] = t.dataset_segments;
  } else {
    zoo["corpus"] = t.arch_corpus;
    zoo["orders"] = t.arch_orders;
    zoo["segments"] = t.arch_segments;
  }
  zoo["generation_length"] = t.generation_length;
  zoo["generations_per_probe"] = t.generations;
  j["zoo"] = std::move(zoo);
  j["probes"] = t.probes;
  j["experiment"] = detect::experiment_result_to_json(r.experiment, r.options);
  if (r.null) j["permutation_test"] = detect::permutation_test_to_json(*r.null);
  j["threshold"] = r.threshold;
  j["passes_threshold"] = r.experiment.report.accuracy > r.threshold;
  j["config"] = config_to_json(cfg);
  return j;
}

namespace {

void write_detector_artifacts(const std::filesystem::path& out, const std::string& stem, const Json& report,
                              const detect::EvalReport& eval, const detect::AttributionDetector* detector) {
  if (detector) detect::save_detector(out / ("forest-" + stem + ".json"), *detector);
  write_json_file(out / ("report-" + stem + ".json"), report);
  write_text_file(out / ("confusion-" + stem + ".csv"), detect::confusion_csv(eval));
  Json confusion = Json::object();
  confusion["labels"] = eval.labels;
  confusion["matrix"] = eval.confusion;
  write_json_file(out / ("confusion-" + stem + ".json"), confusion);
}

Json headline(const detect::EvalReport& r) {
  Json j = Json::object();
  j["accuracy"] = r.accuracy;
  j["macro_ap"] = r.macro_ap;
  j["n_test"] = r.n_test;
  j["n_classes"] = r.labels.size();
  return j;
}

Json attribute_field_target(const ExperimentConfig& cfg, const FieldTarget& f,
                            const std::vector<std::pair<AttributeKind, const detect::AttributionDetector*>>& detectors,
                            const std::vector<const ProbeSet*>& probe_sets) {
  Json out = Json::object();
  out["modality"] = to_string(f.modality);
  for (std::size_t i = 0; i < detectors.size(); ++i) {
    const auto& [kind, det] = detectors[i];
    probing::RemoteEndpoint ep = f.endpoint;
    std::size_t repeats = 1;
    if (f.modality == Modality::vector) {
      ep.output_dim = det->schema.output_dim;
    } else {
      ep.generation_length = cfg.text->generation_length;
      repeats = cfg.text->generations;
    }
    probing::Campaign campaign{*probe_sets[i], {probing::Target::remote(f.id, ep, f.modality)}, repeats,
                               derive_seed(derive_seeds(cfg.master_seed).campaign, f.id), std::nullopt, 1};
    const auto records = collect_all(campaign, probing::system_clock_ms);
    out[std::string(to_string(kind))] = detect::verdict_to_json(detect::attribute_records(*det, records));
  }
  return out;
}

}  // namespace

Json run_pipeline(const ExperimentConfig& cfg, const std::filesystem::path& out, std::ostream* log) {
  cfg.validate();
  std::filesystem::create_directories(out);
  const Seeds seeds = derive_seeds(cfg.master_seed);
  Json summary = Json::object();
  summary["seeds"] = seeds_to_json(seeds);

  const auto datasets = resolve_datasets(cfg);
  log_line(log, "[zoo] training " + std::to_string(cfg.archs.size() * datasets.size()) + " surrogates");
  const auto members = run_stage("zoo", [&] {
    auto m = zoo::build_zoo(cfg.archs, datasets, cfg.zoo, cfg.master_seed);
    zoo::save_zoo(out / "zoo", zoo::ZooManifest{cfg.master_seed, cfg.archs, datasets, cfg.zoo}, m);
    return m;
  });

  std::vector<VectorKindResult> vector_results;
  for (auto kind : {AttributeKind::architecture, AttributeKind::dataset}) {
    const std::string stem = short_kind(kind);
    log_line(log, "[" + stem + "] probe selection, collection, detection");
    vector_results.push_back(run_stage(std::string(to_string(kind)), [&] {
      auto r = run_vector_kind(cfg, kind, members, datasets, true);
      save_probe_set(out / ("probes-" + stem + ".json"), r.selection.selected);
      write_detector_artifacts(out, stem, vector_kind_report(cfg, r), r.experiment.report, &*r.detector);
      return r;
    }));
    const auto& r = vector_results.back();
    Json h = headline(r.experiment.report);
    h["min_slice_ap"] = r.min_slice_ap;
    h["probes"] = detect::probe_ids_in(r.records);
    summary[std::string(to_string(kind))] = std::move(h);
    log_line(log, "[" + stem + "] accuracy " + std::to_string(r.experiment.report.accuracy));
  }
  run_stage("records", [&] {
    std::string all;
    for (const auto& r : vector_results) all += jsonl_of(r.records);
    write_text_file(out / "records.jsonl", all);
    return 0;
  });

  std::optional<TextKindResult> text_dataset, text_arch;
  if (cfg.text) {
    const auto corpora = run_stage("text-corpora", [&] { return load_config_corpora(*cfg.text); });
    log_line(log, "[text-dataset] " + std::to_string(corpora.size()) + " corpora");
    text_dataset = run_stage("text-dataset", [&] {
      auto r = run_text_dataset(cfg, corpora, true);
      write_detector_artifacts(out, "text-dataset", text_kind_report(cfg, r), r.experiment.report, &*r.detector);
      return r;
    });
    log_line(log, "[text-dataset] accuracy " + std::to_string(text_dataset->experiment.report.accuracy));
    log_line(log, "[text-arch] corpus " + cfg.text->arch_corpus + ", " + std::to_string(cfg.text->permutations) +
                      " permutations");
    text_arch = run_stage("text-architecture", [&] {
      auto r = run_text_architecture(cfg, corpora, true);
      write_detector_artifacts(out, "text-arch", text_kind_report(cfg, r), r.experiment.report, &*r.detector);
      return r;
    });
    log_line(log, "[text-arch] accuracy " + std::to_string(text_arch->experiment.report.accuracy) + ", threshold " +
                      std::to_string(text_arch->threshold));
    run_stage("text-records", [&] {
      write_text_file(out / "records-text.jsonl", jsonl_of(text_dataset->records) + jsonl_of(text_arch->records));
      return 0;
    });
    Json td = headline(text_dataset->experiment.report);
    summary["text_dataset"] = std::move(td);
    Json ta = headline(text_arch->experiment.report);
    ta["threshold"] = text_arch->threshold;
    if (text_arch->null) {
      ta["null_mean"] = text_arch->null->null_mean;
      ta["null_sd"] = text_arch->null->null_sd;
    }
    summary["text_architecture"] = std::move(ta);
  }

  if (!cfg.field_targets.empty()) {
    Json verdicts = Json::object();
    run_stage("attribute", [&] {
      for (const auto& f : cfg.field_targets) {
        log_line(log, "[attribute] " + f.id + " at " + f.endpoint.url);
        std::vector<std::pair<AttributeKind, const detect::AttributionDetector*>> dets;
        std::vector<const ProbeSet*> probe_sets;
        std::vector<ProbeSet> owned;
        if (f.modality == Modality::vector) {
          for (const auto& r : vector_results) {
            dets.emplace_back(r.kind, &*r.detector);
            probe_sets.push_back(&r.selection.selected);
          }
        } else {
          if (!text_dataset) throw ValidationError("text field target '" + f.id + "' needs the text section");
          owned.push_back(text_probe_set(cfg.text->probes));
          dets.emplace_back(AttributeKind::dataset, &*text_dataset->detector);
          dets.emplace_back(AttributeKind::architecture, &*text_arch->detector);
          probe_sets = {&owned.front(), &owned.front()};
        }
        verdicts[f.id] = attribute_field_target(cfg, f, dets, probe_sets);
      }
      write_json_file(out / "verdicts.json", verdicts);
      return 0;
    });
    summary["verdicts"] = std::move(verdicts);
  }

  summary["config"] = config_to_json(cfg);
  write_json_file(out / "summary.json", summary);
  return summary;
}

}  // namespace probekit::cli

#include "probekit/cli/commands.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <ostream>
#include <regex>
#include <set>

#include "probekit/cli/pipeline.hpp"

namespace probekit::cli {

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out_dir = ".";
  bool verbose = false;
};

ExperimentConfig resolve_config(const Globals& g) {
  ExperimentConfig cfg = g.config.empty() ? ExperimentConfig() : load_config(g.config);
  if (g.seed) cfg.master_seed = *g.seed;
  return cfg;
}

std::filesystem::path out_path(const Globals& g, const std::string& given, const std::string& fallback) {
  return given.empty() ? std::filesystem::path(g.out_dir) / fallback : std::filesystem::path(given);
}

ProbeSet text_probes_from(const std::vector<std::string>& texts) {
  std::vector<Probe> probes;
  for (const auto& t : texts) {
    std::string id = t;
    for (auto& c : id) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    probes.push_back(Probe::text(id, t));
  }
  return ProbeSet("text-probes", Modality::text, 0, std::move(probes));
}

std::vector<std::string> configured_text_probes(const ExperimentConfig& cfg) {
  return cfg.text ? cfg.text->probes : TextConfig{}.probes;
}

std::size_t configured_generations(const ExperimentConfig& cfg) {
  return cfg.text ? cfg.text->generations : TextConfig{}.generations;
}

std::size_t configured_generation_length(const ExperimentConfig& cfg) {
  return cfg.text ? cfg.text->generation_length : TextConfig{}.generation_length;
}

// ---- campaign files ----

struct CampaignSpec {
  std::filesystem::path probes;
  std::optional<std::filesystem::path> zoo;
  std::vector<std::filesystem::path> corpora;
  std::vector<int> orders{2};
  std::size_t segments = 1;
  std::vector<FieldTarget> endpoints;
  std::optional<AttributeKind> kind;
  std::optional<std::size_t> repeats;
  std::optional<std::uint64_t> seed;
};

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (!allowed.contains(k)) throw ValidationError(where + ": unknown key '" + k + "'");
  }
}

std::filesystem::path relative_to(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

CampaignSpec load_campaign(const std::filesystem::path& file) {
  if (!std::filesystem::exists(file)) throw ValidationError("campaign file '" + file.string() + "' does not exist");
  const Json j = load_yaml_file(file);
  const std::string where = "campaign '" + file.string() + "'";
  if (!j.is_object()) throw ValidationError(where + " must be a mapping");
  reject_unknown(j, {"probes", "zoo", "corpora", "orders", "segments", "endpoints", "kind", "repeats", "seed"}, where);
  const auto base = file.parent_path();
  CampaignSpec c;
  try {
    if (!j.contains("probes")) throw ValidationError(where + ": 'probes' is required");
    c.probes = relative_to(base, j.at("probes").get<std::string>());
    if (j.contains("zoo")) c.zoo = relative_to(base, j.at("zoo").get<std::string>());
    if (j.contains("corpora")) {
      const Json& cj = j.at("corpora");
      if (cj.is_string()) {
        c.corpora.push_back(relative_to(base, cj.get<std::string>()));
      } else {
        for (const auto& e : cj) c.corpora.push_back(relative_to(base, e.get<std::string>()));
      }
    }
    if (j.contains("orders")) c.orders = j.at("orders").get<std::vector<int>>();
    if (j.contains("segments")) c.segments = j.at("segments").get<std::size_t>();
    if (j.contains("kind")) c.kind = parse_attribute_kind(j.at("kind").get<std::string>());
    if (j.contains("repeats")) c.repeats = j.at("repeats").get<std::size_t>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("endpoints")) {
      for (const auto& e : j.at("endpoints")) {
        reject_unknown(e, {"id", "url", "modality", "timeout_ms", "max_retries", "backoff_base_ms", "min_gap_ms"},
                       where + " endpoint");
        FieldTarget t;
        t.id = e.value("id", std::string());
        t.endpoint.url = e.at("url").get<std::string>();
        if (t.id.empty()) t.id = t.endpoint.url;
        t.modality = parse_modality(e.value("modality", std::string("vector")));
        t.endpoint.timeout_ms = e.value("timeout_ms", t.endpoint.timeout_ms);
        t.endpoint.max_retries = e.value("max_retries", t.endpoint.max_retries);
        t.endpoint.backoff_base_ms = e.value("backoff_base_ms", t.endpoint.backoff_base_ms);
        t.endpoint.min_gap_ms = e.value("min_gap_ms", t.endpoint.min_gap_ms);
        t.endpoint.validate();
        c.endpoints.push_back(std::move(t));
      }
    }
  } catch (const Json::exception& e) {
    throw ValidationError(where + ": " + e.what());
  }
  const int sources = (c.zoo ? 1 : 0) + (c.corpora.empty() ? 0 : 1) + (c.endpoints.empty() ? 0 : 1);
  if (sources != 1) throw ValidationError(where + ": give exactly one of 'zoo', 'corpora', 'endpoints'");
  return c;
}

// ---- commands ----

int cmd_zoo_build(const Globals& g, const std::string& archs, const std::string& datasets, const std::string& out,
                  std::ostream& os, std::ostream& es) {
  ExperimentConfig cfg = resolve_config(g);
  if (!archs.empty()) cfg.archs = load_arch_specs(archs);
  if (!datasets.empty()) cfg.datasets = load_dataset_specs(datasets);
  cfg.validate();
  const auto specs = resolve_datasets(cfg);
  const auto dir = out_path(g, out, "zoo");
  if (g.verbose) es << "training " << cfg.archs.size() * specs.size() << " surrogates\n";
  const auto members = zoo::build_zoo(cfg.archs, specs, cfg.zoo, cfg.master_seed);
  zoo::save_zoo(dir, zoo::ZooManifest{cfg.master_seed, cfg.archs, specs, cfg.zoo}, members);
  os << "wrote " << members.size() << " models to " << dir.string() << '\n';
  return 0;
}

int cmd_probe_select(const Globals& g, const std::string& zoo_dir, const std::string& kind_s, bool text,
                     const std::string& out, std::ostream& os, std::ostream& es) {
  const ExperimentConfig cfg = resolve_config(g);
  if (text) {
    const auto probes = text_probes_from(configured_text_probes(cfg));
    const auto path = out_path(g, out, "probes-text.json");
    save_probe_set(path, probes);
    os << "wrote " << probes.size() << " text probes to " << path.string() << '\n';
    return 0;
  }
  if (zoo_dir.empty()) throw ValidationError("probe select needs --zoo (or --text)");
  const auto kind = parse_attribute_kind(kind_s);
  zoo::ZooManifest manifest;
  const auto members = zoo::load_zoo(zoo_dir, &manifest);
  const auto& kc = cfg.kind(kind);
  const auto seed = derive_seeds(cfg.master_seed).probes(kind);
  const auto pool = build_pool(kc.probes.pool, manifest.datasets.front().dim, manifest.datasets, seed,
                               "probes-" + std::string(to_string(kind)));
  const auto selection = choose_probes(kc.probes, pool, zoo_targets(members), seed);
  if (g.verbose) {
    for (const auto& s : selection.ranking) es << s.probe_id << '\t' << s.score << '\n';
  }
  const auto path = out_path(g, out, kind == AttributeKind::architecture ? "probes-arch.json" : "probes-dataset.json");
  save_probe_set(path, selection.selected);
  os << "selected " << selection.selected.size() << " of " << pool.size() << " probes into " << path.string()
     << '\n';
  return 0;
}

int cmd_collect(const Globals& g, const std::string& campaign_file, const std::string& out, std::ostream& os,
                std::ostream& es) {
  const ExperimentConfig cfg = resolve_config(g);
  const CampaignSpec spec = load_campaign(campaign_file);
  const ProbeSet probes = load_probe_set(spec.probes);
  if (probes.empty()) throw ValidationError("probe set '" + spec.probes.string() + "' has no probes");
  std::vector<probing::Target> targets;
  if (spec.zoo) {
    targets = zoo_targets(zoo::load_zoo(*spec.zoo));
  } else if (!spec.corpora.empty()) {
    TextConfig t;
    t.corpora = spec.corpora;
    const auto corpora = load_config_corpora(t);
    for (const auto& m : text::build_text_zoo(corpora, spec.orders, spec.segments)) {
      targets.push_back(probing::Target::local_text(
          m.id, m.model, configured_generation_length(cfg),
          {{AttributeKind::dataset, m.corpus_label},
           {AttributeKind::architecture, m.label(AttributeKind::architecture).value}}));
    }
  } else {
    for (const auto& e : spec.endpoints) {
      probing::RemoteEndpoint ep = e.endpoint;
      ep.generation_length = configured_generation_length(cfg);
      targets.push_back(probing::Target::remote(e.id, ep, e.modality));
    }
  }
  const std::size_t repeats = spec.repeats.value_or(probes.modality() == Modality::text ? configured_generations(cfg) : 1);
  const std::uint64_t seed = spec.seed.value_or(derive_seeds(cfg.master_seed).campaign);
  probing::Campaign campaign{probes, std::move(targets), repeats, seed, spec.kind, cfg.workers};
  campaign.validate();

  const auto path = out_path(g, out, "records.jsonl");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  probing::CollectionReport report;
  {
    std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
    if (!file) throw ValidationError("cannot write '" + tmp.string() + "'");
    JsonlWriter writer(file);
    report = probing::collect(campaign, writer);
    file.flush();
    if (!file) throw Error(ErrorKind::internal, "write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
  if (g.verbose) es << collection_report_to_json(report).dump(2) << '\n';
  os << "wrote " << report.n_records << " records to " << path.string() << " (" << report.n_errors << " errors)\n";
  if (report.n_errors > 0) {
    throw NetworkError(std::to_string(report.n_errors) + " queries failed; see --verbose for details");
  }
  return 0;
}

// Records whose target id matches `pattern` anywhere; all of them when empty.
std::vector<ResponseRecord> read_filtered(const std::string& records_file, const std::string& pattern) {
  auto records = read_jsonl_file(records_file);
  if (pattern.empty()) return records;
  std::regex re;
  try {
    re = std::regex(pattern);
  } catch (const std::regex_error& e) {
    throw ValidationError("bad --targets pattern '" + pattern + "': " + e.what());
  }
  std::erase_if(records, [&](const ResponseRecord& r) { return !std::regex_search(r.target_id, re); });
  if (records.empty()) throw ValidationError("no records in '" + records_file + "' match '" + pattern + "'");
  return records;
}

int cmd_detect_train(const Globals& g, const std::string& records_file, const std::string& kind_s,
                     const std::string& probes_file, const std::string& filter, const std::string& out,
                     std::ostream& os) {
  const ExperimentConfig cfg = resolve_config(g);
  const auto kind = parse_attribute_kind(kind_s);
  const auto records = read_filtered(records_file, filter);
  const auto labelled = detect::records_of_kind(records, kind);
  if (labelled.empty()) {
    throw ValidationError("'" + records_file + "' has no records labelled with " + std::string(to_string(kind)));
  }
  const bool is_text = std::holds_alternative<GeneratedText>(labelled.front().output);
  detect::FeatureConfig features =
      is_text ? (cfg.text ? cfg.text->features : TextConfig{}.features) : detect::FeatureConfig{cfg.kind(kind).layout, 2, 256};
  detect::ForestConfig forest = cfg.forest;
  forest.seed = derive_seeds(cfg.master_seed).forest;
  const auto detector =
      probes_file.empty()
          ? detect::train_detector(labelled, is_text ? Modality::text : Modality::vector,
                                   detect::probe_ids_in(labelled), kind, forest, features)
          : detect::train_detector(labelled, load_probe_set(probes_file), kind, forest, features);
  const auto path = out_path(g, out, kind == AttributeKind::architecture ? "forest-arch.json" : "forest-dataset.json");
  detect::save_detector(path, detector);
  os << "trained " << detector.forest.trees.size() << " trees over " << detector.codebook.size() << " labels into "
     << path.string() << '\n';
  return 0;
}

int cmd_detect_eval(const std::string& records_file, const std::string& forest_file, const std::string& filter,
                    const std::string& report_file, const std::string& confusion_file, std::ostream& os) {
  const auto detector = detect::load_detector(forest_file);
  const auto records = read_filtered(records_file, filter);
  const auto report = detect::evaluate_detector(detector, records);
  os << detect::eval_report_table(report);
  if (!report_file.empty()) write_json_file(report_file, detect::eval_report_to_json(report));
  if (!confusion_file.empty()) write_text_file(confusion_file, detect::confusion_csv(report));
  return 0;
}

int cmd_attribute(const Globals& g, const std::string& forest_file, const std::string& url,
                  const std::string& probes_file, const std::string& target_id, std::ostream& os) {
  const ExperimentConfig cfg = resolve_config(g);
  const auto detector = detect::load_detector(forest_file);
  const auto probes = load_probe_set(probes_file);
  if (probes.empty()) throw ValidationError("probe set '" + probes_file + "' has no probes");
  if (probes.modality() != detector.schema.modality) {
    throw ValidationError("probe set is " + std::string(to_string(probes.modality())) + " but the detector expects " +
                          std::string(to_string(detector.schema.modality)));
  }
  for (const auto& id : detector.schema.probe_ids) {
    if (!probes.find(id)) throw ValidationError("probe set lacks probe '" + id + "' required by the detector");
  }
  probing::RemoteEndpoint ep;
  ep.url = url;
  std::size_t repeats = 1;
  if (detector.schema.modality == Modality::vector) {
    if (probes.dim() == 0) throw ValidationError("vector probe set without a dimension");
    ep.output_dim = detector.schema.output_dim;
  } else {
    ep.generation_length = configured_generation_length(cfg);
    repeats = configured_generations(cfg);
  }
  ep.validate();
  probing::Campaign campaign{probes,
                             {probing::Target::remote(target_id, ep, detector.schema.modality)},
                             repeats,
                             derive_seed(derive_seeds(cfg.master_seed).campaign, target_id),
                             std::nullopt,
                             1};
  const auto records = collect_all(campaign, probing::system_clock_ms);
  os << detect::verdict_to_json(detect::attribute_records(detector, records)).dump(2) << '\n';
  return 0;
}

int cmd_pipeline(const Globals& g, std::ostream& os, std::ostream& es) {
  if (g.config.empty()) es << "no --config given; running the built-in defaults without text stages\n";
  const ExperimentConfig cfg = resolve_config(g);
  const std::filesystem::path out(g.out_dir);
  const Json summary = run_pipeline(cfg, out, g.verbose ? &es : nullptr);
  os << summary.dump(2) << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"probekit: black-box model attribution by probing"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the config)");
  app.add_option("--config", g.config, "Experiment config (YAML)");
  app.add_option("--out-dir", g.out_dir, "Directory for outputs")->capture_default_str();
  app.add_flag("--verbose,-v", g.verbose, "Progress and diagnostics on stderr");
  app.fallthrough();

  std::function<int()> action;

  auto* zoo_cmd = app.add_subcommand("zoo", "Surrogate zoo")->require_subcommand(1);
  auto* zoo_build = zoo_cmd->add_subcommand("build", "Train the arch x dataset grid and save it");
  std::string archs, datasets, zoo_out;
  zoo_build->add_option("--archs", archs, "Architecture specs file");
  zoo_build->add_option("--datasets", datasets, "Dataset specs file");
  zoo_build->add_option("--out", zoo_out, "Output directory (default <out-dir>/zoo)");
  zoo_build->callback([&] { action = [&] { return cmd_zoo_build(g, archs, datasets, zoo_out, out, err); }; });

  auto* probe_cmd = app.add_subcommand("probe", "Probe sets")->require_subcommand(1);
  auto* probe_select = probe_cmd->add_subcommand("select", "Select probes for one attribution kind");
  std::string sel_zoo, sel_kind = "architecture", sel_out;
  bool sel_text = false;
  probe_select->add_option("--zoo", sel_zoo, "Zoo directory");
  probe_select->add_option("--kind", sel_kind, "architecture or dataset")->capture_default_str();
  probe_select->add_flag("--text", sel_text, "Write the configured text probes instead");
  probe_select->add_option("--out", sel_out, "Probe set file");
  probe_select->callback(
      [&] { action = [&] { return cmd_probe_select(g, sel_zoo, sel_kind, sel_text, sel_out, out, err); }; });

  auto* collect_cmd = app.add_subcommand("collect", "Query targets with a probe set");
  std::string campaign_file, collect_out;
  collect_cmd->add_option("--campaign", campaign_file, "Campaign file (YAML)")->required();
  collect_cmd->add_option("--out", collect_out, "Records file (default <out-dir>/records.jsonl)");
  collect_cmd->callback([&] { action = [&] { return cmd_collect(g, campaign_file, collect_out, out, err); }; });

  auto* detect_cmd = app.add_subcommand("detect", "Attribution detectors")->require_subcommand(1);
  auto* train_cmd = detect_cmd->add_subcommand("train", "Fit a detector on labelled records");
  std::string train_records, train_kind, train_probes, train_filter, train_out;
  train_cmd->add_option("--records", train_records, "Records file")->required();
  train_cmd->add_option("--kind", train_kind, "architecture or dataset")->required();
  train_cmd->add_option("--probes", train_probes, "Probe set (default: every probe in the records)");
  train_cmd->add_option("--targets", train_filter, "Only targets whose id matches this regex");
  train_cmd->add_option("--out", train_out, "Detector file");
  train_cmd->callback([&] {
    action = [&] { return cmd_detect_train(g, train_records, train_kind, train_probes, train_filter, train_out, out); };
  });
  auto* eval_cmd = detect_cmd->add_subcommand("eval", "Score a detector on labelled records");
  std::string eval_records, eval_forest, eval_filter, eval_report, eval_confusion;
  eval_cmd->add_option("--records", eval_records, "Records file")->required();
  eval_cmd->add_option("--forest", eval_forest, "Detector file")->required();
  eval_cmd->add_option("--targets", eval_filter, "Only targets whose id matches this regex");
  eval_cmd->add_option("--report", eval_report, "Write the report JSON here");
  eval_cmd->add_option("--confusion", eval_confusion, "Write the confusion CSV here");
  eval_cmd->callback([&] {
    action = [&] { return cmd_detect_eval(eval_records, eval_forest, eval_filter, eval_report, eval_confusion, out); };
  });

  auto* attr_cmd = app.add_subcommand("attribute", "Attribute a live endpoint");
  std::string attr_forest, attr_target, attr_probes, attr_id = "field";
  attr_cmd->add_option("--forest", attr_forest, "Detector file")->required();
  attr_cmd->add_option("--target", attr_target, "Endpoint URL")->required();
  attr_cmd->add_option("--probes", attr_probes, "Probe set file")->required();
  attr_cmd->add_option("--id", attr_id, "Target id used in records")->capture_default_str();
  attr_cmd->callback(
      [&] { action = [&] { return cmd_attribute(g, attr_forest, attr_target, attr_probes, attr_id, out); }; });

  auto* pipe_cmd = app.add_subcommand("pipeline", "Run every stage from one config");
  pipe_cmd->callback([&] { action = [&] { return cmd_pipeline(g, out, err); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::validation);
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    return action();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::internal);
  }
}

}  // namespace probekit::cli

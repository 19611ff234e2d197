#include "probekit/detect/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "probekit/core/error.hpp"
#include "probekit/core/rng.hpp"

namespace probekit::detect {

void SplitConfig::validate() const {
  if (!(holdout > 0.0 && holdout < 1.0)) throw ValidationError("holdout fraction must lie in (0, 1)");
}

TargetSplit stratified_split(const std::map<std::string, std::string>& target_labels, const SplitConfig& cfg) {
  cfg.validate();
  std::map<std::string, std::vector<std::string>> by_label;
  for (const auto& [target, label] : target_labels) by_label[label].push_back(target);

  TargetSplit split;
  for (auto& [label, targets] : by_label) {
    const std::size_t n = targets.size();
    if (n < 2) {
      throw ValidationError("class '" + label + "' has " + std::to_string(n) + " target(s); need 2 to stratify");
    }
    Rng rng(derive_seed(cfg.seed, label));
    rng.shuffle(std::span<std::string>(targets));
    const auto want = static_cast<std::size_t>(std::llround(cfg.holdout * static_cast<double>(n)));
    const std::size_t n_test = std::clamp<std::size_t>(want, 1, n - 1);
    split.test.insert(split.test.end(), targets.begin(), targets.begin() + static_cast<std::ptrdiff_t>(n_test));
    split.train.insert(split.train.end(), targets.begin() + static_cast<std::ptrdiff_t>(n_test), targets.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

TargetSplit grouped_split(const std::map<std::string, std::string>& target_labels,
                          const std::map<std::string, std::string>& group_of, const SplitConfig& cfg) {
  cfg.validate();
  std::map<std::string, std::vector<std::string>> members;
  for (const auto& [target, label] : target_labels) {
    const auto it = group_of.find(target);
    if (it == group_of.end()) throw ValidationError("target '" + target + "' has no group");
    members[it->second].push_back(target);
  }
  if (members.size() < 2) throw ValidationError("grouped split needs at least two groups");
  std::vector<std::string> groups;
  for (const auto& [g, ts] : members) groups.push_back(g);
  Rng rng(derive_seed(cfg.seed, "groups"));
  rng.shuffle(std::span<std::string>(groups));
  const std::size_t n = groups.size();
  const auto want = static_cast<std::size_t>(std::llround(cfg.holdout * static_cast<double>(n)));
  const std::size_t n_test = std::clamp<std::size_t>(want, 1, n - 1);
  TargetSplit split;
  for (std::size_t i = 0; i < n; ++i) {
    auto& side = i < n_test ? split.test : split.train;
    side.insert(side.end(), members[groups[i]].begin(), members[groups[i]].end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::map<std::string, std::string> target_labels(std::span<const ResponseRecord> records, AttributeKind kind) {
  std::map<std::string, std::string> out;
  for (const auto& r : records) {
    if (!r.true_label || r.true_label->kind != kind) continue;
    auto [it, fresh] = out.emplace(r.target_id, r.true_label->value);
    if (!fresh && it->second != r.true_label->value) {
      throw ValidationError("target '" + r.target_id + "' carries conflicting " + std::string(to_string(kind)) +
                            " labels");
    }
  }
  return out;
}

Json feature_config_to_json(const FeatureConfig& cfg) {
  Json j = Json::object();
  j["layout"] = to_string(cfg.layout);
  j["ngram_n"] = cfg.ngram_n;
  j["vocab_size"] = cfg.vocab_size;
  return j;
}

FeatureConfig feature_config_from_json(const Json& j) {
  FeatureConfig cfg;
  try {
    cfg.layout = parse_vector_layout(j.value("layout", std::string(to_string(cfg.layout))));
    cfg.ngram_n = j.value("ngram_n", cfg.ngram_n);
    cfg.vocab_size = j.value("vocab_size", cfg.vocab_size);
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("bad feature config: ") + e.what());
  }
  if (cfg.ngram_n < 1) throw ValidationError("ngram_n must be positive");
  if (cfg.vocab_size == 0) throw ValidationError("vocab_size must be positive");
  return cfg;
}

Json detector_to_json(const AttributionDetector& d) {
  Json j = Json::object();
  j["format"] = "probekit.detector";
  j["version"] = 1;
  j["kind"] = to_string(d.kind);
  j["codebook"] = codebook_to_json(d.codebook);
  j["schema"] = feature_schema_to_json(d.schema);
  j["forest"] = forest_to_json(d.forest);
  return j;
}

AttributionDetector detector_from_json(const Json& j) {
  AttributionDetector d;
  try {
    if (j.at("format").get<std::string>() != "probekit.detector" || j.at("version").get<int>() != 1) {
      throw ValidationError("not a version-1 detector document");
    }
    d.kind = parse_attribute_kind(j.at("kind").get<std::string>());
    d.codebook = codebook_from_json(j.at("codebook"));
    d.schema = feature_schema_from_json(j.at("schema"));
    d.forest = forest_from_json(j.at("forest"));
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("bad detector document: ") + e.what());
  }
  if (d.codebook.kind() != d.kind) throw ValidationError("detector codebook kind disagrees with detector kind");
  if (d.codebook.size() != d.forest.n_classes) throw ValidationError("detector codebook and forest disagree on K");
  if (d.schema.width() != d.forest.n_features) {
    throw ValidationError("detector schema width " + std::to_string(d.schema.width()) + " != forest width " +
                          std::to_string(d.forest.n_features));
  }
  return d;
}

void save_detector(const std::filesystem::path& path, const AttributionDetector& detector) {
  write_json_file(path, detector_to_json(detector));
}

AttributionDetector load_detector(const std::filesystem::path& path) {
  return detector_from_json(read_json_file(path));
}

namespace {

std::vector<ResponseRecord> records_for(std::span<const ResponseRecord> records,
                                        const std::vector<std::string>& targets) {
  const std::set<std::string, std::less<>> keep(targets.begin(), targets.end());
  std::vector<ResponseRecord> out;
  for (const auto& r : records) {
    if (keep.contains(r.target_id)) out.push_back(r);
  }
  return out;
}

Modality records_modality(std::span<const ResponseRecord> records) {
  if (records.empty()) throw ValidationError("no records");
  return std::holds_alternative<GeneratedText>(records.front().output) ? Modality::text : Modality::vector;
}

// Probe ids plus the modality their records must have.
struct ProbeIds {
  Modality modality;
  std::vector<std::string> ids;
  std::string name;
};

ProbeIds ids_of(const ProbeSet& probes) {
  if (probes.empty()) throw ValidationError("probe set '" + probes.name() + "' has no probes");
  ProbeIds out{probes.modality(), {}, probes.name()};
  for (const auto& p : probes.probes()) out.ids.push_back(p.id);
  return out;
}

FeatureSchema schema_for(std::span<const ResponseRecord> training, const ProbeIds& probes, const FeatureConfig& cfg) {
  if (probes.ids.empty()) throw ValidationError("probe set '" + probes.name + "' has no probes");
  const std::set<std::string, std::less<>> wanted(probes.ids.begin(), probes.ids.end());
  std::vector<ResponseRecord> mine;
  for (const auto& r : training) {
    if (wanted.contains(r.probe_id)) mine.push_back(r);
  }
  if (mine.empty()) throw ValidationError("no records for probe set '" + probes.name + "'");
  if (records_modality(mine) != probes.modality) {
    throw ValidationError("records and probe set '" + probes.name + "' disagree on modality");
  }
  if (probes.modality == Modality::vector) return vector_schema(probes.ids, infer_output_dim(mine), cfg.layout);
  std::vector<std::string> texts;
  for (const auto& r : mine) {
    const auto* g = std::get_if<GeneratedText>(&r.output);
    if (!g) throw ValidationError("mixed text and vector records for target '" + r.target_id + "'");
    texts.push_back(g->text);
  }
  return text_schema(probes.ids, text::build_vocab(texts, cfg.ngram_n, cfg.vocab_size));
}

Codebook codebook_of(const std::map<std::string, std::string>& labels, AttributeKind kind) {
  std::vector<std::string> values;
  for (const auto& [target, value] : labels) values.push_back(value);
  if (values.empty()) {
    throw ValidationError("no records carry a " + std::string(to_string(kind)) + " label");
  }
  return Codebook(kind, std::move(values));
}

AttributionDetector fit_detector(std::span<const ResponseRecord> training, const ProbeIds& probes,
                                 Codebook codebook, const ForestConfig& forest_cfg,
                                 const FeatureConfig& features) {
  AttributionDetector d;
  d.kind = codebook.kind();
  d.schema = schema_for(training, probes, features);
  const FeatureMatrix fm = assemble_features(training, d.schema, &codebook);
  d.forest = fit_forest(fm.view(), fm.labels, codebook.size(), forest_cfg);
  d.codebook = std::move(codebook);
  return d;
}

}  // namespace

AttributionDetector train_detector(std::span<const ResponseRecord> records, const ProbeSet& probes,
                                   AttributeKind kind, const ForestConfig& forest, const FeatureConfig& features) {
  const auto labelled = records_of_kind(records, kind);
  auto codebook = codebook_of(target_labels(labelled, kind), kind);
  return fit_detector(labelled, ids_of(probes), std::move(codebook), forest, features);
}

AttributionDetector train_detector(std::span<const ResponseRecord> records, Modality modality,
                                   std::vector<std::string> probe_ids, AttributeKind kind, const ForestConfig& forest,
                                   const FeatureConfig& features) {
  const auto labelled = records_of_kind(records, kind);
  auto codebook = codebook_of(target_labels(labelled, kind), kind);
  return fit_detector(labelled, ProbeIds{modality, std::move(probe_ids), "from records"}, std::move(codebook), forest,
                      features);
}

EvalReport evaluate_detector(const AttributionDetector& detector, std::span<const ResponseRecord> records) {
  const auto labelled = records_of_kind(records, detector.kind);
  if (labelled.empty()) {
    throw ValidationError("no records carry a " + std::string(to_string(detector.kind)) + " label");
  }
  for (const auto& r : labelled) {
    if (!detector.codebook.contains(r.true_label->value)) {
      throw ValidationError("test label '" + r.true_label->value + "' of target '" + r.target_id +
                            "' is not in the detector codebook");
    }
  }
  const FeatureMatrix fm = assemble_features(labelled, detector.schema, &detector.codebook);
  return evaluate(detector.forest, fm.view(), fm.labels, detector.codebook, fm.row_targets);
}

Verdict attribute_records(const AttributionDetector& detector, std::span<const ResponseRecord> records) {
  std::vector<ResponseRecord> unlabelled(records.begin(), records.end());
  std::set<std::string> ids;
  for (auto& r : unlabelled) {
    r.true_label.reset();
    ids.insert(r.target_id);
  }
  if (ids.size() != 1) throw ValidationError("attribution expects the records of exactly one target");
  const FeatureMatrix fm = assemble_features(unlabelled, detector.schema);
  std::vector<double> votes(detector.codebook.size(), 0.0);
  for (std::size_t r = 0; r < fm.n_rows; ++r) {
    const auto p = forest_predict_proba(detector.forest, fm.row(r));
    for (std::size_t k = 0; k < votes.size(); ++k) votes[k] += p[k];
  }
  for (double& v : votes) v /= static_cast<double>(fm.n_rows);
  Verdict verdict;
  verdict.predicted_label = detector.codebook.value_at(argmax_label(votes));
  for (std::size_t k = 0; k < votes.size(); ++k) verdict.vote_fractions[detector.codebook.value_at(k)] = votes[k];
  return verdict;
}

Json verdict_to_json(const Verdict& verdict) {
  Json j = Json::object();
  j["predicted_label"] = verdict.predicted_label;
  Json votes = Json::object();
  for (const auto& [label, v] : verdict.vote_fractions) votes[label] = v;
  j["vote_fractions"] = std::move(votes);
  return j;
}

ExperimentResult run_attribution_experiment(std::span<const ResponseRecord> records, const ProbeSet& probes,
                                            const ExperimentOptions& options) {
  if (options.repeats == 0) throw ValidationError("experiment repeats must be positive");
  const auto labelled = records_of_kind(records, options.kind);
  const auto labels = target_labels(labelled, options.kind);
  const auto codebook = codebook_of(labels, options.kind);
  const auto probe_ids = ids_of(probes);

  ExperimentResult result;
  std::vector<EvalReport> reports;
  for (std::size_t r = 0; r < options.repeats; ++r) {
    SplitConfig split_cfg = options.split;
    ForestConfig forest_cfg = options.forest;
    if (r > 0) {
      const std::string tag = "repeat-" + std::to_string(r);
      split_cfg.seed = derive_seed(options.split.seed, tag);
      forest_cfg.seed = derive_seed(options.forest.seed, tag);
    }
    auto split = options.groups.empty() ? stratified_split(labels, split_cfg)
                                        : grouped_split(labels, options.groups, split_cfg);
    const auto train = records_for(labelled, split.train);
    const auto test = records_for(labelled, split.test);
    auto detector = fit_detector(train, probe_ids, codebook, forest_cfg, options.features);
    reports.push_back(evaluate_detector(detector, test));
    result.repeat_accuracies.push_back(reports.back().accuracy);
    if (r == 0) {
      result.detector = std::move(detector);
      result.split = std::move(split);
    }
  }
  result.report = merge_reports(reports);
  return result;
}

PermutationTest permutation_test(std::span<const ResponseRecord> records, const ProbeSet& probes,
                                 const ExperimentOptions& options, std::size_t permutations, std::uint64_t seed) {
  if (permutations < 2) throw ValidationError("a permutation test needs at least two permutations");
  auto labelled = records_of_kind(records, options.kind);
  const auto labels = target_labels(labelled, options.kind);
  PermutationTest test;
  test.observed = run_attribution_experiment(labelled, probes, options).report.accuracy;

  std::vector<std::string> targets, values;
  for (const auto& [t, v] : labels) {
    targets.push_back(t);
    values.push_back(v);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < permutations; ++i) {
    auto shuffled = values;
    Rng rng(derive_seed(seed, "permutation-" + std::to_string(i)));
    rng.shuffle(std::span<std::string>(shuffled));
    std::map<std::string, std::string> relabel;
    for (std::size_t t = 0; t < targets.size(); ++t) relabel.emplace(targets[t], shuffled[t]);
    for (auto& r : labelled) r.true_label->value = relabel.at(r.target_id);
    const double acc = run_attribution_experiment(labelled, probes, options).report.accuracy;
    test.null_accuracies.push_back(acc);
    sum += acc;
  }
  const double n = static_cast<double>(permutations);
  test.null_mean = sum / n;
  double ss = 0.0;
  for (double a : test.null_accuracies) ss += (a - test.null_mean) * (a - test.null_mean);
  test.null_sd = std::sqrt(ss / n);
  return test;
}

Json permutation_test_to_json(const PermutationTest& test) {
  Json j = Json::object();
  j["observed_accuracy"] = test.observed;
  j["permutations"] = test.null_accuracies.size();
  j["null_mean"] = test.null_mean;
  j["null_sd"] = test.null_sd;
  j["null_accuracies"] = test.null_accuracies;
  return j;
}

std::map<std::string, EvalReport> slice_reports(const EvalReport& report,
                                                const std::map<std::string, std::string>& slice_of) {
  std::map<std::string, std::vector<std::size_t>> rows;
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto it = slice_of.find(report.rows[i].target_id);
    if (it == slice_of.end()) {
      throw ValidationError("no slice known for target '" + report.rows[i].target_id + "'");
    }
    rows[it->second].push_back(i);
  }
  std::map<std::string, EvalReport> out;
  for (const auto& [slice, idx] : rows) out.emplace(slice, restrict_report(report, idx));
  return out;
}

double min_slice_ap(const std::map<std::string, EvalReport>& slices) {
  double lo = 1.0;
  for (const auto& [slice, r] : slices) {
    for (const auto& ap : r.per_class_ap) {
      if (ap) lo = std::min(lo, *ap);
    }
  }
  return lo;
}

Json experiment_result_to_json(const ExperimentResult& result, const ExperimentOptions& options) {
  Json j = Json::object();
  j["kind"] = to_string(options.kind);
  Json split = Json::object();
  split["holdout"] = options.split.holdout;
  split["seed"] = options.split.seed;
  split["grouped"] = !options.groups.empty();
  split["train_targets"] = result.split.train;
  split["test_targets"] = result.split.test;
  j["split"] = std::move(split);
  j["forest"] = forest_config_to_json(options.forest);
  j["features"] = feature_config_to_json(options.features);
  j["repeats"] = options.repeats;
  j["repeat_accuracies"] = result.repeat_accuracies;
  j["feature_width"] = result.detector.schema.width();
  j["report"] = eval_report_to_json(result.report);
  return j;
}

}  // namespace probekit::detect

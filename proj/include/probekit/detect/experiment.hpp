#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "probekit/core/codebook.hpp"
#include "probekit/core/json_io.hpp"
#include "probekit/core/types.hpp"
#include "probekit/detect/features.hpp"
#include "probekit/detect/forest.hpp"
#include "probekit/detect/metrics.hpp"

namespace probekit::detect {

struct SplitConfig {
  double holdout = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TargetSplit {
  std::vector<std::string> train;  // sorted
  std::vector<std::string> test;   // sorted
};

// Per class: sort target ids, shuffle with a stream keyed by (seed, label),
// and hold out round(holdout * n) of them, clamped to [1, n-1]. Throws
// ValidationError when a class has fewer than two targets.
TargetSplit stratified_split(const std::map<std::string, std::string>& target_labels, const SplitConfig& cfg);

// Holds out whole groups: targets sharing a group id (e.g. generators fit on
// one text) never straddle the split, so the detector cannot match a test
// target to a training sibling by shared content. Groups are shuffled with a
// stream keyed by (seed, "groups") and round(holdout * n_groups) of them,
// clamped to [1, n_groups-1], are held out. Throws ValidationError with fewer
// than two groups or a target missing from `group_of`.
TargetSplit grouped_split(const std::map<std::string, std::string>& target_labels,
                          const std::map<std::string, std::string>& group_of, const SplitConfig& cfg);

// layout applies to vector records, the n-gram settings to text records.
struct FeatureConfig {
  VectorLayout layout = VectorLayout::by_class;
  int ngram_n = 2;
  std::size_t vocab_size = 256;
};

Json feature_config_to_json(const FeatureConfig& cfg);
FeatureConfig feature_config_from_json(const Json& j);

// A fitted detector plus everything needed to featurize a fresh target.
struct AttributionDetector {
  AttributeKind kind = AttributeKind::architecture;
  Codebook codebook{AttributeKind::architecture, {"-"}};
  FeatureSchema schema;
  Forest forest;
};

Json detector_to_json(const AttributionDetector& detector);
AttributionDetector detector_from_json(const Json& j);
void save_detector(const std::filesystem::path& path, const AttributionDetector& detector);
AttributionDetector load_detector(const std::filesystem::path& path);

// Target id -> true label value of `kind`, from the records that carry one.
std::map<std::string, std::string> target_labels(std::span<const ResponseRecord> records, AttributeKind kind);

// Fits a detector on every record carrying a `kind` label. For text records
// the n-gram vocabulary comes from these records alone.
AttributionDetector train_detector(std::span<const ResponseRecord> records, const ProbeSet& probes,
                                   AttributeKind kind, const ForestConfig& forest,
                                   const FeatureConfig& features = {});
// Same, with the feature schema's probes given by id.
AttributionDetector train_detector(std::span<const ResponseRecord> records, Modality modality,
                                   std::vector<std::string> probe_ids, AttributeKind kind, const ForestConfig& forest,
                                   const FeatureConfig& features = {});

// Scores labelled records with a fitted detector.
EvalReport evaluate_detector(const AttributionDetector& detector, std::span<const ResponseRecord> records);

struct Verdict {
  std::string predicted_label;
  std::map<std::string, double> vote_fractions;
};

// Averages the forest votes over every row the records of one target
// assemble to (one row for vector targets, one per repeat for text).
Verdict attribute_records(const AttributionDetector& detector, std::span<const ResponseRecord> records);
Json verdict_to_json(const Verdict& verdict);

struct ExperimentOptions {
  AttributeKind kind = AttributeKind::architecture;
  SplitConfig split;
  ForestConfig forest;
  FeatureConfig features;
  // Independent splits; the report pools their test rows.
  std::size_t repeats = 1;
  // Target id -> group id; when non-empty the split is grouped_split.
  std::map<std::string, std::string> groups;
};

struct ExperimentResult {
  EvalReport report;  // pooled over repeats
  std::vector<double> repeat_accuracies;
  AttributionDetector detector;  // fitted on the first split
  TargetSplit split;  // the first split
};

// Stratified split over targets, fit on the training targets, evaluate on
// the held-out ones. All repeats of a text target stay on one side. Split r
// uses split seed and forest seed derive_seed(seed, "repeat-r") for r > 0;
// split 0 uses the configured seeds unchanged.
ExperimentResult run_attribution_experiment(std::span<const ResponseRecord> records, const ProbeSet& probes,
                                            const ExperimentOptions& options);

// Groups report rows by `slice_of[target_id]` and re-scores each group.
std::map<std::string, EvalReport> slice_reports(const EvalReport& report,
                                                const std::map<std::string, std::string>& slice_of);

// Smallest defined per-class AP over all slices; 1.0 when none is defined.
double min_slice_ap(const std::map<std::string, EvalReport>& slices);

struct PermutationTest {
  double observed = 0.0;  // pooled accuracy with the true labels
  std::vector<double> null_accuracies;
  double null_mean = 0.0;
  double null_sd = 0.0;  // population standard deviation
};

// Reruns the experiment with the targets' labels shuffled (permutation i
// shuffles with Rng(derive_seed(seed, "permutation-i"))). Splits, forests and
// features are configured exactly as for the observed run.
PermutationTest permutation_test(std::span<const ResponseRecord> records, const ProbeSet& probes,
                                 const ExperimentOptions& options, std::size_t permutations, std::uint64_t seed);
Json permutation_test_to_json(const PermutationTest& test);

Json experiment_result_to_json(const ExperimentResult& result, const ExperimentOptions& options);

}  // namespace probekit::detect

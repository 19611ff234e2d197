#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "probekit/cli/config.hpp"
#include "probekit/core/error.hpp"
#include "probekit/detect/experiment.hpp"
#include "probekit/probing/campaign.hpp"
#include "probekit/text/text_zoo.hpp"
#include "probekit/zoo/zoo.hpp"

namespace probekit::cli {

// Every stage seed, derived from the master seed by name.
struct Seeds {
  std::uint64_t master = 0;
  std::uint64_t campaign = 0;
  std::uint64_t probes_architecture = 0;
  std::uint64_t probes_dataset = 0;
  std::uint64_t split = 0;
  std::uint64_t forest = 0;
  std::uint64_t text_campaign = 0;
  std::uint64_t permutation = 0;

  std::uint64_t probes(AttributeKind k) const {
    return k == AttributeKind::architecture ? probes_architecture : probes_dataset;
  }
};

Seeds derive_seeds(std::uint64_t master);
Json seeds_to_json(const Seeds& seeds);

std::vector<zoo::ZooMember> build_config_zoo(const ExperimentConfig& cfg);
std::vector<probing::Target> zoo_targets(const std::vector<zoo::ZooMember>& members);

// Candidate pool for one kind: rays, cube points, centroids, in that order.
ProbeSet build_pool(const PoolConfig& pool, std::size_t dim, const std::vector<zoo::DatasetSpec>& datasets,
                    std::uint64_t seed, const std::string& name);

// Applies the configured selection rule. `random` draws count() probes
// uniformly without replacement with Rng(derive_seed(seed, "random")).
probing::ProbeSelection choose_probes(const ProbeConfig& cfg, const ProbeSet& pool,
                                      const std::vector<probing::Target>& calibration, std::uint64_t seed);

// Runs a campaign into memory. Any failed query is an error here: zoo
// targets are local and must never fail.
std::vector<ResponseRecord> collect_all(const probing::Campaign& campaign, const probing::Clock& clock);

struct VectorKindResult {
  AttributeKind kind = AttributeKind::architecture;
  std::size_t pool_size = 0;
  probing::ProbeSelection selection;
  std::vector<ResponseRecord> records;
  detect::ExperimentOptions options;
  detect::ExperimentResult experiment;
  // Architecture: sliced by base dataset. Dataset: sliced by architecture.
  std::map<std::string, detect::EvalReport> slices;
  double min_slice_ap = 1.0;
  std::optional<detect::AttributionDetector> detector;  // fitted on every target
};

VectorKindResult run_vector_kind(const ExperimentConfig& cfg, AttributeKind kind,
                                 const std::vector<zoo::ZooMember>& members,
                                 const std::vector<zoo::DatasetSpec>& datasets, bool fit_full,
                                 const probing::Clock& clock = probing::system_clock_ms);
Json vector_kind_report(const ExperimentConfig& cfg, const VectorKindResult& result);

struct TextKindResult {
  AttributeKind kind = AttributeKind::dataset;
  std::vector<text::TextZooMember> members;
  std::vector<ResponseRecord> records;
  detect::ExperimentOptions options;
  detect::ExperimentResult experiment;
  std::optional<detect::PermutationTest> null;
  // Architecture: accuracy must exceed max(1/K, null mean) + 3 null sd.
  double threshold = 0.0;
  std::optional<detect::AttributionDetector> detector;
};

// Dataset kind: every corpus, one order, stratified split.
TextKindResult run_text_dataset(const ExperimentConfig& cfg, const std::vector<text::Corpus>& corpora,
                                bool fit_full, const probing::Clock& clock = probing::system_clock_ms);
// Architecture kind: one corpus, several orders, split by source segment,
// scored against a label-permutation null.
TextKindResult run_text_architecture(const ExperimentConfig& cfg, const std::vector<text::Corpus>& corpora,
                                     bool fit_full, const probing::Clock& clock = probing::system_clock_ms);
Json text_kind_report(const ExperimentConfig& cfg, const TextKindResult& result);

std::vector<text::Corpus> load_config_corpora(const TextConfig& text);

// Runs every stage and writes the artifacts under `out_dir`:
//   zoo/, probes-arch.json, probes-dataset.json, records.jsonl,
//   forest-arch.json, forest-dataset.json, report-arch.json,
//   report-dataset.json, confusion-arch.csv, confusion-dataset.csv,
//   and with text enabled records-text.jsonl, forest-text-*.json,
//   report-text-*.json, confusion-text-*.csv; verdicts.json when field
//   targets are configured; summary.json last.
// Reports carry no timestamps. Progress goes to `log` when non-null.
Json run_pipeline(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream* log);

// Re-raises any failure with the same error kind, prefixed with the stage.
template <class F>
auto run_stage(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ProtocolError& e) {
    throw ProtocolError("stage '" + stage + "': " + e.what(), e.raw_body());
  } catch (const Error& e) {
    throw Error(e.kind(), "stage '" + stage + "': " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorKind::internal, "stage '" + stage + "': " + e.what());
  }
}

}  // namespace probekit::cli

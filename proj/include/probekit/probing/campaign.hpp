#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "probekit/core/json_io.hpp"
#include "probekit/probing/target.hpp"
#include "probekit/zoo/dataset.hpp"

namespace probekit::probing {

struct Campaign {
  ProbeSet probes;
  std::vector<Target> targets;
  // Stochastic generations per probe; text modality only.
  std::size_t repeats = 1;
  std::uint64_t seed = 0;
  // Which ground-truth label the emitted records carry.
  std::optional<AttributeKind> label_kind;
  // Targets queried concurrently; queries to one target stay sequential.
  std::size_t workers = 4;

  void validate() const;
};

struct TargetStatus {
  std::string target_id;
  std::size_t n_records = 0;
  std::size_t n_errors = 0;
  std::vector<std::string> errors;
};

struct CollectionReport {
  std::size_t n_records = 0;
  std::size_t n_errors = 0;
  std::vector<TargetStatus> targets;
};

Json collection_report_to_json(const CollectionReport& report);

// Rng stream for one query: keyed by (campaign seed, target id, probe id, repeat).
Rng query_rng(std::uint64_t campaign_seed, const std::string& target_id, const std::string& probe_id,
              std::size_t repeat);

// Queries every (target, probe, repeat) and appends records in target order x
// probe order x repeat order. Target failures are tallied and collection
// moves on; sink failures abort.
CollectionReport collect(const Campaign& campaign, JsonlWriter& sink, const Clock& clock = system_clock_ms);

struct ProbeScore {
  std::string probe_id;
  double score = 0.0;  // mean pairwise JSD over calibration targets, nats
};

struct ProbeSelection {
  ProbeSet selected;
  std::vector<ProbeScore> ranking;  // every candidate, best first
};

// Top-k candidates by mean pairwise Jensen-Shannon divergence of the
// calibration targets' outputs; ties go to the smaller probe id. The result
// does not depend on candidate order.
ProbeSelection select_probes(const ProbeSet& candidates, const std::vector<Target>& calibration, std::size_t k);

// Every candidate scored as in select_probes, best first.
std::vector<ProbeScore> score_probes(const ProbeSet& candidates, const std::vector<Target>& calibration);

// Best-scoring candidate per radius shell. A candidate belongs to the shell
// whose radius is nearest its L2 norm in log scale (ties to the smaller
// radius); the selection lists one probe per shell in shell order. Throws
// ValidationError when a shell gets no candidate.
ProbeSelection select_probes_by_shell(const ProbeSet& candidates, const std::vector<Target>& calibration,
                                      const std::vector<double>& shell_radii);

// `n` probes "ray-NNN": uniform random directions with radius log-uniform in
// [r_min, r_max].
ProbeSet radial_pool(std::size_t dim, std::size_t n, double r_min, double r_max, std::uint64_t seed);

// Concatenation of two pools; ids must stay unique.
ProbeSet merge_pools(const std::string& name, const ProbeSet& a, const ProbeSet& b);

// `n_random` probes "rand-NN" uniform in [-range, range]^dim, followed by the
// class centroids "<dataset>/cNN" of every calibration dataset.
ProbeSet candidate_pool(std::size_t dim, std::size_t n_random, double range,
                        const std::vector<zoo::DatasetSpec>& calibration_datasets, std::uint64_t seed);

// The fixed text probe list.
ProbeSet default_text_probes();

}  // namespace probekit::probing

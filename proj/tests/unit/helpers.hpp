#pragma once

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "probekit/core/json_io.hpp"
#include "probekit/probing/campaign.hpp"
#include "probekit/zoo/zoo.hpp"

namespace testing {

using namespace probekit;

inline std::filesystem::path source_dir() { return PROBEKIT_SOURCE_DIR; }

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::path(PROBEKIT_WORK_DIR) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline ResponseRecord vector_record(std::string probe, std::string target, std::vector<double> probs,
                                    std::optional<AttributionLabel> label = std::nullopt) {
  ResponseRecord r;
  r.probe_id = std::move(probe);
  r.target_id = std::move(target);
  r.true_label = std::move(label);
  r.output = ProbabilityVector::validated(std::move(probs));
  return r;
}

inline std::string collect_jsonl(const probing::Campaign& c) {
  std::ostringstream out;
  JsonlWriter w(out);
  probing::collect(c, w, [] { return std::int64_t{0}; });
  return out.str();
}

inline std::vector<ResponseRecord> collect_records(const probing::Campaign& c) {
  std::istringstream in(collect_jsonl(c));
  return read_jsonl(in);
}

inline zoo::ArchSpec arch(std::string name, std::vector<std::size_t> hidden, zoo::Activation act, double scale = 1.0) {
  zoo::ArchSpec a;
  a.name = std::move(name);
  a.hidden_layers = std::move(hidden);
  a.activation = act;
  a.weight_init_scale = scale;
  return a;
}

inline zoo::DatasetSpec dataset(std::string name, std::uint64_t seed, std::size_t spc = 10, std::size_t classes = 4,
                                std::size_t dim = 6) {
  zoo::DatasetSpec d;
  d.name = std::move(name);
  d.seed = seed;
  d.samples_per_class = spc;
  d.n_classes = classes;
  d.dim = dim;
  return d;
}

}  // namespace testing

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "probekit/core/types.hpp"
#include "probekit/zoo/dataset.hpp"
#include "probekit/zoo/model.hpp"

namespace probekit::zoo {

// Fine-tuning stage applied after base training. Every model is fine-tuned
// on a smaller resample of one other dataset of the grid, picked per model.
struct FineTuneConfig {
  std::size_t epochs = 5;
  double learning_rate = 0.01;
  std::size_t batch_size = 16;
  std::size_t samples_per_class = 8;
};

// Base training runs 20 epochs: every default architecture fits its dataset
// by then, and longer training washes out the architecture fingerprint.
struct ZooConfig {
  TrainConfig train{20, 0.1, 16, 0};  // seed is ignored; per-model seeds are derived
  std::optional<FineTuneConfig> fine_tune = FineTuneConfig{};
  std::size_t workers = 4;
};

struct ZooMember {
  std::string id;  // "<arch>@<dataset>"
  SurrogateModel model;

  const std::string& arch_name() const { return model.arch().name; }
  const std::string& base_dataset() const { return model.provenance().base_dataset; }
  std::vector<AttributionLabel> labels() const;
  AttributionLabel label(AttributeKind kind) const;
};

// Cartesian product arch x dataset. Each model's seeds derive from
// (master_seed, arch name, dataset name), so the zoo is independent of the
// worker count and of grid order.
std::vector<ZooMember> build_zoo(const std::vector<ArchSpec>& archs,
                                 const std::vector<DatasetSpec>& datasets, const ZooConfig& cfg,
                                 std::uint64_t master_seed);

struct ZooManifest {
  std::uint64_t master_seed = 0;
  std::vector<ArchSpec> archs;
  std::vector<DatasetSpec> datasets;
  ZooConfig config;
};

// <dir>/zoo.json (manifest + member index) and <dir>/models/<id>.json.
void save_zoo(const std::filesystem::path& dir, const ZooManifest& manifest,
              const std::vector<ZooMember>& members);
std::vector<ZooMember> load_zoo(const std::filesystem::path& dir, ZooManifest* manifest = nullptr);

Json dataset_spec_to_json(const DatasetSpec& spec);
DatasetSpec dataset_spec_from_json(const Json& j);

}  // namespace probekit::zoo

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "probekit/core/json_io.hpp"
#include "probekit/detect/experiment.hpp"
#include "probekit/probing/target.hpp"
#include "probekit/zoo/zoo.hpp"

namespace probekit::cli {

// Candidate probes for selection. Every enabled family is appended in this
// order: rays, cube points, class centroids of the zoo's datasets.
struct PoolConfig {
  std::size_t rays = 0;
  double ray_min = 0.3;
  double ray_max = 30.0;
  std::size_t cube = 0;
  double cube_range = 1.5;
  bool centroids = true;
};

enum class Selection { jsd, shells, random };

std::string_view to_string(Selection s);
Selection parse_selection(std::string_view s);

struct ProbeConfig {
  PoolConfig pool;
  Selection selection = Selection::jsd;
  std::size_t k = 5;  // jsd and random
  std::vector<double> shells;  // shells: one probe per radius

  std::size_t count() const { return selection == Selection::shells ? shells.size() : k; }
};

struct KindConfig {
  ProbeConfig probes;
  detect::VectorLayout layout = detect::VectorLayout::by_class;
};

// Generated dataset grid: names ds00.., seeds derived from the master seed.
struct DatasetGrid {
  std::size_t count = 10;
  std::size_t n_classes = 10;
  std::size_t dim = 16;
  std::size_t samples_per_class = 30;
  double cluster_spread = 0.3;
};

struct TextConfig {
  // Either a directory of *.txt files or explicit files; stem = label.
  std::vector<std::filesystem::path> corpora;
  std::vector<std::string> probes{"Hello", "2+2", "A", "Mario"};
  std::size_t generation_length = probing::kDefaultGenerationLength;
  std::size_t generations = 20;
  detect::FeatureConfig features{detect::VectorLayout::by_class, 3, 256};
  int dataset_order = 2;
  std::size_t dataset_segments = 5;
  std::string arch_corpus = "naturalist";
  std::vector<int> arch_orders{2, 3};
  std::size_t arch_segments = 20;
  std::size_t permutations = 100;  // 0 skips the permutation null
};

struct FieldTarget {
  std::string id;
  Modality modality = Modality::vector;
  probing::RemoteEndpoint endpoint;
};

struct ExperimentConfig {
  std::uint64_t master_seed = 1;
  std::vector<zoo::ArchSpec> archs = zoo::default_arch_specs();
  // When set, replaces the generated grid.
  std::optional<std::vector<zoo::DatasetSpec>> datasets;
  DatasetGrid grid;
  zoo::ZooConfig zoo;
  KindConfig architecture;
  KindConfig dataset;
  double holdout = 0.3;
  std::size_t repeats = 5;
  detect::ForestConfig forest;
  std::size_t workers = 1;  // concurrent targets during collection
  std::optional<TextConfig> text;
  std::vector<FieldTarget> field_targets;

  ExperimentConfig();
  const KindConfig& kind(AttributeKind k) const { return k == AttributeKind::architecture ? architecture : dataset; }
  KindConfig& kind(AttributeKind k) { return k == AttributeKind::architecture ? architecture : dataset; }
  void validate() const;
};

// Relative paths inside the document resolve against `base_dir`. Unknown keys
// are rejected. Throws ValidationError naming the offending key or path.
ExperimentConfig parse_config(const Json& doc, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

// YAML (or JSON) text to a JSON document: plain scalars become numbers or
// booleans when they parse as such, quoted scalars stay strings.
Json yaml_to_json(const std::string& text, const std::string& origin);
Json load_yaml_file(const std::filesystem::path& path);

// Fully resolved config, as embedded in reports. Paths are written as given.
Json config_to_json(const ExperimentConfig& cfg);

std::vector<zoo::DatasetSpec> resolve_datasets(const ExperimentConfig& cfg);
std::vector<zoo::ArchSpec> load_arch_specs(const std::filesystem::path& path);
std::vector<zoo::DatasetSpec> load_dataset_specs(const std::filesystem::path& path);

}  // namespace probekit::cli

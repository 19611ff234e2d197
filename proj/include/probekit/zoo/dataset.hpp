#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace probekit::zoo {

struct DatasetSpec {
  std::string name;
  std::size_t n_classes = 10;
  std::size_t dim = 16;
  std::size_t samples_per_class = 30;
  double cluster_spread = 0.3;
  std::uint64_t seed = 0;

  // n_classes >= 2, samples_per_class >= 4, cluster_spread > 0, dim > 0.
  void validate() const;

  bool operator==(const DatasetSpec&) const = default;
};

// Row-major n x dim samples with class indices. Rows are grouped by class.
struct Dataset {
  DatasetSpec spec;
  std::vector<double> X;
  std::vector<std::size_t> y;

  std::size_t size() const { return y.size(); }
  std::size_t dim() const { return spec.dim; }
  std::span<const double> row(std::size_t i) const { return {X.data() + i * spec.dim, spec.dim}; }

  bool operator==(const Dataset&) const = default;
};

// Gaussian mixture: class means ~ U[-1,1]^dim, samples ~ N(mean, spread^2 I).
Dataset synth_dataset(const DatasetSpec& spec);

// Per-class mean of the generated samples, one row per class.
std::vector<std::vector<double>> class_centroids(const Dataset& data);

// Ten specs "ds00".."ds09" with seeds derived from `master_seed`.
std::vector<DatasetSpec> default_dataset_specs(std::uint64_t master_seed);

}  // namespace probekit::zoo

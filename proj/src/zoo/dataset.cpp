#include "probekit/zoo/dataset.hpp"

#include <cstdio>

#include "probekit/core/error.hpp"
#include "probekit/core/rng.hpp"

namespace probekit::zoo {

void DatasetSpec::validate() const {
  if (name.empty()) throw ValidationError("dataset spec needs a name");
  if (n_classes < 2) throw ValidationError("dataset '" + name + "': n_classes must be >= 2");
  if (samples_per_class < 4) throw ValidationError("dataset '" + name + "': samples_per_class must be >= 4");
  if (!(cluster_spread > 0.0)) throw ValidationError("dataset '" + name + "': cluster_spread must be > 0");
  if (dim == 0) throw ValidationError("dataset '" + name + "': dim must be positive");
}

Dataset synth_dataset(const DatasetSpec& spec) {
  spec.validate();
  Rng means_rng(derive_seed(spec.seed, "class-means"));
  Rng noise_rng(derive_seed(spec.seed, "samples"));

  std::vector<double> means(spec.n_classes * spec.dim);
  for (double& m : means) m = means_rng.uniform(-1.0, 1.0);

  Dataset data{spec, {}, {}};
  const std::size_t n = spec.n_classes * spec.samples_per_class;
  data.X.reserve(n * spec.dim);
  data.y.reserve(n);
  for (std::size_t c = 0; c < spec.n_classes; ++c) {
    for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
      for (std::size_t j = 0; j < spec.dim; ++j) {
        data.X.push_back(means[c * spec.dim + j] + spec.cluster_spread * noise_rng.normal());
      }
      data.y.push_back(c);
    }
  }
  return data;
}

std::vector<std::vector<double>> class_centroids(const Dataset& data) {
  const std::size_t k = data.spec.n_classes;
  std::vector<std::vector<double>> sums(k, std::vector<double>(data.dim(), 0.0));
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = data.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) sums[data.y[i]][j] += row[j];
    ++counts[data.y[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    for (double& v : sums[c]) v /= static_cast<double>(counts[c]);
  }
  return sums;
}

std::vector<DatasetSpec> default_dataset_specs(std::uint64_t master_seed) {
  std::vector<DatasetSpec> specs;
  for (int i = 0; i < 10; ++i) {
    char name[8];
    std::snprintf(name, sizeof name, "ds%02d", i);
    DatasetSpec s;
    s.name = name;
    s.seed = derive_seed(master_seed, s.name);
    specs.push_back(s);
  }
  return specs;
}

}  // namespace probekit::zoo

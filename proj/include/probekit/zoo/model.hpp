#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "probekit/core/json_io.hpp"
#include "probekit/core/types.hpp"
#include "probekit/zoo/dataset.hpp"

namespace probekit::zoo {

enum class Activation { relu, tanh, sigmoid };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view s);

struct ArchSpec {
  std::string name;
  std::vector<std::size_t> hidden_layers;
  Activation activation = Activation::relu;
  double weight_init_scale = 1.0;

  // 1..6 hidden layers, widths in [4, 256], positive init scale.
  void validate() const;

  bool operator==(const ArchSpec&) const = default;
};

// The seven shipped architectures. Pairwise distinct in depth, width
// pattern, or activation.
std::vector<ArchSpec> default_arch_specs();

// Dense layer, weights row-major (out x in).
struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  double w(std::size_t o, std::size_t i) const { return weights[o * in + i]; }

  bool operator==(const Layer&) const = default;
};

struct Provenance {
  std::string base_dataset;
  std::optional<std::string> fine_tune_dataset;

  bool operator==(const Provenance&) const = default;
};

class SurrogateModel {
 public:
  // Throws ValidationError if layer shapes do not chain or weights are not finite.
  SurrogateModel(ArchSpec arch, std::vector<Layer> layers, Provenance provenance = {});

  const ArchSpec& arch() const { return arch_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers() { return layers_; }
  const Provenance& provenance() const { return provenance_; }
  void set_provenance(Provenance p) { provenance_ = std::move(p); }

  std::size_t input_dim() const { return layers_.front().in; }
  std::size_t n_classes() const { return layers_.back().out; }

  bool operator==(const SurrogateModel&) const = default;

 private:
  ArchSpec arch_;
  std::vector<Layer> layers_;
  Provenance provenance_;
};

struct TrainConfig {
  std::size_t epochs = 50;
  double learning_rate = 0.1;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;

  // epochs may be zero (no-op training); 0 <= learning_rate <= 1; batch_size >= 1.
  void validate() const;
};

// Weights ~ U(-s, s) with s = weight_init_scale / sqrt(fan_in); biases zero.
SurrogateModel init_model(const ArchSpec& arch, std::size_t input_dim, std::size_t n_classes,
                          std::uint64_t seed);

double activate(Activation a, double z);

std::vector<double> forward(const SurrogateModel& model, std::span<const double> x);

// Max-subtracted softmax; never overflows.
std::vector<double> softmax(std::span<const double> logits);

ProbabilityVector predict_proba(const SurrogateModel& model, std::span<const double> x);

struct LossGradient {
  double loss = 0.0;
  // Same shapes as the model's layers.
  std::vector<Layer> grads;
};

// Mean softmax cross-entropy over the rows `indices` of `data` and its
// analytic gradient with respect to every weight and bias.
LossGradient loss_and_gradient(const SurrogateModel& model, const Dataset& data,
                               std::span<const std::size_t> indices);

double mean_loss(const SurrogateModel& model, const Dataset& data);
double accuracy(const SurrogateModel& model, const Dataset& data);

// Minibatch SGD on mean cross-entropy. Sets provenance.base_dataset.
// Throws TrainingDiverged on a non-finite loss (naming the step) or if the
// final epoch's loss exceeds the first epoch's.
SurrogateModel train(SurrogateModel model, const Dataset& data, const TrainConfig& cfg);

// Continues SGD from the current weights with the output head kept.
// Requires provenance.base_dataset; sets provenance.fine_tune_dataset.
SurrogateModel fine_tune(SurrogateModel model, const Dataset& data, const TrainConfig& cfg);

Json arch_to_json(const ArchSpec& arch);
ArchSpec arch_from_json(const Json& j);
Json model_to_json(const SurrogateModel& model);
SurrogateModel model_from_json(const Json& j);

}  // namespace probekit::zoo

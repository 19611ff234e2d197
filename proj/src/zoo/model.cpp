#include "probekit/zoo/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "probekit/core/error.hpp"
#include "probekit/core/rng.hpp"

namespace probekit::zoo {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "relu";
}

Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "sigmoid") return Activation::sigmoid;
  throw ValidationError("unknown activation '" + std::string(s) + "'");
}

void ArchSpec::validate() const {
  if (name.empty()) throw ValidationError("architecture spec needs a name");
  if (hidden_layers.empty() || hidden_layers.size() > 6) {
    throw ValidationError("architecture '" + name + "': 1 to 6 hidden layers required");
  }
  for (auto w : hidden_layers) {
    if (w < 4 || w > 256) throw ValidationError("architecture '" + name + "': widths must lie in [4, 256]");
  }
  if (!(weight_init_scale > 0.0)) {
    throw ValidationError("architecture '" + name + "': weight_init_scale must be positive");
  }
}

std::vector<ArchSpec> default_arch_specs() {
  return {
      {"relu-128x128", {128, 128}, Activation::relu, 3.0},
      {"relu-32", {32}, Activation::relu, 1.0},
      {"relu-32x3", {32, 32, 32}, Activation::relu, 1.0},
      {"tanh-48", {48}, Activation::tanh, 1.0},
      {"tanh-32x6", {32, 6}, Activation::tanh, 2.0},
      {"sigmoid-64", {64}, Activation::sigmoid, 4.0},
      {"sigmoid-64x32", {64, 32}, Activation::sigmoid, 4.0},
  };
}

SurrogateModel::SurrogateModel(ArchSpec arch, std::vector<Layer> layers, Provenance provenance)
    : arch_(std::move(arch)), layers_(std::move(layers)), provenance_(std::move(provenance)) {
  if (layers_.empty()) throw ValidationError("model needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    if (layer.in == 0 || layer.out == 0) throw ValidationError("model layer with zero width");
    if (layer.weights.size() != layer.in * layer.out || layer.bias.size() != layer.out) {
      throw ValidationError("layer " + std::to_string(l) + ": weight/bias shape mismatch");
    }
    if (l > 0 && layers_[l - 1].out != layer.in) {
      throw ValidationError("layer " + std::to_string(l) + ": input width does not chain");
    }
    const auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(layer.weights.begin(), layer.weights.end(), finite) ||
        !std::all_of(layer.bias.begin(), layer.bias.end(), finite)) {
      throw ValidationError("layer " + std::to_string(l) + ": non-finite parameter");
    }
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || learning_rate > 1.0) {
    throw ValidationError("learning_rate must lie in [0, 1]");
  }
  if (batch_size == 0) throw ValidationError("batch_size must be positive");
}

SurrogateModel init_model(const ArchSpec& arch, std::size_t input_dim, std::size_t n_classes,
                          std::uint64_t seed) {
  arch.validate();
  if (input_dim == 0 || n_classes == 0) throw ValidationError("init_model: dimensions must be positive");
  Rng rng(seed);
  std::vector<std::size_t> widths{input_dim};
  widths.insert(widths.end(), arch.hidden_layers.begin(), arch.hidden_layers.end());
  widths.push_back(n_classes);

  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    Layer layer{widths[l], widths[l + 1], {}, std::vector<double>(widths[l + 1], 0.0)};
    const double s = arch.weight_init_scale / std::sqrt(static_cast<double>(layer.in));
    layer.weights.resize(layer.in * layer.out);
    for (double& w : layer.weights) w = rng.uniform(-s, s);
    layers.push_back(std::move(layer));
  }
  return SurrogateModel(arch, std::move(layers));
}

double activate(Activation a, double z) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::tanh: return std::tanh(z);
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
  }
  return z;
}

namespace {

// Derivative expressed through the activation output h = f(z) and z.
double activate_grad(Activation a, double z, double h) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - h * h;
    case Activation::sigmoid: return h * (1.0 - h);
  }
  return 1.0;
}

void affine(const Layer& layer, std::span<const double> x, std::vector<double>& z) {
  z.assign(layer.bias.begin(), layer.bias.end());
  for (std::size_t o = 0; o < layer.out; ++o) {
    const double* w = layer.weights.data() + o * layer.in;
    double acc = 0.0;
    for (std::size_t i = 0; i < layer.in; ++i) acc += w[i] * x[i];
    z[o] += acc;
  }
}

// Pre-activations and activations for every layer of one sample.
struct Trace {
  std::vector<std::vector<double>> z;
  std::vector<std::vector<double>> h;
};

void run_forward(const SurrogateModel& model, std::span<const double> x, Trace& trace) {
  const auto& layers = model.layers();
  trace.z.resize(layers.size());
  trace.h.resize(layers.size());
  std::span<const double> input = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    affine(layers[l], input, trace.z[l]);
    if (l + 1 < layers.size()) {
      trace.h[l].resize(trace.z[l].size());
      for (std::size_t o = 0; o < trace.z[l].size(); ++o) {
        trace.h[l][o] = activate(model.arch().activation, trace.z[l][o]);
      }
    } else {
      trace.h[l] = trace.z[l];
    }
    input = trace.h[l];
  }
}

void check_input(const SurrogateModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw ValidationError("input has dimension " + std::to_string(x.size()) + ", model expects " +
                          std::to_string(model.input_dim()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw ValidationError("input contains a non-finite value");
  }
}

std::vector<Layer> zero_like(const std::vector<Layer>& layers) {
  std::vector<Layer> out;
  out.reserve(layers.size());
  for (const auto& l : layers) {
    out.push_back(Layer{l.in, l.out, std::vector<double>(l.weights.size(), 0.0),
                        std::vector<double>(l.bias.size(), 0.0)});
  }
  return out;
}

}  // namespace

std::vector<double> forward(const SurrogateModel& model, std::span<const double> x) {
  check_input(model, x);
  Trace trace;
  run_forward(model, x, trace);
  return std::move(trace.z.back());
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double m = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : p) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

ProbabilityVector predict_proba(const SurrogateModel& model, std::span<const double> x) {
  return ProbabilityVector::validated(softmax(forward(model, x)), 1e-9);
}

LossGradient loss_and_gradient(const SurrogateModel& model, const Dataset& data,
                               std::span<const std::size_t> indices) {
  const auto& layers = model.layers();
  LossGradient out{0.0, zero_like(layers)};
  if (indices.empty()) return out;

  const double inv_n = 1.0 / static_cast<double>(indices.size());
  Trace trace;
  std::vector<double> delta, prev_delta;
  for (std::size_t idx : indices) {
    const auto x = data.row(idx);
    const std::size_t label = data.y[idx];
    run_forward(model, x, trace);

    const auto& logits = trace.z.back();
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - m);
    const double log_sum = m + std::log(sum);
    out.loss += (log_sum - logits[label]) * inv_n;

    // dL/dlogits = softmax - onehot
    delta.resize(logits.size());
    for (std::size_t o = 0; o < logits.size(); ++o) delta[o] = std::exp(logits[o] - log_sum);
    delta[label] -= 1.0;

    for (std::size_t l = layers.size(); l-- > 0;) {
      const Layer& layer = layers[l];
      Layer& g = out.grads[l];
      const std::span<const double> input = l == 0 ? x : std::span<const double>(trace.h[l - 1]);
      for (std::size_t o = 0; o < layer.out; ++o) {
        const double d = delta[o] * inv_n;
        g.bias[o] += d;
        double* gw = g.weights.data() + o * layer.in;
        for (std::size_t i = 0; i < layer.in; ++i) gw[i] += d * input[i];
      }
      if (l == 0) break;
      prev_delta.assign(layer.in, 0.0);
      for (std::size_t o = 0; o < layer.out; ++o) {
        const double* w = layer.weights.data() + o * layer.in;
        for (std::size_t i = 0; i < layer.in; ++i) prev_delta[i] += w[i] * delta[o];
      }
      for (std::size_t i = 0; i < layer.in; ++i) {
        prev_delta[i] *= activate_grad(model.arch().activation, trace.z[l - 1][i], trace.h[l - 1][i]);
      }
      std::swap(delta, prev_delta);
    }
  }
  return out;
}

double mean_loss(const SurrogateModel& model, const Dataset& data) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  double loss = 0.0;
  for (std::size_t i : all) {
    const auto logits = forward(model, data.row(i));
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - m);
    loss += m + std::log(sum) - logits[data.y[i]];
  }
  return loss / static_cast<double>(data.size());
}

double accuracy(const SurrogateModel& model, const Dataset& data) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto logits = forward(model, data.row(i));
    const auto best = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    correct += best == data.y[i];
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

SurrogateModel run_sgd(SurrogateModel model, const Dataset& data, const TrainConfig& cfg,
                       std::string_view phase) {
  cfg.validate();
  if (data.dim() != model.input_dim()) {
    throw ValidationError(std::string(phase) + ": dataset '" + data.spec.name + "' has dim " +
                          std::to_string(data.dim()) + ", model expects " +
                          std::to_string(model.input_dim()));
  }
  if (data.spec.n_classes != model.n_classes()) {
    throw ValidationError(std::string(phase) + ": dataset '" + data.spec.name + "' has " +
                          std::to_string(data.spec.n_classes) + " classes, model head has " +
                          std::to_string(model.n_classes()));
  }

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t n = data.size();
  const std::size_t steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;

  double first_epoch_loss = 0.0;
  double last_epoch_loss = 0.0;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < steps_per_epoch; ++b, ++step) {
      const std::size_t begin = b * cfg.batch_size;
      const std::size_t end = std::min(n, begin + cfg.batch_size);
      const std::span<const std::size_t> batch(order.data() + begin, end - begin);
      auto lg = loss_and_gradient(model, data, batch);
      if (!std::isfinite(lg.loss)) {
        throw TrainingDiverged(std::string(phase) + " diverged: non-finite loss at step " +
                               std::to_string(step) + " (epoch " + std::to_string(epoch) + ")");
      }
      epoch_loss += lg.loss * static_cast<double>(batch.size());
      if (cfg.learning_rate == 0.0) continue;
      auto& layers = model.mutable_layers();
      for (std::size_t l = 0; l < layers.size(); ++l) {
        for (std::size_t i = 0; i < layers[l].weights.size(); ++i) {
          layers[l].weights[i] -= cfg.learning_rate * lg.grads[l].weights[i];
        }
        for (std::size_t i = 0; i < layers[l].bias.size(); ++i) {
          layers[l].bias[i] -= cfg.learning_rate * lg.grads[l].bias[i];
        }
      }
    }
    epoch_loss /= static_cast<double>(n);
    if (epoch == 0) first_epoch_loss = epoch_loss;
    last_epoch_loss = epoch_loss;
  }
  if (last_epoch_loss > first_epoch_loss) {
    throw TrainingDiverged(std::string(phase) + " diverged: final epoch loss " +
                           std::to_string(last_epoch_loss) + " exceeds first epoch loss " +
                           std::to_string(first_epoch_loss));
  }
  return model;
}

}  // namespace

SurrogateModel train(SurrogateModel model, const Dataset& data, const TrainConfig& cfg) {
  model = run_sgd(std::move(model), data, cfg, "training");
  model.set_provenance(Provenance{data.spec.name, std::nullopt});
  return model;
}

SurrogateModel fine_tune(SurrogateModel model, const Dataset& data, const TrainConfig& cfg) {
  if (model.provenance().base_dataset.empty()) {
    throw ValidationError("fine_tune: model has no base dataset; train it first");
  }
  Provenance p = model.provenance();
  model = run_sgd(std::move(model), data, cfg, "fine-tuning");
  p.fine_tune_dataset = data.spec.name;
  model.set_provenance(std::move(p));
  return model;
}

Json arch_to_json(const ArchSpec& arch) {
  Json j = Json::object();
  j["name"] = arch.name;
  j["hidden_layers"] = arch.hidden_layers;
  j["activation"] = to_string(arch.activation);
  j["weight_init_scale"] = arch.weight_init_scale;
  return j;
}

ArchSpec arch_from_json(const Json& j) {
  ArchSpec a;
  try {
    a.name = j.at("name").get<std::string>();
    a.hidden_layers = j.at("hidden_layers").get<std::vector<std::size_t>>();
    a.activation = parse_activation(j.at("activation").get<std::string>());
    a.weight_init_scale = j.value("weight_init_scale", 1.0);
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("bad architecture spec: ") + e.what());
  }
  return a;
}

Json model_to_json(const SurrogateModel& model) {
  Json j = Json::object();
  j["format"] = "probekit.surrogate";
  j["version"] = 1;
  j["arch"] = arch_to_json(model.arch());
  Json prov = Json::object();
  prov["base_dataset"] = model.provenance().base_dataset;
  prov["fine_tune_dataset"] =
      model.provenance().fine_tune_dataset ? Json(*model.provenance().fine_tune_dataset) : Json(nullptr);
  j["provenance"] = std::move(prov);
  Json layers = Json::array();
  for (const auto& l : model.layers()) {
    Json e = Json::object();
    e["in"] = l.in;
    e["out"] = l.out;
    e["weights"] = l.weights;
    e["bias"] = l.bias;
    layers.push_back(std::move(e));
  }
  j["layers"] = std::move(layers);
  return j;
}

SurrogateModel model_from_json(const Json& j) {
  try {
    if (j.at("format") != "probekit.surrogate" || j.at("version") != 1) {
      throw ValidationError("unsupported model document format/version");
    }
    std::vector<Layer> layers;
    for (const auto& e : j.at("layers")) {
      layers.push_back(Layer{e.at("in").get<std::size_t>(), e.at("out").get<std::size_t>(),
                             e.at("weights").get<std::vector<double>>(),
                             e.at("bias").get<std::vector<double>>()});
    }
    Provenance p;
    const auto& prov = j.at("provenance");
    p.base_dataset = prov.at("base_dataset").get<std::string>();
    if (!prov.at("fine_tune_dataset").is_null()) {
      p.fine_tune_dataset = prov.at("fine_tune_dataset").get<std::string>();
    }
    return SurrogateModel(arch_from_json(j.at("arch")), std::move(layers), std::move(p));
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("bad model document: ") + e.what());
  }
}

}  // namespace probekit::zoo

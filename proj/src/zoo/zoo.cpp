#include "probekit/zoo/zoo.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "probekit/core/error.hpp"
#include "probekit/core/json_io.hpp"
#include "probekit/core/rng.hpp"

namespace probekit::zoo {

std::vector<AttributionLabel> ZooMember::labels() const {
  return {label(AttributeKind::architecture), label(AttributeKind::dataset)};
}

AttributionLabel ZooMember::label(AttributeKind kind) const {
  return kind == AttributeKind::architecture ? AttributionLabel{kind, arch_name()}
                                             : AttributionLabel{kind, base_dataset()};
}

std::vector<ZooMember> build_zoo(const std::vector<ArchSpec>& archs,
                                 const std::vector<DatasetSpec>& datasets, const ZooConfig& cfg,
                                 std::uint64_t master_seed) {
  if (archs.empty() || datasets.empty()) throw ValidationError("build_zoo: empty grid");
  for (const auto& a : archs) a.validate();
  for (const auto& d : datasets) d.validate();
  cfg.train.validate();
  if (cfg.fine_tune && datasets.size() < 2) {
    throw ValidationError("build_zoo: fine-tuning needs at least two datasets");
  }

  std::vector<Dataset> base_data;
  std::vector<Dataset> tune_data;
  for (const auto& spec : datasets) {
    base_data.push_back(synth_dataset(spec));
    if (cfg.fine_tune) {
      DatasetSpec small = spec;
      small.samples_per_class = cfg.fine_tune->samples_per_class;
      tune_data.push_back(synth_dataset(small));
    }
  }

  const std::size_t n_models = archs.size() * datasets.size();
  std::vector<std::optional<ZooMember>> slots(n_models);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto work = [&] {
    for (std::size_t m = next++; m < n_models; m = next++) {
      const ArchSpec& arch = archs[m / datasets.size()];
      const std::size_t d = m % datasets.size();
      const DatasetSpec& spec = datasets[d];
      try {
        const std::string id = arch.name + "@" + spec.name;
        const std::uint64_t model_seed = derive_seed(master_seed, id);
        auto model = init_model(arch, spec.dim, spec.n_classes, derive_seed(model_seed, "init"));
        TrainConfig tc = cfg.train;
        tc.seed = derive_seed(model_seed, "train");
        model = train(std::move(model), base_data[d], tc);
        if (cfg.fine_tune) {
          Rng pick(derive_seed(model_seed, "fine-tune-dataset"));
          std::size_t other = static_cast<std::size_t>(pick.below(datasets.size() - 1));
          if (other >= d) ++other;
          TrainConfig fc{cfg.fine_tune->epochs, cfg.fine_tune->learning_rate, cfg.fine_tune->batch_size,
                         derive_seed(model_seed, "fine-tune")};
          model = fine_tune(std::move(model), tune_data[other], fc);
        }
        slots[m].emplace(ZooMember{id, std::move(model)});
      } catch (const std::exception& e) {
        std::lock_guard lock(failure_mu);
        if (!failure) {
          try {
            throw Error(ErrorKind::internal,
                        "zoo model (" + arch.name + ", " + spec.name + "): " + e.what());
          } catch (...) {
            failure = std::current_exception();
          }
        }
        return;
      }
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(cfg.workers, 1, n_models);
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<ZooMember> members;
  members.reserve(n_models);
  for (auto& s : slots) members.push_back(std::move(*s));
  return members;
}

Json dataset_spec_to_json(const DatasetSpec& spec) {
  Json j = Json::object();
  j["name"] = spec.name;
  j["n_classes"] = spec.n_classes;
  j["dim"] = spec.dim;
  j["samples_per_class"] = spec.samples_per_class;
  j["cluster_spread"] = spec.cluster_spread;
  j["seed"] = spec.seed;
  return j;
}

DatasetSpec dataset_spec_from_json(const Json& j) {
  DatasetSpec s;
  try {
    s.name = j.at("name").get<std::string>();
    s.n_classes = j.value("n_classes", s.n_classes);
    s.dim = j.value("dim", s.dim);
    s.samples_per_class = j.value("samples_per_class", s.samples_per_class);
    s.cluster_spread = j.value("cluster_spread", s.cluster_spread);
    s.seed = j.at("seed").get<std::uint64_t>();
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("bad dataset spec: ") + e.what());
  }
  s.validate();
  return s;
}

namespace {

Json zoo_config_to_json(const ZooConfig& cfg) {
  Json j = Json::object();
  Json t = Json::object();
  t["epochs"] = cfg.train.epochs;
  t["learning_rate"] = cfg.train.learning_rate;
  t["batch_size"] = cfg.train.batch_size;
  j["train"] = std::move(t);
  if (cfg.fine_tune) {
    Json f = Json::object();
    f["epochs"] = cfg.fine_tune->epochs;
    f["learning_rate"] = cfg.fine_tune->learning_rate;
    f["batch_size"] = cfg.fine_tune->batch_size;
    f["samples_per_class"] = cfg.fine_tune->samples_per_class;
    j["fine_tune"] = std::move(f);
  } else {
    j["fine_tune"] = nullptr;
  }
  return j;
}

ZooConfig zoo_config_from_json(const Json& j) {
  ZooConfig cfg;
  const auto& t = j.at("train");
  cfg.train.epochs = t.at("epochs").get<std::size_t>();
  cfg.train.learning_rate = t.at("learning_rate").get<double>();
  cfg.train.batch_size = t.at("batch_size").get<std::size_t>();
  cfg.fine_tune.reset();
  if (!j.at("fine_tune").is_null()) {
    const auto& f = j.at("fine_tune");
    cfg.fine_tune = FineTuneConfig{f.at("epochs").get<std::size_t>(), f.at("learning_rate").get<double>(),
                                   f.at("batch_size").get<std::size_t>(),
                                   f.at("samples_per_class").get<std::size_t>()};
  }
  return cfg;
}

}  // namespace

void save_zoo(const std::filesystem::path& dir, const ZooManifest& manifest,
              const std::vector<ZooMember>& members) {
  Json j = Json::object();
  j["format"] = "probekit.zoo";
  j["version"] = 1;
  j["rng"] = kRngAlgorithm;
  j["master_seed"] = manifest.master_seed;
  Json archs = Json::array();
  for (const auto& a : manifest.archs) archs.push_back(arch_to_json(a));
  j["archs"] = std::move(archs);
  Json datasets = Json::array();
  for (const auto& d : manifest.datasets) datasets.push_back(dataset_spec_to_json(d));
  j["datasets"] = std::move(datasets);
  j["config"] = zoo_config_to_json(manifest.config);
  Json index = Json::array();
  for (const auto& m : members) {
    Json e = Json::object();
    e["id"] = m.id;
    e["file"] = "models/" + m.id + ".json";
    e["architecture"] = m.arch_name();
    e["dataset"] = m.base_dataset();
    e["fine_tune_dataset"] =
        m.model.provenance().fine_tune_dataset ? Json(*m.model.provenance().fine_tune_dataset) : Json(nullptr);
    index.push_back(std::move(e));
    write_json_file(dir / "models" / (m.id + ".json"), model_to_json(m.model));
  }
  j["members"] = std::move(index);
  write_json_file(dir / "zoo.json", j);
}

std::vector<ZooMember> load_zoo(const std::filesystem::path& dir, ZooManifest* manifest) {
  const Json j = read_json_file(dir / "zoo.json");
  try {
    if (j.at("format") != "probekit.zoo") throw ValidationError("not a zoo manifest: " + dir.string());
    if (manifest) {
      manifest->master_seed = j.at("master_seed").get<std::uint64_t>();
      manifest->archs.clear();
      for (const auto& a : j.at("archs")) manifest->archs.push_back(arch_from_json(a));
      manifest->datasets.clear();
      for (const auto& d : j.at("datasets")) manifest->datasets.push_back(dataset_spec_from_json(d));
      manifest->config = zoo_config_from_json(j.at("config"));
    }
    std::vector<ZooMember> members;
    for (const auto& e : j.at("members")) {
      members.push_back(ZooMember{e.at("id").get<std::string>(),
                                  model_from_json(read_json_file(dir / e.at("file").get<std::string>()))});
    }
    return members;
  } catch (const Json::exception& e) {
    throw ValidationError("bad zoo manifest in " + dir.string() + ": " + e.what());
  }
}

}  // namespace probekit::zoo

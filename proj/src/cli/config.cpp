#include "probekit/cli/config.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <set>

#include "probekit/core/error.hpp"

namespace probekit::cli {

std::string_view to_string(Selection s) {
  switch (s) {
    case Selection::jsd: return "jsd";
    case Selection::shells: return "shells";
    case Selection::random: return "random";
  }
  return "jsd";
}

Selection parse_selection(std::string_view s) {
  if (s == "jsd") return Selection::jsd;
  if (s == "shells") return Selection::shells;
  if (s == "random") return Selection::random;
  throw ValidationError("unknown probe selection '" + std::string(s) + "' (expected jsd, shells or random)");
}

ExperimentConfig::ExperimentConfig() {
  // Architecture probes: far-field rays at five scales, ranked per scale, with
  // each probability vector read in sorted order.
  architecture.probes.pool = PoolConfig{64, 0.3, 30.0, 0, 1.5, true};
  architecture.probes.selection = Selection::shells;
  architecture.probes.shells = {0.3, 1.0, 3.0, 10.0, 30.0};
  architecture.layout = detect::VectorLayout::sorted;
  dataset.probes.pool = PoolConfig{0, 0.3, 30.0, 0, 1.5, true};
  dataset.probes.selection = Selection::jsd;
  dataset.probes.k = 5;
  dataset.layout = detect::VectorLayout::by_class;
}

namespace {

// ---- YAML -> JSON ----

Json scalar_to_json(const YAML::Node& node) {
  const std::string& s = node.Scalar();
  if (node.Tag() == "!") return s;  // quoted
  if (s == "null" || s == "~" || s.empty()) return nullptr;
  if (s == "true" || s == "True") return true;
  if (s == "false" || s == "False") return false;
  {
    std::int64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && p == s.data() + s.size()) {
      if (v >= 0) return static_cast<std::uint64_t>(v);
      return v;
    }
  }
  {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && p == s.data() + s.size()) return v;
  }
  return s;
}

Json node_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Scalar:
      return scalar_to_json(node);
    case YAML::NodeType::Sequence: {
      Json a = Json::array();
      for (const auto& item : node) a.push_back(node_to_json(item));
      return a;
    }
    case YAML::NodeType::Map: {
      Json o = Json::object();
      for (const auto& kv : node) o[kv.first.as<std::string>()] = node_to_json(kv.second);
      return o;
    }
  }
  return nullptr;
}

// ---- typed access with unknown-key detection ----

class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError("config: '" + where() + "' must be a mapping");
  }

  // Present and not null. A key checked here counts as known.
  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const Json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  void read(const std::string& key, T& out) {
    seen_.insert(key);
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const Json::exception&) {
      throw ValidationError("config: '" + where(key) + "' has the wrong type");
    }
  }

  Section sub(const std::string& key) {
    seen_.insert(key);
    return Section(j_.at(key), where(key));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.contains(k)) throw ValidationError("config: unknown key '" + where(k) + "'");
    }
  }

  std::string where(const std::string& key = "") const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

void read_pool(Section s, PoolConfig& pool) {
  s.read("rays", pool.rays);
  s.read("ray_min", pool.ray_min);
  s.read("ray_max", pool.ray_max);
  s.read("cube", pool.cube);
  s.read("cube_range", pool.cube_range);
  s.read("centroids", pool.centroids);
  s.finish();
}

void read_kind(Section s, KindConfig& kind) {
  if (s.has("pool")) read_pool(s.sub("pool"), kind.probes.pool);
  std::string sel(to_string(kind.probes.selection));
  s.read("selection", sel);
  kind.probes.selection = parse_selection(sel);
  s.read("k", kind.probes.k);
  s.read("shells", kind.probes.shells);
  std::string layout(detect::to_string(kind.layout));
  s.read("layout", layout);
  kind.layout = detect::parse_vector_layout(layout);
  s.finish();
}

void read_train(Section s, zoo::TrainConfig& t) {
  s.read("epochs", t.epochs);
  s.read("learning_rate", t.learning_rate);
  s.read("batch_size", t.batch_size);
  s.finish();
}

void read_zoo(Section s, ExperimentConfig& cfg, const std::filesystem::path& base) {
  if (s.has("archs")) {
    const Json& a = s.raw("archs");
    if (a.is_string() && a.get<std::string>() == "default") {
      cfg.archs = zoo::default_arch_specs();
    } else if (a.is_string()) {
      cfg.archs = load_arch_specs(resolve(base, a.get<std::string>()));
    } else if (a.is_array()) {
      cfg.archs.clear();
      for (const auto& e : a) cfg.archs.push_back(zoo::arch_from_json(e));
    } else {
      throw ValidationError("config: 'zoo.archs' must be a file path, a list or \"default\"");
    }
  }
  if (s.has("datasets")) {
    const Json& d = s.raw("datasets");
    if (d.is_string()) {
      cfg.datasets = load_dataset_specs(resolve(base, d.get<std::string>()));
    } else if (d.is_array()) {
      std::vector<zoo::DatasetSpec> specs;
      for (const auto& e : d) specs.push_back(zoo::dataset_spec_from_json(e));
      cfg.datasets = std::move(specs);
    } else {
      throw ValidationError("config: 'zoo.datasets' must be a file path or a list");
    }
  }
  if (s.has("grid")) {
    Section g = s.sub("grid");
    g.read("count", cfg.grid.count);
    g.read("n_classes", cfg.grid.n_classes);
    g.read("dim", cfg.grid.dim);
    g.read("samples_per_class", cfg.grid.samples_per_class);
    g.read("cluster_spread", cfg.grid.cluster_spread);
    g.finish();
  }
  if (s.has("train")) read_train(s.sub("train"), cfg.zoo.train);
  if (s.has("fine_tune")) {
    const Json& f = s.raw("fine_tune");
    if (f.is_boolean() && !f.get<bool>()) {
      cfg.zoo.fine_tune.reset();
    } else {
      Section fs = s.sub("fine_tune");
      zoo::FineTuneConfig ft = cfg.zoo.fine_tune.value_or(zoo::FineTuneConfig{});
      fs.read("epochs", ft.epochs);
      fs.read("learning_rate", ft.learning_rate);
      fs.read("batch_size", ft.batch_size);
      fs.read("samples_per_class", ft.samples_per_class);
      fs.finish();
      cfg.zoo.fine_tune = ft;
    }
  }
  s.read("workers", cfg.zoo.workers);
  s.finish();
}

void read_detect(Section s, ExperimentConfig& cfg) {
  s.read("holdout", cfg.holdout);
  s.read("repeats", cfg.repeats);
  if (s.has("forest")) {
    Section f = s.sub("forest");
    f.read("n_trees", cfg.forest.n_trees);
    f.read("max_depth", cfg.forest.max_depth);
    f.read("min_samples_leaf", cfg.forest.min_samples_leaf);
    f.read("features_per_split", cfg.forest.features_per_split);
    f.read("workers", cfg.forest.workers);
    f.finish();
  }
  s.finish();
}

void read_text(Section s, TextConfig& t, const std::filesystem::path& base) {
  const Json& c = s.raw("corpora");
  if (c.is_string()) {
    t.corpora = {resolve(base, c.get<std::string>())};
  } else if (c.is_array()) {
    for (const auto& e : c) {
      if (!e.is_string()) throw ValidationError("config: 'text.corpora' entries must be paths");
      t.corpora.push_back(resolve(base, e.get<std::string>()));
    }
  } else {
    throw ValidationError("config: 'text.corpora' must be a directory or a list of files");
  }
  s.read("probes", t.probes);
  s.read("generation_length", t.generation_length);
  s.read("generations", t.generations);
  s.read("ngram_n", t.features.ngram_n);
  s.read("vocab_size", t.features.vocab_size);
  if (s.has("dataset")) {
    Section d = s.sub("dataset");
    d.read("order", t.dataset_order);
    d.read("segments", t.dataset_segments);
    d.finish();
  }
  if (s.has("architecture")) {
    Section a = s.sub("architecture");
    a.read("corpus", t.arch_corpus);
    a.read("orders", t.arch_orders);
    a.read("segments", t.arch_segments);
    a.read("permutations", t.permutations);
    a.finish();
  }
  s.finish();
}

void read_field_targets(const Json& list, ExperimentConfig& cfg) {
  if (!list.is_array()) throw ValidationError("config: 'field_targets' must be a list");
  for (std::size_t i = 0; i < list.size(); ++i) {
    Section s(list[i], "field_targets[" + std::to_string(i) + "]");
    FieldTarget t;
    s.read("id", t.id);
    std::string modality(probekit::to_string(t.modality));
    s.read("modality", modality);
    t.modality = parse_modality(modality);
    s.read("url", t.endpoint.url);
    s.read("timeout_ms", t.endpoint.timeout_ms);
    s.read("max_retries", t.endpoint.max_retries);
    s.read("backoff_base_ms", t.endpoint.backoff_base_ms);
    s.read("min_gap_ms", t.endpoint.min_gap_ms);
    s.finish();
    if (t.id.empty()) throw ValidationError("config: '" + s.where("id") + "' is required");
    t.endpoint.validate();
    cfg.field_targets.push_back(std::move(t));
  }
}

void check_corpus_paths(const TextConfig& t) {
  for (const auto& p : t.corpora) {
    if (!std::filesystem::exists(p)) throw ValidationError("corpus path '" + p.string() + "' does not exist");
  }
}

}  // namespace

Json yaml_to_json(const std::string& text, const std::string& origin) {
  try {
    return node_to_json(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    throw ValidationError("cannot parse '" + origin + "': " + e.what());
  }
}

Json load_yaml_file(const std::filesystem::path& path) {
  return yaml_to_json(read_text_file(path), path.string());
}

std::vector<zoo::ArchSpec> load_arch_specs(const std::filesystem::path& path) {
  const Json j = load_yaml_file(path);
  const Json& list = j.is_object() && j.contains("archs") ? j.at("archs") : j;
  if (!list.is_array()) throw ValidationError("'" + path.string() + "' must hold a list of architecture specs");
  std::vector<zoo::ArchSpec> out;
  for (const auto& e : list) out.push_back(zoo::arch_from_json(e));
  return out;
}

std::vector<zoo::DatasetSpec> load_dataset_specs(const std::filesystem::path& path) {
  const Json j = load_yaml_file(path);
  const Json& list = j.is_object() && j.contains("datasets") ? j.at("datasets") : j;
  if (!list.is_array()) throw ValidationError("'" + path.string() + "' must hold a list of dataset specs");
  std::vector<zoo::DatasetSpec> out;
  for (const auto& e : list) out.push_back(zoo::dataset_spec_from_json(e));
  return out;
}

ExperimentConfig parse_config(const Json& doc, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  if (doc.is_null()) return cfg;
  Section root(doc, "");
  root.read("seed", cfg.master_seed);
  root.read("workers", cfg.workers);
  if (root.has("zoo")) read_zoo(root.sub("zoo"), cfg, base_dir);
  if (root.has("probes")) {
    Section p = root.sub("probes");
    if (p.has("architecture")) read_kind(p.sub("architecture"), cfg.architecture);
    if (p.has("dataset")) read_kind(p.sub("dataset"), cfg.dataset);
    p.finish();
  }
  if (root.has("detect")) read_detect(root.sub("detect"), cfg);
  if (root.has("text")) {
    TextConfig t;
    read_text(root.sub("text"), t, base_dir);
    cfg.text = std::move(t);
  }
  if (root.has("field_targets")) read_field_targets(root.raw("field_targets"), cfg);
  root.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError("config file '" + path.string() + "' does not exist");
  return parse_config(load_yaml_file(path), path.parent_path());
}

void ExperimentConfig::validate() const {
  if (archs.empty()) throw ValidationError("config: no architectures");
  for (const auto& a : archs) a.validate();
  if (datasets) {
    if (datasets->size() < 2) throw ValidationError("config: need at least two datasets");
    for (const auto& d : *datasets) d.validate();
  } else if (grid.count < 2) {
    throw ValidationError("config: zoo.grid.count must be at least 2");
  }
  zoo.train.validate();
  if (!(holdout > 0.0 && holdout < 1.0)) throw ValidationError("config: detect.holdout must lie in (0, 1)");
  if (repeats == 0) throw ValidationError("config: detect.repeats must be positive");
  forest.validate();
  if (workers == 0) throw ValidationError("config: workers must be positive");
  for (auto k : {AttributeKind::architecture, AttributeKind::dataset}) {
    const auto& p = kind(k).probes;
    const std::string name(probekit::to_string(k));
    if (p.count() == 0) throw ValidationError("config: probes." + name + " selects no probes");
    if (p.pool.rays == 0 && p.pool.cube == 0 && !p.pool.centroids) {
      throw ValidationError("config: probes." + name + ".pool is empty");
    }
    if (p.selection == Selection::shells && p.shells.empty()) {
      throw ValidationError("config: probes." + name + ".shells is empty");
    }
  }
  if (text) {
    if (text->corpora.empty()) throw ValidationError("config: text.corpora is empty");
    check_corpus_paths(*text);
    if (text->probes.empty()) throw ValidationError("config: text.probes is empty");
    if (text->generations == 0 || text->generation_length == 0) {
      throw ValidationError("config: text generations and generation_length must be positive");
    }
    if (text->dataset_segments == 0 || text->arch_segments == 0) {
      throw ValidationError("config: text segments must be positive");
    }
    if (text->arch_orders.size() < 2) throw ValidationError("config: text.architecture.orders needs two orders");
    if (text->permutations == 1) throw ValidationError("config: text.architecture.permutations must be 0 or >= 2");
  }
}

std::vector<zoo::DatasetSpec> resolve_datasets(const ExperimentConfig& cfg) {
  if (cfg.datasets) return *cfg.datasets;
  std::vector<zoo::DatasetSpec> specs;
  for (std::size_t i = 0; i < cfg.grid.count; ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "ds%02zu", i);
    zoo::DatasetSpec s;
    s.name = name;
    s.n_classes = cfg.grid.n_classes;
    s.dim = cfg.grid.dim;
    s.samples_per_class = cfg.grid.samples_per_class;
    s.cluster_spread = cfg.grid.cluster_spread;
    s.seed = derive_seed(cfg.master_seed, s.name);
    s.validate();
    specs.push_back(s);
  }
  return specs;
}

namespace {

Json kind_to_json(const KindConfig& k) {
  Json j = Json::object();
  Json pool = Json::object();
  pool["rays"] = k.probes.pool.rays;
  pool["ray_min"] = k.probes.pool.ray_min;
  pool["ray_max"] = k.probes.pool.ray_max;
  pool["cube"] = k.probes.pool.cube;
  pool["cube_range"] = k.probes.pool.cube_range;
  pool["centroids"] = k.probes.pool.centroids;
  j["pool"] = std::move(pool);
  j["selection"] = to_string(k.probes.selection);
  if (k.probes.selection == Selection::shells) {
    j["shells"] = k.probes.shells;
  } else {
    j["k"] = k.probes.k;
  }
  j["layout"] = detect::to_string(k.layout);
  return j;
}

}  // namespace

Json config_to_json(const ExperimentConfig& cfg) {
  Json j = Json::object();
  j["seed"] = cfg.master_seed;
  j["workers"] = cfg.workers;
  Json z = Json::object();
  Json archs = Json::array();
  for (const auto& a : cfg.archs) archs.push_back(zoo::arch_to_json(a));
  z["archs"] = std::move(archs);
  Json datasets = Json::array();
  for (const auto& d : resolve_datasets(cfg)) datasets.push_back(zoo::dataset_spec_to_json(d));
  z["datasets"] = std::move(datasets);
  Json train = Json::object();
  train["epochs"] = cfg.zoo.train.epochs;
  train["learning_rate"] = cfg.zoo.train.learning_rate;
  train["batch_size"] = cfg.zoo.train.batch_size;
  z["train"] = std::move(train);
  if (cfg.zoo.fine_tune) {
    Json f = Json::object();
    f["epochs"] = cfg.zoo.fine_tune->epochs;
    f["learning_rate"] = cfg.zoo.fine_tune->learning_rate;
    f["batch_size"] = cfg.zoo.fine_tune->batch_size;
    f["samples_per_class"] = cfg.zoo.fine_tune->samples_per_class;
    z["fine_tune"] = std::move(f);
  } else {
    z["fine_tune"] = false;
  }
  j["zoo"] = std::move(z);
  Json probes = Json::object();
  probes["architecture"] = kind_to_json(cfg.architecture);
  probes["dataset"] = kind_to_json(cfg.dataset);
  j["probes"] = std::move(probes);
  Json d = Json::object();
  d["holdout"] = cfg.holdout;
  d["repeats"] = cfg.repeats;
  Json forest = detect::forest_config_to_json(cfg.forest);
  forest.erase("seed");
  d["forest"] = std::move(forest);
  j["detect"] = std::move(d);
  if (cfg.text) {
    const auto& t = *cfg.text;
    Json tj = Json::object();
    Json corpora = Json::array();
    for (const auto& p : t.corpora) corpora.push_back(p.filename().string());
    tj["corpora"] = std::move(corpora);
    tj["probes"] = t.probes;
    tj["generation_length"] = t.generation_length;
    tj["generations"] = t.generations;
    tj["ngram_n"] = t.features.ngram_n;
    tj["vocab_size"] = t.features.vocab_size;
    tj["dataset"] = Json{{"order", t.dataset_order}, {"segments", t.dataset_segments}};
    tj["architecture"] = Json{{"corpus", t.arch_corpus},
                              {"orders", t.arch_orders},
                              {"segments", t.arch_segments},
                              {"permutations", t.permutations}};
    j["text"] = std::move(tj);
  }
  Json fields = Json::array();
  for (const auto& f : cfg.field_targets) {
    fields.push_back(Json{{"id", f.id}, {"modality", probekit::to_string(f.modality)}, {"url", f.endpoint.url}});
  }
  j["field_targets"] = std::move(fields);
  return j;
}

}  // namespace probekit::cli

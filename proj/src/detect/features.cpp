#include "probekit/detect/features.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "probekit/core/error.hpp"

namespace probekit::detect {

std::string_view to_string(VectorLayout layout) {
  return layout == VectorLayout::sorted ? "sorted" : "by_class";
}

VectorLayout parse_vector_layout(std::string_view s) {
  if (s == "by_class") return VectorLayout::by_class;
  if (s == "sorted") return VectorLayout::sorted;
  throw ValidationError("unknown vector layout '" + std::string(s) + "' (expected by_class or sorted)");
}

std::size_t FeatureSchema::block_width() const {
  return modality == Modality::vector ? output_dim : (vocab ? vocab->size() : 0);
}

std::string FeatureSchema::column_name(std::size_t col) const {
  const std::size_t block = block_width();
  const std::string& probe = probe_ids.at(col / block);
  if (modality == Modality::vector) {
    return probe + (layout == VectorLayout::sorted ? "#" : "[") + std::to_string(col % block) +
           (layout == VectorLayout::sorted ? "" : "]");
  }
  return probe + "<" + vocab->grams()[col % block] + ">";
}

Json feature_schema_to_json(const FeatureSchema& schema) {
  Json j = Json::object();
  j["modality"] = to_string(schema.modality);
  j["probe_ids"] = schema.probe_ids;
  if (schema.modality == Modality::vector) {
    j["output_dim"] = schema.output_dim;
    j["layout"] = to_string(schema.layout);
  } else {
    j["vocab"] = text::vocab_to_json(*schema.vocab);
  }
  return j;
}

FeatureSchema feature_schema_from_json(const Json& j) {
  FeatureSchema s;
  try {
    s.modality = parse_modality(j.at("modality").get<std::string>());
    s.probe_ids = j.at("probe_ids").get<std::vector<std::string>>();
    if (s.modality == Modality::vector) {
      s.output_dim = j.at("output_dim").get<std::size_t>();
      s.layout = parse_vector_layout(j.value("layout", std::string("by_class")));
    } else {
      s.vocab = text::vocab_from_json(j.at("vocab"));
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("bad feature schema: ") + e.what());
  }
  if (s.probe_ids.empty()) throw ValidationError("feature schema has no probes");
  return s;
}

namespace {

std::vector<std::string> probe_ids_of(const ProbeSet& probes) {
  if (probes.empty()) throw ValidationError("probe set '" + probes.name() + "' has no probes");
  std::vector<std::string> ids;
  for (const auto& p : probes.probes()) ids.push_back(p.id);
  return ids;
}

}  // namespace

FeatureSchema vector_schema(std::vector<std::string> probe_ids, std::size_t output_dim, VectorLayout layout) {
  if (probe_ids.empty()) throw ValidationError("feature schema has no probes");
  if (output_dim == 0) throw ValidationError("vector schema needs a positive output dimension");
  return FeatureSchema{Modality::vector, layout, std::move(probe_ids), output_dim, std::nullopt};
}

FeatureSchema vector_schema(const ProbeSet& probes, std::size_t output_dim, VectorLayout layout) {
  if (probes.modality() != Modality::vector) throw ValidationError("vector schema needs a vector probe set");
  return vector_schema(probe_ids_of(probes), output_dim, layout);
}

FeatureSchema text_schema(std::vector<std::string> probe_ids, text::NgramVocab vocab) {
  if (probe_ids.empty()) throw ValidationError("feature schema has no probes");
  return FeatureSchema{Modality::text, VectorLayout::by_class, std::move(probe_ids), 0, std::move(vocab)};
}

FeatureSchema text_schema(const ProbeSet& probes, text::NgramVocab vocab) {
  if (probes.modality() != Modality::text) throw ValidationError("text schema needs a text probe set");
  return text_schema(probe_ids_of(probes), std::move(vocab));
}

std::vector<std::string> probe_ids_in(std::span<const ResponseRecord> records) {
  std::vector<std::string> ids;
  std::set<std::string, std::less<>> seen;
  for (const auto& r : records) {
    if (seen.insert(r.probe_id).second) ids.push_back(r.probe_id);
  }
  return ids;
}

std::size_t infer_output_dim(std::span<const ResponseRecord> records) {
  std::size_t dim = 0;
  for (const auto& r : records) {
    const auto* p = std::get_if<ProbabilityVector>(&r.output);
    if (!p) throw ValidationError("record for '" + r.target_id + "' holds text, expected probabilities");
    if (dim == 0) dim = p->size();
    if (p->size() != dim) {
      throw ValidationError("inconsistent output dimensions (" + std::to_string(dim) + " vs " +
                            std::to_string(p->size()) + ") at target '" + r.target_id + "'");
    }
  }
  if (dim == 0) throw ValidationError("no records to infer an output dimension from");
  return dim;
}

std::vector<ResponseRecord> records_of_kind(std::span<const ResponseRecord> records, AttributeKind kind) {
  std::vector<ResponseRecord> out;
  for (const auto& r : records) {
    if (r.true_label && r.true_label->kind == kind) out.push_back(r);
  }
  return out;
}

FeatureMatrix assemble_features(std::span<const ResponseRecord> records, const FeatureSchema& schema,
                                const Codebook* codebook) {
  const std::size_t n_probes = schema.probe_ids.size();
  const std::size_t block = schema.block_width();
  if (n_probes == 0 || block == 0) throw ValidationError("feature schema is empty");
  std::map<std::string, std::size_t, std::less<>> probe_index;
  for (std::size_t i = 0; i < n_probes; ++i) probe_index.emplace(schema.probe_ids[i], i);

  struct PerTarget {
    std::vector<std::vector<const ResponseRecord*>> by_probe;
    std::optional<AttributionLabel> label;
  };
  std::map<std::string, PerTarget> targets;
  for (const auto& r : records) {
    const auto pi = probe_index.find(r.probe_id);
    if (pi == probe_index.end()) continue;
    auto& t = targets[r.target_id];
    t.by_probe.resize(n_probes);
    t.by_probe[pi->second].push_back(&r);
    if (r.true_label) {
      if (t.label && !(*t.label == *r.true_label)) {
        throw ValidationError("target '" + r.target_id + "' carries conflicting true labels");
      }
      t.label = r.true_label;
    }
  }
  if (targets.empty()) throw ValidationError("no records for the schema's probes");

  FeatureMatrix fm;
  fm.schema = schema;
  const std::size_t width = schema.width();
  for (const auto& [target_id, t] : targets) {
    std::size_t repeats = 0;
    for (std::size_t p = 0; p < n_probes; ++p) {
      const std::size_t have = t.by_probe[p].size();
      if (have == 0) {
        throw ValidationError("missing record for target '" + target_id + "', probe '" + schema.probe_ids[p] + "'");
      }
      if (schema.modality == Modality::vector && have != 1) {
        throw ValidationError("duplicate records for target '" + target_id + "', probe '" + schema.probe_ids[p] + "'");
      }
      repeats = p == 0 ? have : std::min(repeats, have);
    }
    std::size_t label = 0;
    if (codebook) {
      if (!t.label || t.label->kind != codebook->kind()) {
        throw ValidationError("target '" + target_id + "' has no " + std::string(to_string(codebook->kind())) +
                              " label");
      }
      label = codebook->index_of(t.label->value);
    }
    for (std::size_t rep = 0; rep < repeats; ++rep) {
      const std::size_t base = fm.values.size();
      fm.values.resize(base + width, 0.0);
      for (std::size_t p = 0; p < n_probes; ++p) {
        const ResponseRecord& rec = *t.by_probe[p][rep];
        double* dst = fm.values.data() + base + p * block;
        if (schema.modality == Modality::vector) {
          const auto* probs = std::get_if<ProbabilityVector>(&rec.output);
          if (!probs) throw ValidationError("target '" + target_id + "' returned text for a vector schema");
          if (probs->size() != block) {
            throw ValidationError("target '" + target_id + "', probe '" + rec.probe_id + "': output dimension " +
                                  std::to_string(probs->size()) + " != " + std::to_string(block));
          }
          std::copy(probs->values().begin(), probs->values().end(), dst);
          if (schema.layout == VectorLayout::sorted) std::sort(dst, dst + block, std::greater<>());
        } else {
          const auto* gen = std::get_if<GeneratedText>(&rec.output);
          if (!gen) throw ValidationError("target '" + target_id + "' returned probabilities for a text schema");
          const auto f = text::ngram_features(gen->text, *schema.vocab);
          std::copy(f.begin(), f.end(), dst);
        }
      }
      ++fm.n_rows;
      fm.row_targets.push_back(target_id);
      fm.row_repeats.push_back(rep);
      if (codebook) fm.labels.push_back(label);
    }
  }
  return fm;
}

}  // namespace probekit::detect

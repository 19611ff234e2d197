#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "probekit/core/codebook.hpp"
#include "probekit/core/json_io.hpp"
#include "probekit/core/types.hpp"
#include "probekit/detect/tree.hpp"
#include "probekit/text/ngram.hpp"

namespace probekit::detect {

// How a probability vector fills its block.
//   by_class: entry c is the probability of class c
//   sorted:   probabilities in descending order, so the block ignores which
//             class index carries which mass
enum class VectorLayout { by_class, sorted };

std::string_view to_string(VectorLayout layout);
VectorLayout parse_vector_layout(std::string_view s);

// Column layout of a fingerprint row.
//   vector: |probes| x output_dim probabilities, probe-major in probe-set order
//   text:   |probes| x |vocab| n-gram frequencies, probe-major
struct FeatureSchema {
  Modality modality = Modality::vector;
  VectorLayout layout = VectorLayout::by_class;  // vector modality
  std::vector<std::string> probe_ids;
  std::size_t output_dim = 0;  // vector modality
  std::optional<text::NgramVocab> vocab;  // text modality

  std::size_t block_width() const;
  std::size_t width() const { return probe_ids.size() * block_width(); }
  std::string column_name(std::size_t col) const;
};

Json feature_schema_to_json(const FeatureSchema& schema);
FeatureSchema feature_schema_from_json(const Json& j);

FeatureSchema vector_schema(const ProbeSet& probes, std::size_t output_dim,
                            VectorLayout layout = VectorLayout::by_class);
FeatureSchema vector_schema(std::vector<std::string> probe_ids, std::size_t output_dim,
                            VectorLayout layout = VectorLayout::by_class);
FeatureSchema text_schema(const ProbeSet& probes, text::NgramVocab vocab);
FeatureSchema text_schema(std::vector<std::string> probe_ids, text::NgramVocab vocab);

// Probe ids in order of first appearance.
std::vector<std::string> probe_ids_in(std::span<const ResponseRecord> records);

struct FeatureMatrix {
  std::size_t n_rows = 0;
  std::vector<double> values;  // row-major n_rows x schema.width()
  std::vector<std::size_t> labels;  // empty when assembled without a codebook
  std::vector<std::string> row_targets;
  std::vector<std::size_t> row_repeats;
  FeatureSchema schema;

  MatrixView view() const { return MatrixView{values.data(), n_rows, schema.width()}; }
  std::span<const double> row(std::size_t r) const { return view().row(r); }
};

// Width of the probability vectors in `records`; throws if they disagree.
std::size_t infer_output_dim(std::span<const ResponseRecord> records);

// Vector modality: one row per target, sorted by target id; every
// (target, probe) pair needs exactly one record. Text modality: one row per
// (target, repeat), where repeat r is the r-th record of each probe in
// stream order; a target contributes min-over-probes repeats.
// With a codebook every target must carry a true label of the codebook's
// kind; rows are labelled through it. Records for probes outside the schema
// are ignored, so one record stream can feed detectors with different probes.
FeatureMatrix assemble_features(std::span<const ResponseRecord> records, const FeatureSchema& schema,
                                const Codebook* codebook = nullptr);

// Keep only records whose true_label has `kind`.
std::vector<ResponseRecord> records_of_kind(std::span<const ResponseRecord> records, AttributeKind kind);

}  // namespace probekit::detect

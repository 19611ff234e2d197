#include "probekit/core/codebook.hpp"

#include <algorithm>

#include "probekit/core/error.hpp"

namespace probekit {

Codebook::Codebook(AttributeKind kind, std::vector<std::string> values)
    : kind_(kind), values_(std::move(values)) {
  std::sort(values_.begin(), values_.end());
  values_.erase(std::unique(values_.begin(), values_.end()), values_.end());
  if (values_.empty()) throw ValidationError("codebook needs at least one label");
}

bool Codebook::contains(std::string_view value) const {
  return std::binary_search(values_.begin(), values_.end(), value);
}

std::size_t Codebook::index_of(std::string_view value) const {
  const auto it = std::lower_bound(values_.begin(), values_.end(), value);
  if (it == values_.end() || *it != value) {
    throw ValidationError("label '" + std::string(value) + "' is not in the " +
                          std::string(to_string(kind_)) + " codebook");
  }
  return static_cast<std::size_t>(it - values_.begin());
}

Codebook encode_labels(std::span<const AttributionLabel> labels) {
  if (labels.empty()) throw ValidationError("encode_labels: empty label list");
  const AttributeKind kind = labels.front().kind;
  std::vector<std::string> values;
  values.reserve(labels.size());
  for (const auto& l : labels) {
    if (l.kind != kind) throw ValidationError("encode_labels: mixed attribution kinds");
    values.push_back(l.value);
  }
  return Codebook(kind, std::move(values));
}

}  // namespace probekit

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "probekit/core/types.hpp"

namespace probekit {

// Bijection between label values and 0..K-1, in lexicographic byte order.
class Codebook {
 public:
  Codebook(AttributeKind kind, std::vector<std::string> values);

  AttributeKind kind() const { return kind_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<std::string>& values() const { return values_; }
  const std::string& value_at(std::size_t index) const { return values_.at(index); }

  bool contains(std::string_view value) const;
  // Throws ValidationError for values outside the codebook.
  std::size_t index_of(std::string_view value) const;

  bool operator==(const Codebook&) const = default;

 private:
  AttributeKind kind_;
  std::vector<std::string> values_;
};

// Duplicates collapse. Empty input or mixed kinds are validation errors.
Codebook encode_labels(std::span<const AttributionLabel> labels);

}  // namespace probekit

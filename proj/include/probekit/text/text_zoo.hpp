#pragma once

#include <string>
#include <vector>

#include "probekit/core/types.hpp"
#include "probekit/text/markov.hpp"

namespace probekit::text {

// Label value used for the architecture attribute of an order-k generator.
std::string order_label(int order);

struct TextZooMember {
  std::string id;  // "<corpus>#<segment>/order-<k>"
  TextModel model;
  std::string corpus_label;

  AttributionLabel label(AttributeKind kind) const;
  // "<corpus>#<segment>": generators fit on the same text share it.
  std::string group() const;
};

// Splits each corpus into `segments` contiguous, equal-length pieces (by code
// point) and fits one generator per (corpus, segment, order). Several
// generators per label let the detector be evaluated on generators it never
// saw during training.
std::vector<TextZooMember> build_text_zoo(const std::vector<Corpus>& corpora, const std::vector<int>& orders,
                                          std::size_t segments);

}  // namespace probekit::text

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "probekit/core/json_io.hpp"

namespace probekit::text {

// Ordered n-gram vocabulary; grams are UTF-8 encoded code-point n-grams.
class NgramVocab {
 public:
  NgramVocab(int n, std::vector<std::string> grams);

  int n() const { return n_; }
  const std::vector<std::string>& grams() const { return grams_; }
  std::size_t size() const { return grams_.size(); }
  // -1 when out of vocabulary.
  std::ptrdiff_t index_of(std::string_view gram) const;

  bool operator==(const NgramVocab& o) const { return n_ == o.n_ && grams_ == o.grams_; }

 private:
  int n_;
  std::vector<std::string> grams_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Top-`max_size` n-grams pooled over `texts`, by count descending then
// lexicographically.
NgramVocab build_vocab(std::span<const std::string> texts, int n, std::size_t max_size);

// Relative frequency of each vocabulary n-gram: count / total n-grams in
// `text`. Out-of-vocabulary grams count toward the total only. Texts with
// fewer than n characters give the zero vector.
std::vector<double> ngram_features(std::string_view text, const NgramVocab& vocab);

Json vocab_to_json(const NgramVocab& vocab);
NgramVocab vocab_from_json(const Json& j);

}  // namespace probekit::text

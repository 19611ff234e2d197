#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "probekit/core/json_io.hpp"
#include "probekit/core/rng.hpp"

namespace probekit::text {

inline constexpr std::size_t kMinCorpusChars = 10000;

struct Corpus {
  std::string label;
  std::string text;  // UTF-8
};

// Reads every `*.txt` under `dir`; file stem = label, sorted by label.
// Throws ValidationError for files shorter than kMinCorpusChars code points.
std::vector<Corpus> load_corpora(const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& file);

using Counts = std::map<char32_t, std::uint64_t>;

struct TextProvenance {
  std::string corpus_label;
  int order = 2;

  bool operator==(const TextProvenance&) const = default;
};

// Character-level order-k Markov chain over Unicode code points.
class TextModel {
 public:
  TextModel(int order, std::map<std::u32string, Counts> transitions, TextProvenance provenance);

  int order() const { return order_; }
  const std::map<std::u32string, Counts>& transitions() const { return transitions_; }
  const TextProvenance& provenance() const { return provenance_; }

  // Next-character counts for `context`. Unknown contexts back off by dropping
  // the leftmost character (pooling every stored context with that suffix);
  // the empty context is the pooled distribution over all next characters.
  const Counts& next_counts(std::u32string_view context) const;

  bool operator==(const TextModel& o) const {
    return order_ == o.order_ && transitions_ == o.transitions_ && provenance_ == o.provenance_;
  }

 private:
  int order_;
  std::map<std::u32string, Counts> transitions_;
  TextProvenance provenance_;
  // Pooled counts for every proper suffix (length 0..order-1) of a stored context.
  std::map<std::u32string, Counts, std::less<>> backoff_;
};

// Sliding-window count of (context, next char). Text must be longer than `order`.
TextModel fit_markov(const Corpus& corpus, int order);

// Exactly `length` freshly sampled code points (seed text excluded), each
// drawn proportionally to its count.
std::string generate(const TextModel& model, std::string_view seed_text, std::size_t length, Rng& rng);

Json text_model_to_json(const TextModel& model);
TextModel text_model_from_json(const Json& j);

}  // namespace probekit::text

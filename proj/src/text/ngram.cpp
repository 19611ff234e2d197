#include "probekit/text/ngram.hpp"

#include <algorithm>
#include <map>

#include "probekit/core/error.hpp"
#include "probekit/core/utf8.hpp"

namespace probekit::text {
namespace {

void check_n(int n) {
  if (n < 1 || n > 3) throw ValidationError("n-gram order must be 1, 2 or 3");
}

template <typename Fn>
void for_each_gram(std::string_view text, int n, Fn&& fn) {
  const std::u32string cps = utf8::decode(text);
  const auto k = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + k <= cps.size(); ++i) fn(utf8::encode(std::u32string_view(cps).substr(i, k)));
}

}  // namespace

NgramVocab::NgramVocab(int n, std::vector<std::string> grams) : n_(n), grams_(std::move(grams)) {
  check_n(n_);
  for (std::size_t i = 0; i < grams_.size(); ++i) {
    if (!index_.emplace(grams_[i], i).second) throw ValidationError("duplicate n-gram in vocabulary");
  }
}

std::ptrdiff_t NgramVocab::index_of(std::string_view gram) const {
  const auto it = index_.find(std::string(gram));
  return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

NgramVocab build_vocab(std::span<const std::string> texts, int n, std::size_t max_size) {
  check_n(n);
  std::map<std::string, std::size_t> counts;
  for (const auto& t : texts) for_each_gram(t, n, [&](std::string g) { ++counts[std::move(g)]; });
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_size) ranked.resize(max_size);
  std::vector<std::string> grams;
  grams.reserve(ranked.size());
  for (auto& r : ranked) grams.push_back(std::move(r.first));
  return NgramVocab(n, std::move(grams));
}

std::vector<double> ngram_features(std::string_view text, const NgramVocab& vocab) {
  std::vector<double> out(vocab.size(), 0.0);
  std::size_t total = 0;
  for_each_gram(text, vocab.n(), [&](const std::string& g) {
    ++total;
    if (const auto i = vocab.index_of(g); i >= 0) out[static_cast<std::size_t>(i)] += 1.0;
  });
  if (total == 0) return out;
  for (double& v : out) v /= static_cast<double>(total);
  return out;
}

Json vocab_to_json(const NgramVocab& vocab) {
  Json j = Json::object();
  j["n"] = vocab.n();
  j["grams"] = vocab.grams();
  return j;
}

NgramVocab vocab_from_json(const Json& j) {
  try {
    return NgramVocab(j.at("n").get<int>(), j.at("grams").get<std::vector<std::string>>());
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("bad n-gram vocabulary: ") + e.what());
  }
}

}  // namespace probekit::text

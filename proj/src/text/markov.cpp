#include "probekit/text/markov.hpp"

#include <algorithm>

#include "probekit/core/error.hpp"
#include "probekit/core/utf8.hpp"

namespace probekit::text {

Corpus load_corpus(const std::filesystem::path& file) {
  Corpus c{file.stem().string(), read_text_file(file)};
  const auto n = utf8::decode(c.text).size();
  if (n < kMinCorpusChars) {
    throw ValidationError("corpus '" + file.string() + "' has " + std::to_string(n) + " characters, need " +
                          std::to_string(kMinCorpusChars));
  }
  return c;
}

std::vector<Corpus> load_corpora(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ValidationError("corpus directory '" + dir.string() + "' does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Corpus> out;
  for (const auto& f : files) out.push_back(load_corpus(f));
  return out;
}

TextModel::TextModel(int order, std::map<std::u32string, Counts> transitions, TextProvenance provenance)
    : order_(order), transitions_(std::move(transitions)), provenance_(std::move(provenance)) {
  if (order_ < 1 || order_ > 3) throw ValidationError("Markov order must be 1, 2 or 3");
  if (transitions_.empty()) throw ValidationError("Markov model has no transitions");
  for (const auto& [ctx, counts] : transitions_) {
    if (ctx.size() != static_cast<std::size_t>(order_)) {
      throw ValidationError("Markov context length differs from the model order");
    }
    std::uint64_t total = 0;
    for (const auto& kv : counts) total += kv.second;
    if (total == 0) throw ValidationError("Markov context with zero total count");
    for (int len = 0; len < order_; ++len) {
      Counts& pooled = backoff_[ctx.substr(ctx.size() - static_cast<std::size_t>(len))];
      for (const auto& [ch, n] : counts) pooled[ch] += n;
    }
  }
}

const Counts& TextModel::next_counts(std::u32string_view context) const {
  if (context.size() > static_cast<std::size_t>(order_)) context.remove_prefix(context.size() - order_);
  if (context.size() == static_cast<std::size_t>(order_)) {
    if (auto it = transitions_.find(std::u32string(context)); it != transitions_.end()) return it->second;
    context.remove_prefix(1);
  }
  while (true) {
    if (auto it = backoff_.find(context); it != backoff_.end()) return it->second;
    context.remove_prefix(1);  // the empty suffix is always present
  }
}

TextModel fit_markov(const Corpus& corpus, int order) {
  if (order < 1 || order > 3) throw ValidationError("Markov order must be 1, 2 or 3");
  const std::u32string cps = utf8::decode(corpus.text);
  const auto k = static_cast<std::size_t>(order);
  if (cps.size() < k + 1) {
    throw ValidationError("corpus '" + corpus.label + "' is shorter than order + 1 characters");
  }
  std::map<std::u32string, Counts> transitions;
  for (std::size_t i = 0; i + k < cps.size(); ++i) {
    ++transitions[cps.substr(i, k)][cps[i + k]];
  }
  return TextModel(order, std::move(transitions), TextProvenance{corpus.label, order});
}

std::string generate(const TextModel& model, std::string_view seed_text, std::size_t length, Rng& rng) {
  if (length == 0) throw ValidationError("generate: length must be at least 1");
  const auto k = static_cast<std::size_t>(model.order());
  std::u32string context = utf8::decode(seed_text);
  if (context.size() > k) context.erase(0, context.size() - k);

  std::u32string out;
  out.reserve(length);
  for (std::size_t i = 0; i < length; ++i) {
    const Counts& counts = model.next_counts(context);
    std::uint64_t total = 0;
    for (const auto& kv : counts) total += kv.second;
    std::uint64_t r = rng.below(total);
    char32_t next = counts.begin()->first;
    for (const auto& [ch, n] : counts) {
      if (r < n) {
        next = ch;
        break;
      }
      r -= n;
    }
    out.push_back(next);
    context.push_back(next);
    if (context.size() > k) context.erase(0, context.size() - k);
  }
  return utf8::encode(out);
}

Json text_model_to_json(const TextModel& model) {
  Json j = Json::object();
  j["format"] = "probekit.markov";
  j["version"] = 1;
  j["order"] = model.order();
  j["corpus_label"] = model.provenance().corpus_label;
  Json transitions = Json::object();
  for (const auto& [ctx, counts] : model.transitions()) {
    Json c = Json::object();
    for (const auto& [ch, n] : counts) c[utf8::encode(ch)] = n;
    transitions[utf8::encode(ctx)] = std::move(c);
  }
  j["transitions"] = std::move(transitions);
  return j;
}

TextModel text_model_from_json(const Json& j) {
  try {
    if (j.at("format") != "probekit.markov" || j.at("version") != 1) {
      throw ValidationError("unsupported Markov model document");
    }
    std::map<std::u32string, Counts> transitions;
    for (const auto& [ctx, counts] : j.at("transitions").items()) {
      Counts& dst = transitions[utf8::decode(ctx)];
      for (const auto& [ch, n] : counts.items()) {
        const auto cp = utf8::decode(ch);
        if (cp.size() != 1) throw ValidationError("Markov successor key must be one character");
        dst[cp[0]] = n.get<std::uint64_t>();
      }
    }
    const int order = j.at("order").get<int>();
    return TextModel(order, std::move(transitions), TextProvenance{j.at("corpus_label").get<std::string>(), order});
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("bad Markov model document: ") + e.what());
  }
}

}  // namespace probekit::text

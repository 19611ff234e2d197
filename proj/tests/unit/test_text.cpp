#include <doctest.h>

#include <numeric>
#include <set>

#include "helpers.hpp"
#include "probekit/core/error.hpp"
#include "probekit/core/utf8.hpp"
#include "probekit/text/markov.hpp"
#include "probekit/text/ngram.hpp"
#include "probekit/text/text_zoo.hpp"

using namespace probekit;
using namespace probekit::text;

namespace {

Corpus corpus(std::string label, std::string body) { return {std::move(label), std::move(body)}; }

std::string repeat(const std::string& s, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += s;
  return out;
}

}  // namespace

TEST_CASE("fit_markov counts sliding windows") {
  const auto m = fit_markov(corpus("c", "abab"), 1);
  const std::map<std::u32string, Counts> expected{{U"a", {{U'b', 2}}}, {U"b", {{U'a', 1}}}};
  CHECK(m.transitions() == expected);

  const auto a = fit_markov(corpus("c", "aaaa"), 2);
  CHECK(a.transitions() == std::map<std::u32string, Counts>{{U"aa", {{U'a', 2}}}});

  CHECK_THROWS_AS(fit_markov(corpus("c", "ab"), 2), ValidationError);
  CHECK_THROWS_AS(fit_markov(corpus("c", "abcdef"), 4), ValidationError);
}

TEST_CASE("generate follows a deterministic chain") {
  const auto m = fit_markov(corpus("c", "abab"), 1);
  Rng rng(1);
  CHECK(generate(m, "a", 4, rng) == "baba");
  CHECK_THROWS_AS(generate(m, "a", 0, rng), ValidationError);
}

TEST_CASE("generate handles multibyte text and unknown contexts") {
  const auto m = fit_markov(corpus("c", "αβγαβγαβγ"), 2);
  Rng rng(2);
  const auto out = generate(m, "zz", 12, rng);
  CHECK(utf8::decode(out).size() == 12);
  for (char32_t c : utf8::decode(out)) CHECK((c == U'α' || c == U'β' || c == U'γ'));
}

TEST_CASE("generation is reproducible for a given seed") {
  const auto m = fit_markov(corpus("c", repeat("the cat sat on the mat. ", 20) + "a dog ran."), 2);
  Rng a(5), b(5), c(6);
  const auto x = generate(m, "th", 200, a);
  CHECK(x == generate(m, "th", 200, b));
  CHECK(x != generate(m, "th", 200, c));
}

TEST_CASE("text models round-trip through JSON") {
  const auto m = fit_markov(corpus("verse", "héllo wörld, héllo wörld"), 3);
  const auto back = text_model_from_json(text_model_to_json(m));
  CHECK(back == m);
  CHECK(back.provenance().corpus_label == "verse");
}

TEST_CASE("ngram features on hand-checked texts") {
  const NgramVocab uni(1, {"a", "b"});
  CHECK(ngram_features("aaa", uni) == std::vector<double>{1.0, 0.0});

  const NgramVocab ab(2, {"ab"});
  CHECK(ngram_features("ab", ab) == std::vector<double>{1.0});

  const NgramVocab bi(2, {"ab", "bc", "ca"});
  CHECK(ngram_features("abcab", bi) == std::vector<double>{0.5, 0.25, 0.25});

  CHECK(ngram_features("a", bi) == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(ngram_features("xyz", bi) == std::vector<double>{0.0, 0.0, 0.0});
  CHECK_THROWS_AS(NgramVocab(2, {"ab", "ab"}), ValidationError);
}

TEST_CASE("build_vocab orders by count then lexicographically") {
  const std::vector<std::string> texts{"abab", "ba"};
  const auto v = build_vocab(texts, 2, 2);
  // ab:2, ba:2, so ties break lexicographically.
  CHECK(v.grams() == std::vector<std::string>{"ab", "ba"});
  CHECK(build_vocab(texts, 1, 10).grams() == std::vector<std::string>{"a", "b"});
  CHECK(vocab_from_json(vocab_to_json(v)) == v);
}

TEST_CASE("property: ngram features are bounded sub-distributions") {
  Rng rng(17);
  const std::string alphabet = "abcdé ";
  const auto chars = utf8::decode(alphabet);
  for (int trial = 0; trial < 100; ++trial) {
    std::u32string t;
    const std::size_t len = rng.below(40);
    for (std::size_t i = 0; i < len; ++i) t.push_back(chars[rng.below(chars.size())]);
    const auto text = utf8::encode(t);
    const std::vector<std::string> texts{text};
    const int n = 1 + static_cast<int>(rng.below(3));
    const auto vocab = build_vocab(texts, n, 1 + rng.below(20));
    const auto f = ngram_features(text, vocab);
    REQUIRE(f.size() == vocab.size());
    double sum = 0.0;
    for (double x : f) {
      REQUIRE(x >= 0.0);
      REQUIRE(x <= 1.0);
      sum += x;
    }
    REQUIRE(sum <= 1.0 + 1e-12);
    // Grams absent from the text get zero weight.
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      if (text.find(vocab.grams()[i]) == std::string::npos) REQUIRE(f[i] == 0.0);
    }
  }
}

TEST_CASE("texts over disjoint alphabets have orthogonal features") {
  const std::vector<std::string> texts{"aabbab", "xyyxxy"};
  const auto vocab = build_vocab(texts, 2, 50);
  const auto f = ngram_features(texts[0], vocab);
  const auto g = ngram_features(texts[1], vocab);
  CHECK(std::inner_product(f.begin(), f.end(), g.begin(), 0.0) == 0.0);
}

TEST_CASE("corpus loader enforces a minimum length") {
  const auto dir = testing::scratch("text-corpora");
  write_text_file(dir / "short.txt", "too short");
  CHECK_THROWS_AS(load_corpus(dir / "short.txt"), ValidationError);
  CHECK_THROWS_AS(load_corpora(dir), ValidationError);
  CHECK_THROWS_AS(load_corpora(dir / "missing"), ValidationError);

  write_text_file(dir / "short.txt", repeat("ab ", kMinCorpusChars));
  write_text_file(dir / "alpha.txt", repeat("xy ", kMinCorpusChars));
  const auto loaded = load_corpora(dir);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].label == "alpha");
  CHECK(loaded[1].label == "short");
}

TEST_CASE("text zoo has one generator per corpus, segment and order") {
  const std::vector<Corpus> corpora{corpus("p", repeat("abcd", 50)), corpus("q", repeat("wxyz", 50))};
  const auto members = build_text_zoo(corpora, {2, 3}, 3);
  CHECK(members.size() == 12);
  std::set<std::string> ids, groups;
  for (const auto& m : members) {
    ids.insert(m.id);
    groups.insert(m.group());
    CHECK(m.label(AttributeKind::dataset).value == m.corpus_label);
    CHECK(m.label(AttributeKind::architecture).value == order_label(m.model.order()));
  }
  CHECK(ids.size() == 12);
  CHECK(groups.size() == 6);
  CHECK(members.front().group() == "p#0");
  CHECK_THROWS_AS(build_text_zoo(corpora, {2}, 0), ValidationError);
  CHECK_THROWS_AS(build_text_zoo({}, {2}, 1), ValidationError);
}

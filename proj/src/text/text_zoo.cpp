#include "probekit/text/text_zoo.hpp"

#include "probekit/core/error.hpp"
#include "probekit/core/utf8.hpp"

namespace probekit::text {

std::string order_label(int order) { return "markov-order-" + std::to_string(order); }

AttributionLabel TextZooMember::label(AttributeKind kind) const {
  return kind == AttributeKind::architecture ? AttributionLabel{kind, order_label(model.order())}
                                             : AttributionLabel{kind, corpus_label};
}

std::string TextZooMember::group() const { return id.substr(0, id.rfind('/')); }

std::vector<TextZooMember> build_text_zoo(const std::vector<Corpus>& corpora, const std::vector<int>& orders,
                                          std::size_t segments) {
  if (corpora.empty() || orders.empty()) throw ValidationError("text zoo needs corpora and orders");
  if (segments == 0) throw ValidationError("text zoo needs at least one segment per corpus");
  std::vector<TextZooMember> out;
  for (const auto& corpus : corpora) {
    const std::u32string cps = utf8::decode(corpus.text);
    const std::size_t seg_len = cps.size() / segments;
    for (std::size_t s = 0; s < segments; ++s) {
      const Corpus piece{corpus.label, utf8::encode(std::u32string_view(cps).substr(s * seg_len, seg_len))};
      for (int order : orders) {
        out.push_back(TextZooMember{corpus.label + "#" + std::to_string(s) + "/order-" + std::to_string(order),
                                    fit_markov(piece, order), corpus.label});
      }
    }
  }
  return out;
}

}  // namespace probekit::text

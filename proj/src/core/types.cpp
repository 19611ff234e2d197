#include "probekit/core/types.hpp"

#include <cmath>
#include <set>

#include "probekit/core/error.hpp"
#include "probekit/core/utf8.hpp"

namespace probekit {

std::string_view to_string(Modality m) { return m == Modality::vector ? "vector" : "text"; }

std::string_view to_string(AttributeKind k) {
  return k == AttributeKind::architecture ? "architecture" : "dataset";
}

std::string_view to_string(AdapterKind a) { return a == AdapterKind::local ? "local" : "remote"; }

Modality parse_modality(std::string_view s) {
  if (s == "vector") return Modality::vector;
  if (s == "text") return Modality::text;
  throw ValidationError("unknown modality '" + std::string(s) + "'");
}

AttributeKind parse_attribute_kind(std::string_view s) {
  if (s == "architecture" || s == "arch") return AttributeKind::architecture;
  if (s == "dataset") return AttributeKind::dataset;
  throw ValidationError("unknown attribution kind '" + std::string(s) + "'");
}

AdapterKind parse_adapter_kind(std::string_view s) {
  if (s == "local") return AdapterKind::local;
  if (s == "remote") return AdapterKind::remote;
  throw ValidationError("unknown adapter '" + std::string(s) + "'");
}

Probe Probe::vector(std::string id, std::vector<double> values) {
  return Probe{std::move(id), std::move(values)};
}

Probe Probe::text(std::string id, std::string text) { return Probe{std::move(id), std::move(text)}; }

ProbeSet::ProbeSet(std::string name, Modality modality, std::size_t dim, std::vector<Probe> probes)
    : name_(std::move(name)), modality_(modality), dim_(dim), probes_(std::move(probes)) {
  if (modality_ == Modality::vector && dim_ == 0) {
    throw ValidationError("probe set '" + name_ + "': vector modality needs dim > 0");
  }
  if (modality_ == Modality::text) dim_ = 0;

  std::set<std::string_view> seen;
  for (const auto& p : probes_) {
    if (p.id.empty()) throw ValidationError("probe set '" + name_ + "': empty probe id");
    if (!seen.insert(p.id).second) {
      throw ValidationError("probe set '" + name_ + "': duplicate probe id '" + p.id + "'");
    }
    if (modality_ == Modality::vector) {
      if (p.is_text()) throw ValidationError("probe '" + p.id + "': text payload in vector set");
      if (p.values().size() != dim_) {
        throw ValidationError("probe '" + p.id + "': dimension " + std::to_string(p.values().size()) +
                              " != " + std::to_string(dim_));
      }
      for (double v : p.values()) {
        if (!std::isfinite(v)) throw ValidationError("probe '" + p.id + "': non-finite entry");
      }
    } else {
      if (!p.is_text()) throw ValidationError("probe '" + p.id + "': vector payload in text set");
      if (p.text().empty()) throw ValidationError("probe '" + p.id + "': empty text");
      if (p.text().size() > kMaxTextProbeBytes) {
        throw ValidationError("probe '" + p.id + "': text exceeds 4096 bytes");
      }
      if (!utf8::is_valid(p.text())) throw ValidationError("probe '" + p.id + "': invalid UTF-8");
    }
  }
}

const Probe* ProbeSet::find(std::string_view id) const {
  for (const auto& p : probes_) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

ProbabilityVector ProbabilityVector::validated(std::vector<double> values, double tolerance) {
  if (values.empty()) throw ValidationError("probability vector is empty");
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v)) {
      throw ValidationError("probability vector entry " + std::to_string(i) + " is not finite");
    }
    if (v < 0.0 || v > 1.0) {
      throw ValidationError("probability vector entry " + std::to_string(i) + " outside [0,1]");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > tolerance) {
    throw ValidationError("probability vector sums to " + std::to_string(sum));
  }
  return ProbabilityVector(std::move(values));
}

GeneratedText GeneratedText::validated(std::string text) {
  if (!utf8::is_valid(text)) throw ValidationError("generated text is not valid UTF-8");
  return GeneratedText{std::move(text)};
}

}  // namespace probekit

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace probekit {

enum class Modality { vector, text };
enum class AttributeKind { architecture, dataset };
enum class AdapterKind { local, remote };

std::string_view to_string(Modality m);
std::string_view to_string(AttributeKind k);
std::string_view to_string(AdapterKind a);
Modality parse_modality(std::string_view s);
AttributeKind parse_attribute_kind(std::string_view s);
AdapterKind parse_adapter_kind(std::string_view s);

inline constexpr std::size_t kMaxTextProbeBytes = 4096;
// Remote outputs outside this tolerance are rejected, never renormalized.
inline constexpr double kProbabilitySumTolerance = 1e-6;

struct Probe {
  std::string id;
  std::variant<std::vector<double>, std::string> payload;

  static Probe vector(std::string id, std::vector<double> values);
  static Probe text(std::string id, std::string text);

  bool is_text() const { return std::holds_alternative<std::string>(payload); }
  const std::vector<double>& values() const { return std::get<std::vector<double>>(payload); }
  const std::string& text() const { return std::get<std::string>(payload); }

  bool operator==(const Probe&) const = default;
};

class ProbeSet {
 public:
  // Throws ValidationError if ids repeat, payloads mismatch the modality, or
  // vector probes are not finite / not `dim` wide.
  ProbeSet(std::string name, Modality modality, std::size_t dim, std::vector<Probe> probes);

  const std::string& name() const { return name_; }
  Modality modality() const { return modality_; }
  // Zero for text probe sets.
  std::size_t dim() const { return dim_; }
  const std::vector<Probe>& probes() const { return probes_; }
  std::size_t size() const { return probes_.size(); }
  bool empty() const { return probes_.empty(); }

  const Probe* find(std::string_view id) const;

  bool operator==(const ProbeSet&) const = default;

 private:
  std::string name_;
  Modality modality_;
  std::size_t dim_;
  std::vector<Probe> probes_;
};

struct AttributionLabel {
  AttributeKind kind = AttributeKind::architecture;
  std::string value;

  bool operator==(const AttributionLabel&) const = default;
};

class ProbabilityVector {
 public:
  // Entries must be finite, in [0, 1], and sum to 1 within `tolerance`.
  static ProbabilityVector validated(std::vector<double> values,
                                     double tolerance = kProbabilitySumTolerance);

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  bool operator==(const ProbabilityVector&) const = default;

 private:
  explicit ProbabilityVector(std::vector<double> values) : values_(std::move(values)) {}
  std::vector<double> values_;
};

struct GeneratedText {
  std::string text;

  // Rejects malformed UTF-8.
  static GeneratedText validated(std::string text);

  bool operator==(const GeneratedText&) const = default;
};

using ResponseOutput = std::variant<ProbabilityVector, GeneratedText>;

struct ResponseRecord {
  std::string probe_id;
  std::string target_id;
  std::optional<AttributionLabel> true_label;
  ResponseOutput output{GeneratedText{}};
  AdapterKind adapter = AdapterKind::local;
  std::int64_t unix_time_ms = 0;

  bool operator==(const ResponseRecord&) const = default;
};

}  // namespace probekit

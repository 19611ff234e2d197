#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "probekit/core/codebook.hpp"
#include "probekit/core/types.hpp"

namespace probekit {

// Artifacts keep insertion order so field order on disk is fixed.
using Json = nlohmann::ordered_json;

// One ResponseRecord per line, fields in the order
//   probe_id, target_id, true_label, output, adapter, unix_time_ms
// Doubles are written in shortest round-trip form, so parsing a line back
// reproduces every probability bit for bit.
std::string record_to_jsonl(const ResponseRecord& record);
ResponseRecord parse_jsonl(std::string_view line);

Json label_to_json(const AttributionLabel& label);
AttributionLabel label_from_json(const Json& j);

Json probe_set_to_json(const ProbeSet& probes);
ProbeSet probe_set_from_json(const Json& j);

Json codebook_to_json(const Codebook& codebook);
Codebook codebook_from_json(const Json& j);

std::string read_text_file(const std::filesystem::path& path);
// Writes to a sibling temporary and renames, so readers never see a torn file.
void write_text_file(const std::filesystem::path& path, std::string_view contents);
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

ProbeSet load_probe_set(const std::filesystem::path& path);
void save_probe_set(const std::filesystem::path& path, const ProbeSet& probes);

// Append-only record sink. Throws on write failure.
class JsonlWriter {
 public:
  explicit JsonlWriter(std::ostream& out) : out_(&out) {}

  void write(const ResponseRecord& record);
  std::size_t written() const { return written_; }

 private:
  std::ostream* out_;
  std::size_t written_ = 0;
};

std::vector<ResponseRecord> read_jsonl(std::istream& in);
std::vector<ResponseRecord> read_jsonl_file(const std::filesystem::path& path);

}  // namespace probekit

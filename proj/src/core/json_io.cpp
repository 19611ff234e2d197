#include "probekit/core/json_io.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "probekit/core/error.hpp"
#include "probekit/core/utf8.hpp"

namespace probekit {
namespace {

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

std::string require_string(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_string()) throw ValidationError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<double> to_doubles(const Json& arr, const char* what) {
  if (!arr.is_array()) throw ValidationError(std::string(what) + " must be an array");
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number()) throw ValidationError(std::string(what) + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

Json label_to_json(const AttributionLabel& label) {
  Json j = Json::object();
  j["kind"] = to_string(label.kind);
  j["value"] = label.value;
  return j;
}

AttributionLabel label_from_json(const Json& j) {
  return AttributionLabel{parse_attribute_kind(require_string(j, "kind")), require_string(j, "value")};
}

std::string record_to_jsonl(const ResponseRecord& r) {
  Json j = Json::object();
  j["probe_id"] = r.probe_id;
  j["target_id"] = r.target_id;
  j["true_label"] = r.true_label ? label_to_json(*r.true_label) : Json(nullptr);
  Json out = Json::object();
  if (const auto* probs = std::get_if<ProbabilityVector>(&r.output)) {
    for (double v : probs->values()) {
      if (!std::isfinite(v)) throw ValidationError("record " + r.probe_id + ": non-finite probability");
    }
    out["type"] = "probs";
    out["data"] = probs->values();
  } else {
    const auto& text = std::get<GeneratedText>(r.output).text;
    if (!utf8::is_valid(text)) throw ValidationError("record " + r.probe_id + ": invalid UTF-8 text");
    out["type"] = "text";
    out["data"] = text;
  }
  j["output"] = std::move(out);
  j["adapter"] = to_string(r.adapter);
  j["unix_time_ms"] = r.unix_time_ms;
  return j.dump();
}

ResponseRecord parse_jsonl(std::string_view line) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("malformed JSONL record: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("JSONL record must be an object");

  ResponseRecord r;
  r.probe_id = require_string(j, "probe_id");
  r.target_id = require_string(j, "target_id");
  if (const Json& l = require(j, "true_label"); !l.is_null()) r.true_label = label_from_json(l);

  const Json& out = require(j, "output");
  const std::string type = require_string(out, "type");
  if (type == "probs") {
    r.output = ProbabilityVector::validated(to_doubles(require(out, "data"), "output.data"));
  } else if (type == "text") {
    r.output = GeneratedText::validated(require_string(out, "data"));
  } else {
    throw ValidationError("unknown output type '" + type + "'");
  }
  r.adapter = parse_adapter_kind(require_string(j, "adapter"));
  const Json& t = require(j, "unix_time_ms");
  if (!t.is_number_integer()) throw ValidationError("unix_time_ms must be an integer");
  r.unix_time_ms = t.get<std::int64_t>();
  return r;
}

Json probe_set_to_json(const ProbeSet& probes) {
  Json j = Json::object();
  j["name"] = probes.name();
  j["modality"] = to_string(probes.modality());
  j["dim"] = probes.dim();
  Json arr = Json::array();
  for (const auto& p : probes.probes()) {
    Json e = Json::object();
    e["id"] = p.id;
    if (p.is_text()) {
      e["text"] = p.text();
    } else {
      e["vector"] = p.values();
    }
    arr.push_back(std::move(e));
  }
  j["probes"] = std::move(arr);
  return j;
}

ProbeSet probe_set_from_json(const Json& j) {
  const Modality modality = parse_modality(require_string(j, "modality"));
  std::size_t dim = 0;
  if (j.contains("dim")) dim = j.at("dim").get<std::size_t>();
  std::vector<Probe> probes;
  const Json& arr = require(j, "probes");
  if (!arr.is_array()) throw ValidationError("probes must be an array");
  for (const auto& e : arr) {
    std::string id = require_string(e, "id");
    if (e.contains("text")) {
      probes.push_back(Probe::text(std::move(id), require_string(e, "text")));
    } else {
      probes.push_back(Probe::vector(std::move(id), to_doubles(require(e, "vector"), "probe vector")));
    }
  }
  return ProbeSet(j.value("name", std::string("probes")), modality, dim, std::move(probes));
}

Json codebook_to_json(const Codebook& codebook) {
  Json j = Json::object();
  j["kind"] = to_string(codebook.kind());
  j["values"] = codebook.values();
  return j;
}

Codebook codebook_from_json(const Json& j) {
  return Codebook(parse_attribute_kind(require_string(j, "kind")),
                  require(j, "values").get<std::vector<std::string>>());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::internal, "cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorKind::internal, "write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

ProbeSet load_probe_set(const std::filesystem::path& path) {
  return probe_set_from_json(read_json_file(path));
}

void save_probe_set(const std::filesystem::path& path, const ProbeSet& probes) {
  write_json_file(path, probe_set_to_json(probes));
}

void JsonlWriter::write(const ResponseRecord& record) {
  *out_ << record_to_jsonl(record) << '\n';
  if (!*out_) throw Error(ErrorKind::internal, "record sink write failed");
  ++written_;
}

std::vector<ResponseRecord> read_jsonl(std::istream& in) {
  std::vector<ResponseRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(parse_jsonl(line));
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ResponseRecord> read_jsonl_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  return read_jsonl(in);
}

}  // namespace probekit

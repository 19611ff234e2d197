#include "probekit/probing/target.hpp"

#include <regex>
#include <thread>

#include <httplib.h>

#include "probekit/core/error.hpp"

namespace probekit::probing {

Url parse_url(const std::string& url) {
  static const std::regex re(R"(^http://([A-Za-z0-9.\-]+|\[[0-9A-Fa-f:]+\])(?::([0-9]{1,5}))?(/[^\s]*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) {
    throw ValidationError("'" + url + "' is not a valid http:// endpoint URL");
  }
  Url out;
  out.host = m[1].str();
  if (m[2].matched) {
    out.port = std::stoi(m[2].str());
    if (out.port < 1 || out.port > 65535) throw ValidationError("port out of range in '" + url + "'");
  }
  if (m[3].matched) out.path = m[3].str();
  return out;
}

void RemoteEndpoint::validate() const {
  parse_url(url);
  if (timeout_ms < 1) throw ValidationError("endpoint timeout_ms must be >= 1");
  if (max_retries < 0) throw ValidationError("endpoint max_retries must be >= 0");
  if (backoff_base_ms < 0 || min_gap_ms < 0) throw ValidationError("endpoint delays must be >= 0");
  if (generation_length == 0) throw ValidationError("endpoint generation_length must be >= 1");
}

RemoteSession::RemoteSession(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  endpoint_.validate();
  url_ = parse_url(endpoint_.url);
}

std::string RemoteSession::post(const std::string& body) {
  std::lock_guard lock(mu_);
  httplib::Client client(url_.host, url_.port);
  const auto timeout = std::chrono::milliseconds(endpoint_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  std::string last_failure;
  for (int attempt = 0; attempt <= endpoint_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(endpoint_.backoff_base_ms) * (1LL << (attempt - 1)));
    }
    if (last_request_ && endpoint_.min_gap_ms > 0) {
      std::this_thread::sleep_until(*last_request_ + std::chrono::milliseconds(endpoint_.min_gap_ms));
    }
    last_request_ = std::chrono::steady_clock::now();
    ++attempts_;
    auto res = client.Post(url_.path, body, "application/json");
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_failure = "HTTP status " + std::to_string(res->status);
      continue;
    }
    return res->body;
  }
  throw NetworkError(endpoint_.url + ": giving up after " + std::to_string(endpoint_.max_retries + 1) +
                     " attempts (" + last_failure + ")");
}

Target Target::local(std::string id, zoo::SurrogateModel model, std::map<AttributeKind, std::string> labels) {
  return Target{std::move(id), LocalVectorAdapter{std::make_shared<const zoo::SurrogateModel>(std::move(model))},
                Modality::vector, std::move(labels)};
}

Target Target::local_text(std::string id, text::TextModel model, std::size_t generation_length,
                          std::map<AttributeKind, std::string> labels) {
  return Target{std::move(id),
                LocalTextAdapter{std::make_shared<const text::TextModel>(std::move(model)), generation_length},
                Modality::text, std::move(labels)};
}

Target Target::remote(std::string id, RemoteEndpoint endpoint, Modality modality,
                      std::map<AttributeKind, std::string> labels) {
  return Target{std::move(id), RemoteAdapter{std::make_shared<RemoteSession>(std::move(endpoint))}, modality,
                std::move(labels)};
}

AdapterKind Target::adapter_kind() const {
  return std::holds_alternative<RemoteAdapter>(adapter) ? AdapterKind::remote : AdapterKind::local;
}

std::int64_t system_clock_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string make_request_body(const Probe& probe, Modality modality, std::size_t generation_length) {
  Json j = Json::object();
  j["modality"] = to_string(modality);
  if (modality == Modality::text) {
    j["payload"] = probe.text();
    j["length"] = generation_length;
  } else {
    j["payload"] = probe.values();
  }
  return j.dump();
}

ResponseOutput parse_response_body(const std::string& body, Modality modality,
                                   std::optional<std::size_t> output_dim) {
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::parse_error& e) {
    throw ProtocolError(std::string("malformed JSON response: ") + e.what(), body);
  }
  try {
    if (modality == Modality::vector) {
      if (!j.is_object() || !j.contains("probs") || !j["probs"].is_array()) {
        throw ProtocolError("response lacks a 'probs' array", body);
      }
      std::vector<double> probs;
      for (const auto& v : j["probs"]) {
        if (!v.is_number()) throw ProtocolError("'probs' holds a non-number", body);
        probs.push_back(v.get<double>());
      }
      if (output_dim && probs.size() != *output_dim) {
        throw ProtocolError("response has " + std::to_string(probs.size()) + " probabilities, expected " +
                                std::to_string(*output_dim),
                            body);
      }
      return ProbabilityVector::validated(std::move(probs));
    }
    if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
      throw ProtocolError("response lacks a 'text' string", body);
    }
    return GeneratedText::validated(j["text"].get<std::string>());
  } catch (const ValidationError& e) {
    throw ProtocolError(std::string("invalid remote output: ") + e.what(), body);
  }
}

ResponseRecord query(const Target& target, const Probe& probe, Rng& rng, std::optional<AttributeKind> label_kind,
                     const Clock& clock) {
  if (probe.is_text() != (target.modality == Modality::text)) {
    throw ValidationError("probe '" + probe.id + "' does not match the modality of target '" + target.id + "'");
  }
  ResponseRecord r;
  r.probe_id = probe.id;
  r.target_id = target.id;
  if (label_kind) {
    if (auto it = target.labels.find(*label_kind); it != target.labels.end()) {
      r.true_label = AttributionLabel{*label_kind, it->second};
    }
  }
  r.adapter = target.adapter_kind();

  if (const auto* local = std::get_if<LocalVectorAdapter>(&target.adapter)) {
    r.output = ProbabilityVector::validated(zoo::predict_proba(*local->model, probe.values()).values());
  } else if (const auto* local_text = std::get_if<LocalTextAdapter>(&target.adapter)) {
    r.output = GeneratedText::validated(text::generate(*local_text->model, probe.text(),
                                                       local_text->generation_length, rng));
  } else {
    auto& session = *std::get<RemoteAdapter>(target.adapter).session;
    const auto& ep = session.endpoint();
    r.output = parse_response_body(session.post(make_request_body(probe, target.modality, ep.generation_length)),
                                   target.modality, ep.output_dim);
  }
  r.unix_time_ms = clock();
  return r;
}

}  // namespace probekit::probing

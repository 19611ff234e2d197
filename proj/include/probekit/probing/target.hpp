#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>

#include "probekit/core/json_io.hpp"
#include "probekit/core/rng.hpp"
#include "probekit/core/types.hpp"
#include "probekit/text/markov.hpp"
#include "probekit/zoo/model.hpp"

namespace probekit::probing {

inline constexpr std::size_t kDefaultGenerationLength = 256;

struct Url {
  std::string host;
  int port = 80;
  std::string path = "/";
};

// Accepts http://host[:port][/path]. Throws ValidationError otherwise.
Url parse_url(const std::string& url);

struct RemoteEndpoint {
  std::string url;
  int timeout_ms = 2000;
  int max_retries = 3;
  // Retry k (1-based) waits backoff_base_ms * 2^(k-1).
  int backoff_base_ms = 100;
  // Minimum spacing between two requests to this endpoint.
  int min_gap_ms = 0;
  std::size_t generation_length = kDefaultGenerationLength;
  // When set, probability outputs of any other width are protocol errors.
  std::optional<std::size_t> output_dim;

  void validate() const;
};

// Serializes requests to one endpoint and enforces the minimum gap.
class RemoteSession {
 public:
  explicit RemoteSession(RemoteEndpoint endpoint);

  const RemoteEndpoint& endpoint() const { return endpoint_; }

  // POSTs `body`, retrying timeouts, connection failures and non-200
  // statuses with exponential backoff. Returns the 200 response body.
  std::string post(const std::string& body);

  std::size_t attempts() const { return attempts_; }

 private:
  RemoteEndpoint endpoint_;
  Url url_;
  std::mutex mu_;
  std::optional<std::chrono::steady_clock::time_point> last_request_;
  std::size_t attempts_ = 0;
};

struct LocalVectorAdapter {
  std::shared_ptr<const zoo::SurrogateModel> model;
};

struct LocalTextAdapter {
  std::shared_ptr<const text::TextModel> model;
  std::size_t generation_length = kDefaultGenerationLength;
};

struct RemoteAdapter {
  std::shared_ptr<RemoteSession> session;
};

using Adapter = std::variant<LocalVectorAdapter, LocalTextAdapter, RemoteAdapter>;

struct Target {
  std::string id;
  Adapter adapter;
  Modality modality = Modality::vector;
  // Ground truth per attribution kind; empty for field targets.
  std::map<AttributeKind, std::string> labels;

  static Target local(std::string id, zoo::SurrogateModel model, std::map<AttributeKind, std::string> labels = {});
  static Target local_text(std::string id, text::TextModel model, std::size_t generation_length,
                           std::map<AttributeKind, std::string> labels = {});
  static Target remote(std::string id, RemoteEndpoint endpoint, Modality modality,
                       std::map<AttributeKind, std::string> labels = {});

  AdapterKind adapter_kind() const;
};

using Clock = std::function<std::int64_t()>;
std::int64_t system_clock_ms();

// Request body for the remote wire protocol.
std::string make_request_body(const Probe& probe, Modality modality, std::size_t generation_length);

// Validates a remote response body; ProtocolError (carrying the body) on
// malformed JSON, wrong shape, bad probabilities, or invalid UTF-8.
ResponseOutput parse_response_body(const std::string& body, Modality modality,
                                   std::optional<std::size_t> output_dim);

// One probe against one target. `label_kind` selects which ground-truth
// label (if any) is attached to the record.
ResponseRecord query(const Target& target, const Probe& probe, Rng& rng,
                     std::optional<AttributeKind> label_kind = std::nullopt,
                     const Clock& clock = system_clock_ms);

}  // namespace probekit::probing

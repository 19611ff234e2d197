#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <thread>

#include "probekit/text/markov.hpp"
#include "probekit/zoo/model.hpp"

namespace probekit::probing {

struct HttpReply {
  int status = 200;
  std::string body;
};

// Raw request body in, reply out.
using RequestHandler = std::function<HttpReply(const std::string& body)>;

// In-process HTTP server bound to 127.0.0.1 on an ephemeral port, serving the
// remote wire protocol at POST /predict. Stops on destruction.
class LoopbackServer {
 public:
  explicit LoopbackServer(RequestHandler handler);
  ~LoopbackServer();

  LoopbackServer(const LoopbackServer&) = delete;
  LoopbackServer& operator=(const LoopbackServer&) = delete;

  int port() const { return port_; }
  std::string url() const;
  std::size_t requests_served() const { return served_.load(); }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
  std::atomic<std::size_t> served_{0};
  std::thread thread_;
};

// Wire-protocol handlers wrapping zoo models.
RequestHandler serve_surrogate(std::shared_ptr<const zoo::SurrogateModel> model);
// Each request draws from a stream keyed by (seed, request counter).
RequestHandler serve_text_model(std::shared_ptr<const text::TextModel> model, std::uint64_t seed);

}  // namespace probekit::probing

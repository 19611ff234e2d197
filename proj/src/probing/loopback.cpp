#include "probekit/probing/loopback.hpp"

#include <mutex>

#include <httplib.h>

#include "probekit/core/error.hpp"
#include "probekit/core/json_io.hpp"

namespace probekit::probing {

struct LoopbackServer::Impl {
  httplib::Server server;
};

LoopbackServer::LoopbackServer(RequestHandler handler) : impl_(std::make_unique<Impl>()) {
  impl_->server.Post("/predict", [this, handler = std::move(handler)](const httplib::Request& req,
                                                                        httplib::Response& res) {
    ++served_;
    HttpReply reply;
    try {
      reply = handler(req.body);
    } catch (const std::exception& e) {
      reply = HttpReply{400, std::string("{\"error\":") + Json(std::string(e.what())).dump() + "}"};
    }
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  });
  port_ = impl_->server.bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw NetworkError("loopback server could not bind to 127.0.0.1");
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

LoopbackServer::~LoopbackServer() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

std::string LoopbackServer::url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/predict"; }

RequestHandler serve_surrogate(std::shared_ptr<const zoo::SurrogateModel> model) {
  return [model = std::move(model)](const std::string& body) {
    const Json req = Json::parse(body);
    if (req.at("modality") != "vector") throw ValidationError("this target serves vector probes");
    const auto x = req.at("payload").get<std::vector<double>>();
    Json res = Json::object();
    res["probs"] = zoo::predict_proba(*model, x).values();
    return HttpReply{200, res.dump()};
  };
}

RequestHandler serve_text_model(std::shared_ptr<const text::TextModel> model, std::uint64_t seed) {
  auto counter = std::make_shared<std::pair<std::mutex, std::uint64_t>>();
  return [model = std::move(model), seed, counter](const std::string& body) {
    const Json req = Json::parse(body);
    if (req.at("modality") != "text") throw ValidationError("this target serves text probes");
    std::uint64_t n = 0;
    {
      std::lock_guard lock(counter->first);
      n = counter->second++;
    }
    Rng rng(derive_seed(seed, n));
    Json res = Json::object();
    res["text"] = text::generate(*model, req.at("payload").get<std::string>(),
                                 req.value("length", std::size_t{256}), rng);
    return HttpReply{200, res.dump()};
  };
}

}  // namespace probekit::probing

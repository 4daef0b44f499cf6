#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "play/checkpoint.hpp"
#include "play/sampler.hpp"

namespace play {

// JSON forms shared by the service and the CLI.
// Request: {"guidelines": [{"axis": "h", "pos": 9}, ...], "n": 12, "w": 1.5, "seed": 3}
// ("n" optional; "w" defaults to 1.5; "seed" defaults to 0).
GenerationRequest request_from_json(const nlohmann::json& j);
nlohmann::json request_to_json(const GenerationRequest& r);
// Accepts either an array of guideline objects or {"guidelines": [...]}.
GuidelineSet guideline_list_from_json(const nlohmann::json& j, const std::string& field = "guidelines");
nlohmann::json guideline_list_to_json(const GuidelineSet& gs);

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// Stateless HTTP front end over one loaded model. Every response to a model
// endpoint echoes the request; errors are {"code", "message", "field"}.
class Service {
 public:
  // A null model makes every model endpoint answer 503.
  explicit Service(std::shared_ptr<PlayModel> model, std::string cors_origin = "*");
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Routes one request without touching the network.
  HttpResponse handle(const std::string& method, const std::string& path, const std::string& body) const;

  // Binds and serves on a background thread; returns the bound port (useful
  // with port 0). Throws InvalidArgument when the address cannot be bound.
  int start(const std::string& host, int port);
  // Blocks serving on the calling thread.
  void listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace play

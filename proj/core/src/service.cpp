#include "play/service.hpp"

#include <thread>

#include <httplib.h>

#include "play/error.hpp"
#include "play/ingest.hpp"
#include "play/render.hpp"

namespace play {

namespace {

using json = nlohmann::json;

class HttpError : public Error {
 public:
  HttpError(int status, const char* code, const std::string& message, std::string field = {})
      : Error(message, std::move(field)), status_(status), code_(code) {}
  int status() const { return status_; }
  const char* code() const noexcept override { return code_; }

 private:
  int status_;
  const char* code_;
};

const json& need(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(std::string("missing field '") + key + "'", key);
  return j[key];
}

template <typename T>
T get_as(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(std::string("field '") + key + "' has the wrong type", key);
  }
}

json error_body(const Error& e) { return {{"code", e.code()}, {"message", e.what()}, {"field", e.field()}}; }

}  // namespace

GuidelineSet guideline_list_from_json(const json& j, const std::string& field) {
  try {
    if (j.is_array()) return guidelines_from_json(json{{"guidelines", j}});
    return guidelines_from_json(j);
  } catch (const SchemaError& e) {
    throw SchemaError(e.what(), field + (e.field().rfind("guidelines", 0) == 0 ? e.field().substr(10) : ""));
  } catch (const ValidationError& e) {
    throw ValidationError(e.what(), field);
  } catch (const CapacityError& e) {
    throw CapacityError(e.what(), field);
  }
}

json guideline_list_to_json(const GuidelineSet& gs) { return to_json(gs)["guidelines"]; }

GenerationRequest request_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("request must be a JSON object", "request");
  GenerationRequest r;
  if (j.contains("guidelines")) r.guidelines = guideline_list_from_json(j["guidelines"]);
  if (j.contains("n") && !j["n"].is_null()) {
    if (!j["n"].is_number_integer()) throw SchemaError("'n' must be an integer", "n");
    r.n = j["n"].get<int>();
  }
  if (j.contains("w")) {
    if (!j["w"].is_number()) throw SchemaError("'w' must be a number", "w");
    r.w = j["w"].get<double>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<int64_t>() >= 0)) {
      throw SchemaError("'seed' must be a non-negative integer", "seed");
    }
    r.seed = j["seed"].get<std::uint64_t>();
  }
  r.validate();
  return r;
}

json request_to_json(const GenerationRequest& r) {
  json j{{"guidelines", guideline_list_to_json(r.guidelines)}, {"w", r.w}, {"seed", r.seed}};
  j["n"] = r.n ? json(*r.n) : json(nullptr);
  return j;
}

struct Service::Impl {
  std::shared_ptr<PlayModel> model;
  std::string cors;
  std::string model_id;
  httplib::Server server;
  std::thread thread;

  PlayModel& need_model() const {
    if (!model || !model->has_diffusion()) throw HttpError(503, "model_unavailable", "no model is loaded");
    return *model;
  }

  Layout layout_from(const json& j, const char* field) const {
    try {
      return normalize_ingest(j, model->vocab);
    } catch (const Error& e) {
      throw SchemaError(e.what(), std::string(field) + (e.field().empty() ? "" : "." + e.field()));
    }
  }

  json layout_json(const Layout& l) const { return to_grid_json(l, model->vocab); }

  json generation_json(const Generation& g) const {
    RenderOptions ro;
    ro.show_guidelines = true;
    ro.guidelines = g.request.guidelines;
    return {{"request", request_to_json(g.request)},
            {"layout", layout_json(g.layout)},
            {"latent_meta", {{"seed", g.request.seed}, {"n", g.n}, {"w", g.request.w}}},
            {"svg", render_svg(g.layout, model->vocab, ro)}};
  }

  json meta() const {
    auto& m = need_model();
    json classes = json::array();
    for (int i = 0; i < m.vocab.size(); ++i) {
      classes.push_back({{"index", i}, {"name", m.vocab.name(i)}, {"color", m.vocab.color(i)}});
    }
    return {{"checkpoint_id", model_id},
            {"vocab", {{"dataset", std::string(to_string(m.vocab.dataset()))}, {"classes", classes}}},
            {"grid", {{"width", kGridWidth}, {"height", kGridHeight}}},
            {"max_elements", kMaxElements},
            {"T", m.ldm->schedule.steps},
            {"w_default", kDefaultGuidanceWeight},
            {"latent_dim", m.ldm->config().latent_dim},
            {"p_n", m.counts.probability}};
  }

  json generate(const json& body) const {
    auto& m = need_model();
    return generation_json(sample_layout(m, request_from_json(body)));
  }

  json extract(const json& body) const {
    auto& m = need_model();
    const auto l = layout_from(body.contains("layout") ? body["layout"] : body, "layout");
    validate(l, m.vocab.size());
    auto r = extract_guidelines_checked(l);
    json weights = json::array();
    for (const auto& w : weigh_guidelines(l, r.guidelines)) {
      weights.push_back(json{{"axis", w.guideline.axis == Axis::horizontal ? "h" : "v"},
                             {"pos", w.guideline.position},
                             {"weight", w.weight}});
    }
    return {{"guidelines", guideline_list_to_json(r.guidelines)}, {"weights", weights}, {"truncated", r.truncated}};
  }

  json variation(const json& body) const {
    auto& m = need_model();
    const auto l = layout_from(need(body, "layout"), "layout");
    std::optional<GuidelineSampling> subset = GuidelineSampling::all;
    if (body.contains("subset_method")) {
      const auto name = get_as<std::string>(body, "subset_method");
      if (name == "none") {
        subset.reset();
      } else {
        try {
          subset = guideline_sampling_from_string(name);
        } catch (const Error& e) {
          throw InvalidArgument(e.what(), "subset_method");
        }
      }
    }
    std::vector<std::uint64_t> seeds;
    if (body.contains("seeds")) {
      seeds = get_as<std::vector<std::uint64_t>>(body, "seeds");
      if (body.contains("count") && get_as<std::size_t>(body, "count") != seeds.size()) {
        throw InvalidArgument("'count' disagrees with the number of seeds", "count");
      }
    } else {
      const int count = body.contains("count") ? get_as<int>(body, "count") : 4;
      if (count < 1 || count > 64) throw InvalidArgument("'count' must be in [1, 64]", "count");
      for (int i = 0; i < count; ++i) seeds.push_back(static_cast<std::uint64_t>(i));
    }
    const double w = body.contains("w") ? get_as<double>(body, "w") : kDefaultGuidanceWeight;
    if (!(w >= 0)) throw InvalidArgument("w must be non-negative", "w");
    auto out = generate_variations(m, l, subset, seeds, w);
    json layouts = json::array();
    for (const auto& v : out) layouts.push_back(layout_json(v));
    json echo = body;
    echo["seeds"] = seeds;
    return {{"request", echo}, {"layouts", layouts}};
  }

  json edit(const json& body) const {
    auto& m = need_model();
    const auto prev = request_from_json(need(body, "original_request"));
    const auto gs = guideline_list_from_json(need(body, "new_guidelines"), "new_guidelines");
    std::optional<int> n;
    if (body.contains("n") && !body["n"].is_null()) n = get_as<int>(body, "n");
    auto g = edit_guidelines(m, prev, gs, n);
    auto out = generation_json(g);
    out["original_request"] = request_to_json(prev);
    return out;
  }

  json inpaint_(const json& body) const {
    auto& m = need_model();
    const auto l = layout_from(need(body, "layout"), "layout");
    const auto mask = get_as<std::vector<int>>(body, "idx_mask");
    GuidelineSet gs;
    if (body.contains("guidelines")) gs = guideline_list_from_json(body["guidelines"]);
    const std::uint64_t seed = body.contains("seed") ? get_as<std::uint64_t>(body, "seed") : 0;
    const double w = body.contains("w") ? get_as<double>(body, "w") : kDefaultGuidanceWeight;
    auto out = inpaint(m, l, mask, gs, seed, w);
    RenderOptions ro;
    ro.show_guidelines = true;
    ro.guidelines = gs;
    return {{"request", body}, {"layout", layout_json(out)}, {"svg", render_svg(out, m.vocab, ro)}};
  }

  HttpResponse route(const std::string& method, const std::string& path, const std::string& body) const {
    HttpResponse res;
    try {
      if (method == "OPTIONS") {
        res.status = 204;
        res.content_type.clear();
        return res;
      }
      json parsed;
      if (method == "POST") {
        try {
          parsed = json::parse(body);
        } catch (const json::exception& e) {
          throw SchemaError(std::string("request body is not JSON: ") + e.what(), "body");
        }
      }
      json out;
      if (method == "GET" && path == "/meta") out = meta();
      else if (method == "GET" && path == "/health") out = {{"status", "ok"}, {"model_loaded", model && model->has_diffusion()}};
      else if (method == "POST" && path == "/generate") out = generate(parsed);
      else if (method == "POST" && path == "/extract") out = extract(parsed);
      else if (method == "POST" && path == "/variation") out = variation(parsed);
      else if (method == "POST" && path == "/edit") out = edit(parsed);
      else if (method == "POST" && path == "/inpaint") out = inpaint_(parsed);
      else throw HttpError(404, "not_found", "no route for " + method + " " + path, "path");
      res.body = out.dump();
    } catch (const HttpError& e) {
      res.status = e.status();
      res.body = error_body(e).dump();
    } catch (const CountMismatch& e) {
      res.status = 409;
      res.body = error_body(e).dump();
    } catch (const NumericalError& e) {
      res.status = 500;
      res.body = error_body(e).dump();
    } catch (const Error& e) {
      res.status = 400;
      res.body = error_body(e).dump();
    } catch (const std::exception& e) {
      res.status = 500;
      res.body = json{{"code", "internal"}, {"message", e.what()}, {"field", ""}}.dump();
    }
    return res;
  }
};

Service::Service(std::shared_ptr<PlayModel> model, std::string cors_origin) : impl_(std::make_unique<Impl>()) {
  impl_->model = std::move(model);
  impl_->cors = std::move(cors_origin);
  if (impl_->model) impl_->model_id = checkpoint_id(*impl_->model);

  auto bridge = [this](const httplib::Request& req, httplib::Response& res) {
    const auto out = impl_->route(req.method, req.path, req.body);
    res.status = out.status;
    if (!out.content_type.empty()) res.set_content(out.body, out.content_type);
  };
  auto& s = impl_->server;
  s.Get("/meta", bridge);
  s.Get("/health", bridge);
  for (const char* p : {"/generate", "/extract", "/variation", "/edit", "/inpaint"}) s.Post(p, bridge);
  s.Options(R"(/.*)", bridge);
  s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    res.set_content(json{{"code", "not_found"}, {"message", "no route for " + req.method + " " + req.path},
                         {"field", "path"}}.dump(), "application/json");
  });
  s.set_default_headers({{"Access-Control-Allow-Origin", impl_->cors},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                         {"Access-Control-Allow-Headers", "Content-Type"}});
}

Service::~Service() { stop(); }

HttpResponse Service::handle(const std::string& method, const std::string& path, const std::string& body) const {
  return impl_->route(method, path, body);
}

int Service::start(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw InvalidArgument("cannot bind " + host + ":" + std::to_string(port), "port");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void Service::listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) throw InvalidArgument("cannot bind " + host + ":" + std::to_string(port), "port");
}

void Service::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace play

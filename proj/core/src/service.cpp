#include "telecomrag/service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>

#include "telecomrag/errors.hpp"
#include "telecomrag/text.hpp"

namespace telecomrag::service {
namespace {

constexpr const char* kJson = "application/json";

nlohmann::json turn_list(const std::vector<history::Turn>& turns) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : turns) out.push_back(t);
  return out;
}

}  // namespace

std::string to_string(ApiErrorCode code) {
  switch (code) {
    case ApiErrorCode::kBadRequest:
      return "bad_request";
    case ApiErrorCode::kNotFound:
      return "not_found";
    case ApiErrorCode::kProviderUnavailable:
      return "provider_unavailable";
    case ApiErrorCode::kInternal:
      return "internal";
  }
  return "internal";
}

ApiResponse api_error(int status, ApiErrorCode code, std::string message) {
  return {status, nlohmann::json{{"code", to_string(code)}, {"message", std::move(message)}}};
}

Api::Api(ServiceConfig cfg) : cfg_(std::move(cfg)) {
  chat_ = llm::make_chat_model(cfg_.llm);
  sessions_ = cfg_.state_dir ? std::make_unique<history::SessionStore>(*cfg_.state_dir)
                             : std::make_unique<history::SessionStore>();
  if (!cfg_.index_dir.empty()) {
    try {
      snapshot_ = make_snapshot(std::make_shared<const KnowledgeBase>(KnowledgeBase::load(cfg_.index_dir)));
    } catch (const std::exception& e) {
      spdlog::warn("no index mounted from {}: {}", cfg_.index_dir.string(), e.what());
    }
  }
}

Api::Api(ServiceConfig cfg, std::shared_ptr<const KnowledgeBase> kb, std::shared_ptr<const llm::ChatModel> chat)
    : cfg_(std::move(cfg)), chat_(std::move(chat)) {
  if (!chat_) chat_ = llm::make_chat_model(cfg_.llm);
  sessions_ = cfg_.state_dir ? std::make_unique<history::SessionStore>(*cfg_.state_dir)
                             : std::make_unique<history::SessionStore>();
  if (kb) snapshot_ = make_snapshot(std::move(kb));
}

Api::Snapshot Api::make_snapshot(std::shared_ptr<const KnowledgeBase> kb) const {
  const embed::EmbedderConfig ecfg = cfg_.embedder.value_or(kb->embedder_config());
  return {std::move(kb), std::shared_ptr<const embed::Embedder>(embed::make_embedder(ecfg))};
}

std::optional<Api::Snapshot> Api::current() const {
  std::lock_guard lock(snapshot_mu_);
  return snapshot_;
}

ApiResponse Api::create_session() {
  const history::Session s = sessions_->create_session();
  return {201, nlohmann::json{{"session_id", s.session_id}}};
}

ApiResponse Api::session_history(const std::string& session_id) {
  const auto session = sessions_->get(session_id);
  if (!session) return api_error(404, ApiErrorCode::kNotFound, "unknown session: " + session_id);
  return {200, turn_list(session->turns)};
}

ApiResponse Api::query(const std::string& session_id, std::string_view body) {
  if (!sessions_->contains(session_id)) {
    return api_error(404, ApiErrorCode::kNotFound, "unknown session: " + session_id);
  }
  nlohmann::json req;
  try {
    req = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    return api_error(400, ApiErrorCode::kBadRequest, "request body is not valid JSON");
  }
  if (!req.is_object() || !req.contains("question") || !req.at("question").is_string()) {
    return api_error(400, ApiErrorCode::kBadRequest, "field 'question' (string) is required");
  }
  const std::string question = req.at("question").get<std::string>();
  if (text::trim(question).empty()) return api_error(400, ApiErrorCode::kBadRequest, "question is empty");

  chain::RetrievalParams params = cfg_.retrieval;
  if (req.contains("k")) {
    const auto& k = req.at("k");
    if (!k.is_number_integer() || k.get<long long>() < 1) {
      return api_error(400, ApiErrorCode::kBadRequest, "'k' must be a positive integer");
    }
    params.k = k.get<std::size_t>();
  }
  if (req.contains("excluded_doc_ids")) {
    const auto& ex = req.at("excluded_doc_ids");
    if (!ex.is_array() || !std::all_of(ex.begin(), ex.end(), [](const auto& v) { return v.is_string(); })) {
      return api_error(400, ApiErrorCode::kBadRequest, "'excluded_doc_ids' must be an array of strings");
    }
    for (const auto& v : ex) params.excluded_doc_ids.insert(v.get<std::string>());
  }

  const auto snap = current();
  if (!snap) return api_error(503, ApiErrorCode::kInternal, "no index mounted");

  chain::ChainConfig ccfg{cfg_.retrieval, cfg_.persona, cfg_.verify, cfg_.history_window, false};
  try {
    const chain::QaChain qa(snap->kb, snap->embedder, chat_, chat_, ccfg);
    return {200, qa.answer(*sessions_, session_id, question, params)};
  } catch (const UnknownSession& e) {
    return api_error(404, ApiErrorCode::kNotFound, e.what());
  } catch (const ProviderError& e) {
    return api_error(502, ApiErrorCode::kProviderUnavailable, e.what());
  } catch (const EmptyResponse& e) {
    return api_error(502, ApiErrorCode::kProviderUnavailable, e.what());
  } catch (const InvalidParams& e) {
    return api_error(400, ApiErrorCode::kBadRequest, e.what());
  } catch (const NoTokens& e) {
    return api_error(400, ApiErrorCode::kBadRequest, e.what());
  } catch (const std::exception& e) {
    return api_error(500, ApiErrorCode::kInternal, e.what());
  }
}

ApiResponse Api::index_info() const {
  const auto snap = current();
  if (!snap) return api_error(503, ApiErrorCode::kInternal, "no index mounted");
  return {200, nlohmann::json{{"doc_count", snap->kb->doc_count()},
                              {"chunk_count", snap->kb->chunk_count()},
                              {"dim", snap->kb->index().dim()},
                              {"embedder_kind", embed::to_string(snap->embedder->kind())}}};
}

ApiResponse Api::health() const { return {200, nlohmann::json{{"status", "ok"}}}; }

ApiResponse Api::reload() {
  if (cfg_.index_dir.empty()) return api_error(400, ApiErrorCode::kBadRequest, "no index_dir configured");
  try {
    Snapshot fresh = make_snapshot(std::make_shared<const KnowledgeBase>(KnowledgeBase::load(cfg_.index_dir)));
    const std::size_t docs = fresh.kb->doc_count();
    const std::size_t chunks = fresh.kb->chunk_count();
    {
      std::lock_guard lock(snapshot_mu_);
      snapshot_ = std::move(fresh);
    }
    return {200, nlohmann::json{{"status", "reloaded"}, {"doc_count", docs}, {"chunk_count", chunks}}};
  } catch (const std::exception& e) {
    return api_error(500, ApiErrorCode::kInternal, std::string("reload failed: ") + e.what());
  }
}

struct HttpServer::Impl {
  Api& api;
  httplib::Server server;

  explicit Impl(Api& a) : api(a) {
    auto reply = [](httplib::Response& res, const ApiResponse& r) {
      res.status = r.status;
      res.set_content(r.body.dump(), kJson);
    };

    server.Post("/v1/sessions", [this, reply](const httplib::Request&, httplib::Response& res) {
      reply(res, api.create_session());
    });
    server.Get(R"(/v1/sessions/([^/]+)/history)", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, api.session_history(req.matches[1]));
    });
    server.Post(R"(/v1/sessions/([^/]+)/query)", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, api.query(req.matches[1], req.body));
    });
    server.Get("/v1/index", [this, reply](const httplib::Request&, httplib::Response& res) {
      reply(res, api.index_info());
    });
    server.Get("/v1/health", [this, reply](const httplib::Request&, httplib::Response& res) {
      reply(res, api.health());
    });
    server.Post("/v1/admin/reload", [this, reply](const httplib::Request&, httplib::Response& res) {
      reply(res, api.reload());
    });
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return;
      const ApiErrorCode code = res.status == 404 ? ApiErrorCode::kNotFound
                                : res.status < 500 ? ApiErrorCode::kBadRequest
                                                   : ApiErrorCode::kInternal;
      const auto err = api_error(res.status, code, "no route for " + req.method + " " + req.path);
      res.set_content(err.body.dump(), kJson);
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string message = "unhandled error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        message = e.what();
      } catch (...) {
      }
      const auto err = api_error(500, ApiErrorCode::kInternal, message);
      res.status = 500;
      res.set_content(err.body.dump(), kJson);
    });
    server.set_post_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      const auto& origins = api.config().cors_origins;
      const std::string origin = req.get_header_value("Origin");
      if (origin.empty()) return;
      const bool any = std::find(origins.begin(), origins.end(), "*") != origins.end();
      if (any || std::find(origins.begin(), origins.end(), origin) != origins.end()) {
        res.set_header("Access-Control-Allow-Origin", any ? "*" : origin);
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.set_header("Vary", "Origin");
      }
    });
  }
};

HttpServer::HttpServer(Api& api) : impl_(std::make_unique<Impl>(api)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace telecomrag::service

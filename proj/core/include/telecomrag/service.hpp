#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "telecomrag/chain.hpp"
#include "telecomrag/config.hpp"
#include "telecomrag/history.hpp"
#include "telecomrag/knowledge_base.hpp"
#include "telecomrag/llm.hpp"

namespace telecomrag::service {

enum class ApiErrorCode { kBadRequest, kNotFound, kProviderUnavailable, kInternal };

std::string to_string(ApiErrorCode code);

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// {"code": ..., "message": ...}
ApiResponse api_error(int status, ApiErrorCode code, std::string message);

/// Transport-independent request handlers behind the /v1 routes.
///
/// The knowledge base is held as an immutable snapshot; reload() swaps it
/// atomically and in-flight requests finish on the snapshot they started with.
class Api {
 public:
  /// Mounts cfg.index_dir when it loads; otherwise index-backed routes answer 503.
  explicit Api(ServiceConfig cfg);

  /// Uses the given snapshot and chat model instead of reading cfg.index_dir
  /// and cfg.llm.
  Api(ServiceConfig cfg, std::shared_ptr<const KnowledgeBase> kb, std::shared_ptr<const llm::ChatModel> chat);

  ApiResponse create_session();
  ApiResponse session_history(const std::string& session_id);
  ApiResponse query(const std::string& session_id, std::string_view body);
  ApiResponse index_info() const;
  ApiResponse health() const;
  ApiResponse reload();

  const ServiceConfig& config() const noexcept { return cfg_; }
  history::SessionStore& sessions() noexcept { return *sessions_; }

 private:
  struct Snapshot {
    std::shared_ptr<const KnowledgeBase> kb;
    std::shared_ptr<const embed::Embedder> embedder;
  };

  Snapshot make_snapshot(std::shared_ptr<const KnowledgeBase> kb) const;
  std::optional<Snapshot> current() const;

  ServiceConfig cfg_;
  std::shared_ptr<const llm::ChatModel> chat_;
  std::unique_ptr<history::SessionStore> sessions_;
  mutable std::mutex snapshot_mu_;
  std::optional<Snapshot> snapshot_;
};

/// HTTP binding of Api: JSON bodies, ApiError on every failure, CORS for
/// the configured origins.
class HttpServer {
 public:
  explicit HttpServer(Api& api);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds host:port (port 0 picks a free port) and returns the bound port,
  /// or -1 on failure.
  int bind(const std::string& host, int port);

  /// Serves until stop(). Requires a successful bind().
  bool listen_after_bind();

  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace telecomrag::service

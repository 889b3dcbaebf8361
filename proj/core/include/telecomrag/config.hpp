#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "telecomrag/chain.hpp"
#include "telecomrag/embedder.hpp"
#include "telecomrag/llm.hpp"

namespace telecomrag {

/// Shared by `serve` and, through --config, the other CLI commands.
struct ServiceConfig {
  std::string addr = "127.0.0.1:8080";
  std::filesystem::path index_dir;
  std::optional<std::filesystem::path> state_dir;
  // Unset: use the embedder recorded in the index directory.
  std::optional<embed::EmbedderConfig> embedder;
  llm::LlmConfig llm;
  chain::RetrievalParams retrieval;
  chain::VerifyConfig verify;
  chain::PersonaConfig persona;
  std::vector<std::string> cors_origins;
  std::size_t history_window = history::kDefaultWindow;
};

void to_json(nlohmann::json& j, const ServiceConfig& c);
void from_json(const nlohmann::json& j, ServiceConfig& c);

/// Throws IoError, or InvalidParams for malformed JSON or field values.
ServiceConfig load_config(const std::filesystem::path& file);

/// "host:port" -> {host, port}. Throws InvalidParams.
std::pair<std::string, int> split_addr(const std::string& addr);

}  // namespace telecomrag

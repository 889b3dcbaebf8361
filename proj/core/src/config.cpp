#include "telecomrag/config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "telecomrag/errors.hpp"

namespace telecomrag {

void to_json(nlohmann::json& j, const ServiceConfig& c) {
  j = nlohmann::json{{"addr", c.addr},
                     {"index_dir", c.index_dir.string()},
                     {"state_dir", c.state_dir ? nlohmann::json(c.state_dir->string()) : nlohmann::json(nullptr)},
                     {"llm", c.llm},
                     {"retrieval", c.retrieval},
                     {"verify", c.verify},
                     {"persona", c.persona.system_prompt},
                     {"cors_origins", c.cors_origins},
                     {"history_window", c.history_window}};
  if (c.embedder) j["embedder"] = *c.embedder;
}

void from_json(const nlohmann::json& j, ServiceConfig& c) {
  ServiceConfig d;
  c.addr = j.value("addr", d.addr);
  c.index_dir = j.value("index_dir", std::string{});
  if (j.contains("state_dir") && !j.at("state_dir").is_null()) c.state_dir = j.at("state_dir").get<std::string>();
  if (j.contains("embedder") && !j.at("embedder").is_null()) c.embedder = j.at("embedder").get<embed::EmbedderConfig>();
  if (j.contains("llm")) c.llm = j.at("llm").get<llm::LlmConfig>();
  if (j.contains("retrieval")) c.retrieval = j.at("retrieval").get<chain::RetrievalParams>();
  if (j.contains("verify")) c.verify = j.at("verify").get<chain::VerifyConfig>();
  if (j.contains("persona")) c.persona.system_prompt = j.at("persona").get<std::string>();
  c.cors_origins = j.value("cors_origins", d.cors_origins);
  c.history_window = j.value("history_window", d.history_window);
}

ServiceConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read config: " + file.string());
  try {
    ServiceConfig cfg = nlohmann::json::parse(in).get<ServiceConfig>();
    cfg.retrieval.validate();
    cfg.llm.validate();
    if (cfg.embedder) cfg.embedder->validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidParams("config " + file.string() + ": " + e.what());
  }
}

std::pair<std::string, int> split_addr(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0) throw InvalidParams("addr must be host:port, got " + addr);
  int port = 0;
  try {
    port = std::stoi(addr.substr(colon + 1));
  } catch (const std::exception&) {
    throw InvalidParams("bad port in addr " + addr);
  }
  if (port < 0 || port > 65535) throw InvalidParams("bad port in addr " + addr);
  return {addr.substr(0, colon), port};
}

}  // namespace telecomrag

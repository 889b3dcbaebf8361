#include "telecomrag/llm.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "telecomrag/errors.hpp"
#include "telecomrag/http_client.hpp"
#include "telecomrag/text.hpp"

namespace telecomrag::llm {
namespace {

void check_messages(const std::vector<ChatMessage>& messages) {
  if (messages.empty()) throw InvalidParams("chat request has no messages");
  for (const auto& m : messages) {
    if (m.content.empty()) throw InvalidParams("chat message content is empty");
  }
}

std::string unescape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      const char n = s[i + 1];
      if (n == 'n' || n == 't' || n == '\\') {
        out.push_back(n == 'n' ? '\n' : n == 't' ? '\t' : '\\');
        ++i;
        continue;
      }
    }
    out.push_back(s[i]);
  }
  return out;
}

}  // namespace

std::string to_string(Role role) {
  switch (role) {
    case Role::kSystem:
      return "system";
    case Role::kUser:
      return "user";
    case Role::kAssistant:
      return "assistant";
  }
  return "user";
}

Role role_from_string(std::string_view s) {
  if (s == "system") return Role::kSystem;
  if (s == "user") return Role::kUser;
  if (s == "assistant") return Role::kAssistant;
  throw InvalidParams("unknown chat role: " + std::string(s));
}

void LlmConfig::validate() const {
  if (kind == LlmKind::kRemote && base_url.empty()) throw InvalidParams("remote llm needs base_url");
  if (kind == LlmKind::kRemote && model_name.empty()) throw InvalidParams("remote llm needs model_name");
  if (temperature < 0.0 || temperature > 2.0) throw InvalidParams("temperature must be in [0, 2]");
  if (max_retries < 0) throw InvalidParams("max_retries must be non-negative");
}

void to_json(nlohmann::json& j, const ChatMessage& m) {
  j = nlohmann::json{{"role", to_string(m.role)}, {"content", m.content}};
}

void from_json(const nlohmann::json& j, ChatMessage& m) {
  m.role = role_from_string(j.at("role").get<std::string>());
  j.at("content").get_to(m.content);
}

void to_json(nlohmann::json& j, const LlmConfig& c) {
  nlohmann::json script = nlohmann::json::array();
  for (const auto& e : c.script) script.push_back({{"match", e.matcher}, {"reply", e.reply}});
  j = nlohmann::json{{"kind", c.kind == LlmKind::kRemote ? "remote" : "scripted"},
                     {"base_url", c.base_url},
                     {"model_name", c.model_name},
                     {"api_key_env", c.api_key_env},
                     {"temperature", c.temperature},
                     {"script", std::move(script)},
                     {"timeout_ms", c.timeout.count()},
                     {"max_retries", c.max_retries},
                     {"backoff_base_ms", c.backoff_base.count()}};
}

void from_json(const nlohmann::json& j, LlmConfig& c) {
  LlmConfig d;
  const std::string kind = j.value("kind", std::string("scripted"));
  if (kind == "remote") {
    c.kind = LlmKind::kRemote;
  } else if (kind == "scripted") {
    c.kind = LlmKind::kScripted;
  } else {
    throw InvalidParams("unknown llm kind: " + kind);
  }
  c.base_url = j.value("base_url", d.base_url);
  c.model_name = j.value("model_name", d.model_name);
  c.api_key_env = j.value("api_key_env", d.api_key_env);
  c.temperature = j.value("temperature", d.temperature);
  c.script.clear();
  if (j.contains("script")) {
    for (const auto& e : j.at("script")) c.script.push_back({e.at("match").get<std::string>(), e.at("reply").get<std::string>()});
  }
  c.timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<long long>(d.timeout.count())));
  c.max_retries = j.value("max_retries", d.max_retries);
  c.backoff_base =
      std::chrono::milliseconds(j.value("backoff_base_ms", static_cast<long long>(d.backoff_base.count())));
}

std::vector<ScriptEntry> read_script(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read script file: " + path);
  std::vector<ScriptEntry> script;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw InvalidParams("script line " + std::to_string(line_no) + ": expected matcher<TAB>reply");
    }
    script.push_back({line.substr(0, tab), unescape(std::string_view(line).substr(tab + 1))});
  }
  return script;
}

ScriptedChatModel::ScriptedChatModel(std::vector<ScriptEntry> script) : script_(std::move(script)) {}

std::string ScriptedChatModel::complete(const std::vector<ChatMessage>& messages) const {
  check_messages(messages);
  calls_.fetch_add(1);
  const ChatMessage* last_user = nullptr;
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == Role::kUser) {
      last_user = &*it;
      break;
    }
  }
  if (last_user != nullptr) {
    for (const auto& entry : script_) {
      if (last_user->content.find(entry.matcher) != std::string::npos) return entry.reply;
    }
  }
  return std::string(kScriptMiss);
}

RemoteChatModel::RemoteChatModel(LlmConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.kind = LlmKind::kRemote;
  cfg_.validate();
}

std::string RemoteChatModel::request_body(const std::vector<ChatMessage>& messages) const {
  nlohmann::json body{{"model", cfg_.model_name}, {"temperature", cfg_.temperature}, {"messages", messages}};
  return body.dump();
}

std::string RemoteChatModel::complete(const std::vector<ChatMessage>& messages) const {
  check_messages(messages);
  const std::string body = http::post_json(cfg_.base_url, "/chat/completions", request_body(messages),
                                           http::env_value(cfg_.api_key_env),
                                           {cfg_.timeout, cfg_.max_retries, cfg_.backoff_base});
  nlohmann::json response;
  try {
    response = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw ProviderError(200, body.substr(0, 256));
  }
  const auto choices = response.find("choices");
  if (choices == response.end() || !choices->is_array() || choices->empty()) {
    throw EmptyResponse("chat completion returned no choices");
  }
  const auto& message = (*choices)[0].value("message", nlohmann::json::object());
  const auto content = message.find("content");
  if (content == message.end() || !content->is_string() || content->get<std::string>().empty()) {
    throw EmptyResponse("chat completion returned no content");
  }
  return content->get<std::string>();
}

std::unique_ptr<ChatModel> make_chat_model(const LlmConfig& cfg) {
  cfg.validate();
  if (cfg.kind == LlmKind::kScripted) return std::make_unique<ScriptedChatModel>(cfg.script);
  return std::make_unique<RemoteChatModel>(cfg);
}

std::string chat_complete(const std::vector<ChatMessage>& messages, const LlmConfig& cfg) {
  return make_chat_model(cfg)->complete(messages);
}

}  // namespace telecomrag::llm

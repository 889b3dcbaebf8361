#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace telecomrag::llm {

/// Reply of the scripted provider when no script entry matches.
inline constexpr std::string_view kScriptMiss = "SCRIPT-MISS";

enum class Role { kSystem, kUser, kAssistant };

std::string to_string(Role role);
Role role_from_string(std::string_view s);

struct ChatMessage {
  Role role = Role::kUser;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ScriptEntry {
  std::string matcher;  // substring of the last user message
  std::string reply;
};

enum class LlmKind { kRemote, kScripted };

struct LlmConfig {
  LlmKind kind = LlmKind::kScripted;
  std::string base_url;
  std::string model_name = "gpt-4-1106-preview";
  std::string api_key_env = "TELECOMRAG_LLM_API_KEY";
  double temperature = 0.0;
  std::vector<ScriptEntry> script;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{500};

  void validate() const;
};

void to_json(nlohmann::json& j, const LlmConfig& c);
void from_json(const nlohmann::json& j, LlmConfig& c);
void to_json(nlohmann::json& j, const ChatMessage& m);
void from_json(const nlohmann::json& j, ChatMessage& m);

/// Reads a script file: one `matcher<TAB>reply` entry per line. Blank lines
/// and lines starting with '#' are skipped; "\n" and "\t" in a reply are
/// unescaped. Throws IoError / InvalidParams.
std::vector<ScriptEntry> read_script(const std::string& path);

class ChatModel {
 public:
  virtual ~ChatModel() = default;

  /// Throws InvalidParams on an empty message list or empty content.
  virtual std::string complete(const std::vector<ChatMessage>& messages) const = 0;
};

/// Deterministic provider for tests and offline runs. Counts its calls.
class ScriptedChatModel final : public ChatModel {
 public:
  explicit ScriptedChatModel(std::vector<ScriptEntry> script);

  std::string complete(const std::vector<ChatMessage>& messages) const override;

  std::size_t calls() const noexcept { return calls_.load(); }
  void reset_calls() noexcept { calls_.store(0); }

 private:
  std::vector<ScriptEntry> script_;
  mutable std::atomic<std::size_t> calls_{0};
};

/// Client for an OpenAI-style `POST {base_url}/chat/completions` endpoint.
class RemoteChatModel final : public ChatModel {
 public:
  explicit RemoteChatModel(LlmConfig cfg);

  std::string complete(const std::vector<ChatMessage>& messages) const override;

  /// The exact request body sent for `messages`.
  std::string request_body(const std::vector<ChatMessage>& messages) const;

 private:
  LlmConfig cfg_;
};

std::unique_ptr<ChatModel> make_chat_model(const LlmConfig& cfg);

std::string chat_complete(const std::vector<ChatMessage>& messages, const LlmConfig& cfg);

}  // namespace telecomrag::llm

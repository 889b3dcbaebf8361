#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "telecomrag/errors.hpp"
#include "telecomrag/llm.hpp"
#include "test_support.hpp"

using namespace telecomrag;
using namespace telecomrag::llm;
using telecomrag::testing::StubServer;
using telecomrag::testing::TempDir;
using telecomrag::testing::write_file;

namespace {

LlmConfig remote_config(const StubServer& stub) {
  LlmConfig cfg;
  cfg.kind = LlmKind::kRemote;
  cfg.base_url = stub.base_url();
  cfg.backoff_base = std::chrono::milliseconds(1);
  cfg.timeout = std::chrono::milliseconds(5000);
  cfg.api_key_env = "TELECOMRAG_TEST_LLM_KEY";
  return cfg;
}

// Replies with the content of the last user message.
StubServer::Reply echo(const StubServer::Request& req) {
  const auto body = nlohmann::json::parse(req.body);
  std::string last;
  for (const auto& m : body.at("messages")) {
    if (m.at("role") == "user") last = m.at("content").get<std::string>();
  }
  const nlohmann::json reply{{"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", last}}}}}}};
  return {200, reply.dump()};
}

const std::vector<ChatMessage> kConversation{
    {Role::kSystem, "be brief"}, {Role::kUser, "first"}, {Role::kAssistant, "ok"}, {Role::kUser, "define ECN"}};

}  // namespace

TEST(LlmConfig, Defaults) {
  const LlmConfig c;
  EXPECT_EQ(c.model_name, "gpt-4-1106-preview");
  EXPECT_EQ(c.temperature, 0.0);
  EXPECT_EQ(c.timeout, std::chrono::seconds(60));
  EXPECT_EQ(c.max_retries, 3);
  EXPECT_EQ(c.api_key_env, "TELECOMRAG_LLM_API_KEY");
}

TEST(LlmConfig, ValidationAndJson) {
  LlmConfig c;
  c.kind = LlmKind::kRemote;
  EXPECT_THROW(c.validate(), InvalidParams);  // no base_url
  c.base_url = "http://x/v1";
  c.temperature = 2.5;
  EXPECT_THROW(c.validate(), InvalidParams);
  c.temperature = 0.7;
  c.script = {{"a", "b"}};
  const auto back = nlohmann::json(c).get<LlmConfig>();
  EXPECT_EQ(back.kind, LlmKind::kRemote);
  EXPECT_EQ(back.base_url, "http://x/v1");
  EXPECT_DOUBLE_EQ(back.temperature, 0.7);
  ASSERT_EQ(back.script.size(), 1u);
  EXPECT_EQ(back.script[0].reply, "b");
  EXPECT_THROW(nlohmann::json({{"kind", "oracle"}}).get<LlmConfig>(), InvalidParams);
}

TEST(Roles, StringForm) {
  EXPECT_EQ(to_string(Role::kAssistant), "assistant");
  EXPECT_EQ(role_from_string("system"), Role::kSystem);
  EXPECT_THROW(role_from_string("tool"), InvalidParams);
}

TEST(Scripted, FirstMatchingEntryWins) {
  const ScriptedChatModel model(std::vector<ScriptEntry>{{"ECN", "ecn-answer"}, {"define", "generic"}});
  EXPECT_EQ(model.complete(kConversation), "ecn-answer");
}

TEST(Scripted, MatchesOnlyTheLastUserMessage) {
  const ScriptedChatModel model(std::vector<ScriptEntry>{{"first", "wrong"}});
  EXPECT_EQ(model.complete(kConversation), kScriptMiss);
}

TEST(Scripted, MissAndCallCounting) {
  const ScriptedChatModel model(std::vector<ScriptEntry>{{"zzz", "never"}});
  EXPECT_EQ(model.complete({{Role::kUser, "hello"}}), "SCRIPT-MISS");
  EXPECT_EQ(model.complete({{Role::kUser, "hello"}}), "SCRIPT-MISS");
  EXPECT_EQ(model.calls(), 2u);
  EXPECT_THROW(model.complete({}), InvalidParams);
}

TEST(Scripted, ViaConfig) {
  LlmConfig cfg;
  cfg.script = {{"ECN", "ecn-answer"}};
  EXPECT_EQ(chat_complete({{Role::kUser, "define ECN"}}, cfg), "ecn-answer");
}

TEST(Script, ReadsTsvWithEscapes) {
  TempDir dir;
  write_file(dir / "s.script", "# comment\n\nECN\tline one\\nline two\\ttabbed\\\\\r\nother\treply\n");
  const auto script = read_script((dir / "s.script").string());
  ASSERT_EQ(script.size(), 2u);
  EXPECT_EQ(script[0].matcher, "ECN");
  EXPECT_EQ(script[0].reply, "line one\nline two\ttabbed\\");
  EXPECT_EQ(script[1].reply, "reply");

  write_file(dir / "bad.script", "no tab here\n");
  EXPECT_THROW(read_script((dir / "bad.script").string()), InvalidParams);
  EXPECT_THROW(read_script((dir / "absent.script").string()), IoError);
}

TEST(Remote, EchoesLastUserMessage) {
  StubServer stub;
  stub.on_post("/v1/chat/completions", echo);
  stub.start();
  EXPECT_EQ(chat_complete(kConversation, remote_config(stub)), "define ECN");
}

TEST(Remote, RequestBodyIsPureAndComplete) {
  ::setenv("TELECOMRAG_TEST_LLM_KEY", "k-123", 1);
  StubServer stub;
  stub.on_post("/v1/chat/completions", echo);
  stub.start();
  LlmConfig cfg = remote_config(stub);
  cfg.model_name = "model-x";
  const RemoteChatModel model(cfg);
  const auto before = kConversation;
  model.complete(kConversation);
  ::unsetenv("TELECOMRAG_TEST_LLM_KEY");
  EXPECT_EQ(kConversation, before);

  const auto reqs = stub.requests();
  ASSERT_EQ(reqs.size(), 1u);
  EXPECT_EQ(reqs[0].body, model.request_body(kConversation));
  EXPECT_EQ(reqs[0].authorization, "Bearer k-123");
  const auto body = nlohmann::json::parse(reqs[0].body);
  EXPECT_EQ(body.at("model"), "model-x");
  EXPECT_EQ(body.at("temperature"), 0.0);
  ASSERT_EQ(body.at("messages").size(), 4u);
  EXPECT_EQ(body.at("messages")[0].at("role"), "system");
  EXPECT_EQ(body.at("messages")[2].at("content"), "ok");
}

TEST(Remote, RetriesThenSucceeds) {
  StubServer stub;
  std::atomic<int> calls{0};
  stub.on_post("/v1/chat/completions", [&](const StubServer::Request& r) {
    return calls++ < 2 ? StubServer::Reply{502, "bad gateway"} : echo(r);
  });
  stub.start();
  EXPECT_EQ(chat_complete(kConversation, remote_config(stub)), "define ECN");
  EXPECT_EQ(calls.load(), 3);
}

TEST(Remote, ProviderErrorAfterRetries) {
  StubServer stub;
  stub.on_post("/v1/chat/completions", [](const StubServer::Request&) { return StubServer::Reply{429, "later"}; });
  stub.start();
  LlmConfig cfg = remote_config(stub);
  cfg.max_retries = 1;
  EXPECT_THROW(chat_complete(kConversation, cfg), ProviderError);
  EXPECT_EQ(stub.requests().size(), 2u);
}

TEST(Remote, EmptyResponses) {
  StubServer stub;
  stub.on_post("/v1/chat/completions", [](const StubServer::Request& r) {
    if (r.body.find("no-choices") != std::string::npos) return StubServer::Reply{200, R"({"choices":[]})"};
    return StubServer::Reply{200, R"({"choices":[{"message":{"role":"assistant","content":""}}]})"};
  });
  stub.start();
  EXPECT_THROW(chat_complete({{Role::kUser, "no-choices"}}, remote_config(stub)), EmptyResponse);
  EXPECT_THROW(chat_complete({{Role::kUser, "blank"}}, remote_config(stub)), EmptyResponse);
}

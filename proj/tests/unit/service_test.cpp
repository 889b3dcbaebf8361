#include <gtest/gtest.h>

#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "telecomrag/service.hpp"
#include "test_support.hpp"

using namespace telecomrag;
using namespace telecomrag::service;
using telecomrag::testing::ecn_knowledge_base;
using telecomrag::testing::ecn_script_path;
using telecomrag::testing::fixture_doc_id;
using telecomrag::testing::kEcnQuestion;
using telecomrag::testing::TempDir;

namespace {

std::shared_ptr<const llm::ChatModel> ecn_model() {
  return std::make_shared<llm::ScriptedChatModel>(llm::read_script(ecn_script_path().string()));
}

std::string query_body(const std::string& question) { return nlohmann::json{{"question", question}}.dump(); }

}  // namespace

class ApiTest : public ::testing::Test {
 protected:
  Api api_{ServiceConfig{}, ecn_knowledge_base(), ecn_model()};

  std::string new_session() { return api_.create_session().body.at("session_id").get<std::string>(); }
};

TEST_F(ApiTest, SessionLifecycle) {
  const auto created = api_.create_session();
  EXPECT_EQ(created.status, 201);
  const std::string id = created.body.at("session_id");
  EXPECT_NE(id, new_session());

  const auto hist = api_.session_history(id);
  EXPECT_EQ(hist.status, 200);
  EXPECT_TRUE(hist.body.is_array());
  EXPECT_TRUE(hist.body.empty());
  EXPECT_EQ(api_.session_history("nope").status, 404);
  EXPECT_EQ(api_.session_history("nope").body.at("code"), "not_found");
}

TEST_F(ApiTest, QueryReturnsEnvelopeAndRecordsTurn) {
  const std::string id = new_session();
  const auto r = api_.query(id, query_body(kEcnQuestion));
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body.at("verdict"), "ok");
  ASSERT_EQ(r.body.at("references").size(), 1u);
  EXPECT_EQ(r.body.at("references")[0].at("doc_id"), fixture_doc_id(*ecn_knowledge_base(), "ts_23.334"));
  EXPECT_EQ(r.body.at("references")[0].at("spec_label"), "TS 23.334");

  const auto hist = api_.session_history(id).body;
  ASSERT_EQ(hist.size(), 1u);
  EXPECT_EQ(hist[0].at("query"), kEcnQuestion);
  EXPECT_EQ(hist[0].at("answer"), r.body.at("answer"));
}

TEST_F(ApiTest, QueryOptions) {
  const std::string id = new_session();
  const std::string ecn_doc = fixture_doc_id(*ecn_knowledge_base(), "ts_23.334");
  const auto r = api_.query(id, nlohmann::json{{"question", kEcnQuestion}, {"k", 2}, {"excluded_doc_ids", {ecn_doc}}}.dump());
  ASSERT_EQ(r.status, 200);
  EXPECT_LE(r.body.at("retrieved").size(), 2u);
  for (const auto& ref : r.body.at("references")) EXPECT_NE(ref.at("doc_id"), ecn_doc);
}

TEST_F(ApiTest, BadRequests) {
  const std::string id = new_session();
  for (const std::string body : {"", "not json", "[]", R"({"q": "x"})", R"({"question": 3})", R"({"question": "  "})",
                                 R"({"question": "ok", "k": 0})", R"({"question": "ok", "k": "2"})",
                                 R"({"question": "ok", "excluded_doc_ids": [1]})", R"({"question": "?!"})"}) {
    const auto r = api_.query(id, body);
    EXPECT_EQ(r.status, 400) << body;
    EXPECT_EQ(r.body.at("code"), "bad_request") << body;
    EXPECT_TRUE(r.body.at("message").is_string());
  }
  EXPECT_EQ(api_.query("missing", query_body("x")).status, 404);
  EXPECT_TRUE(api_.session_history(id).body.empty());
}

TEST_F(ApiTest, IndexInfoAndHealth) {
  const auto info = api_.index_info();
  ASSERT_EQ(info.status, 200);
  EXPECT_EQ(info.body.at("doc_count"), 3);
  EXPECT_EQ(info.body.at("dim"), ecn_knowledge_base()->index().dim());
  EXPECT_EQ(info.body.at("chunk_count"), ecn_knowledge_base()->chunk_count());
  EXPECT_EQ(info.body.at("embedder_kind"), "hash");
  EXPECT_EQ(api_.health().body.at("status"), "ok");
}

TEST(ApiNoIndex, IndexRoutesAnswer503) {
  ServiceConfig cfg;
  cfg.index_dir = "/nonexistent/index";
  Api api(cfg);
  const std::string id = api.create_session().body.at("session_id");
  const auto r = api.query(id, query_body("anything"));
  EXPECT_EQ(r.status, 503);
  EXPECT_EQ(r.body.at("code"), "internal");
  EXPECT_EQ(api.index_info().status, 503);
  EXPECT_EQ(api.reload().status, 500);
  EXPECT_EQ(Api(ServiceConfig{}).reload().status, 400);
}

TEST(ApiReload, PicksUpSavedIndex) {
  TempDir dir;
  ServiceConfig cfg;
  cfg.index_dir = dir / "index";
  Api api(cfg, nullptr, ecn_model());
  EXPECT_EQ(api.index_info().status, 503);
  ecn_knowledge_base()->save(cfg.index_dir);
  const auto r = api.reload();
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body.at("doc_count"), 3);
  EXPECT_EQ(api.index_info().status, 200);
  const std::string id = api.create_session().body.at("session_id");
  EXPECT_EQ(api.query(id, query_body(kEcnQuestion)).body.at("verdict"), "ok");
}

TEST(ApiPersistence, HistorySurvivesRestart) {
  TempDir dir;
  ServiceConfig cfg;
  cfg.state_dir = dir.path();
  std::string id;
  {
    Api api(cfg, ecn_knowledge_base(), ecn_model());
    id = api.create_session().body.at("session_id");
    ASSERT_EQ(api.query(id, query_body(kEcnQuestion)).status, 200);
  }
  Api restarted(cfg, ecn_knowledge_base(), ecn_model());
  EXPECT_EQ(restarted.session_history(id).body.size(), 1u);
}

class HttpTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ServiceConfig cfg;
    cfg.cors_origins = {"http://localhost:5173"};
    api_ = std::make_unique<Api>(cfg, ecn_knowledge_base(), ecn_model());
    server_ = std::make_unique<HttpServer>(*api_);
    port_ = server_->bind("127.0.0.1", 0);
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }

  void TearDown() override {
    server_->stop();
    if (thread_.joinable()) thread_.join();
  }

  std::unique_ptr<Api> api_;
  std::unique_ptr<HttpServer> server_;
  std::thread thread_;
  int port_ = 0;
  std::unique_ptr<httplib::Client> client_;
};

TEST_F(HttpTest, FullConversationOverHttp) {
  auto created = client_->Post("/v1/sessions");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  EXPECT_EQ(created->get_header_value("Content-Type"), "application/json");
  const std::string id = nlohmann::json::parse(created->body).at("session_id");

  auto answered = client_->Post("/v1/sessions/" + id + "/query", query_body(kEcnQuestion), "application/json");
  ASSERT_TRUE(answered);
  EXPECT_EQ(answered->status, 200);
  EXPECT_EQ(nlohmann::json::parse(answered->body).at("verdict"), "ok");

  auto hist = client_->Get("/v1/sessions/" + id + "/history");
  ASSERT_TRUE(hist);
  EXPECT_EQ(nlohmann::json::parse(hist->body).size(), 1u);

  auto info = client_->Get("/v1/index");
  ASSERT_TRUE(info);
  EXPECT_EQ(nlohmann::json::parse(info->body).at("doc_count"), 3);
}

TEST_F(HttpTest, ErrorsAreApiErrors) {
  auto missing = client_->Get("/v1/nowhere");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  const auto body = nlohmann::json::parse(missing->body);
  EXPECT_EQ(body.at("code"), "not_found");
  EXPECT_TRUE(body.contains("message"));

  auto bad = client_->Post("/v1/sessions/unknown/query", "{}", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 404);
}

TEST_F(HttpTest, CorsForConfiguredOrigin) {
  auto allowed = client_->Get("/v1/health", {{"Origin", "http://localhost:5173"}});
  ASSERT_TRUE(allowed);
  EXPECT_EQ(allowed->get_header_value("Access-Control-Allow-Origin"), "http://localhost:5173");

  auto other = client_->Get("/v1/health", {{"Origin", "http://evil.example"}});
  ASSERT_TRUE(other);
  EXPECT_FALSE(other->has_header("Access-Control-Allow-Origin"));

  auto preflight = client_->Options("/v1/sessions", {{"Origin", "http://localhost:5173"}});
  ASSERT_TRUE(preflight);
  EXPECT_EQ(preflight->status, 204);
  EXPECT_EQ(preflight->get_header_value("Access-Control-Allow-Methods"), "GET, POST, OPTIONS");
}

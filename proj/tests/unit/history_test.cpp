#include <gtest/gtest.h>

#include <regex>
#include <thread>

#include <nlohmann/json.hpp>

#include "telecomrag/errors.hpp"
#include "telecomrag/history.hpp"
#include "test_support.hpp"

using namespace telecomrag;
using namespace telecomrag::history;
using telecomrag::testing::read_file;
using telecomrag::testing::TempDir;

namespace {

Turn turn(const std::string& q) { return Turn{q, "answer to " + q, {"doc-a"}, Clock::now()}; }

}  // namespace

TEST(Sessions, CreateGivesFreshHexIds) {
  SessionStore store;
  const auto a = store.create_session();
  const auto b = store.create_session();
  EXPECT_NE(a.session_id, b.session_id);
  EXPECT_TRUE(std::regex_match(a.session_id, std::regex("[0-9a-f]{32}")));
  EXPECT_TRUE(a.turns.empty());
  EXPECT_EQ(store.size(), 2u);
}

TEST(Sessions, AppendPreservesOrder) {
  SessionStore store;
  const auto id = store.create_session().session_id;
  store.append_turn(id, turn("q1"));
  EXPECT_EQ(store.get(id)->turns.size(), 1u);
  for (int i = 2; i <= 5; ++i) store.append_turn(id, turn("q" + std::to_string(i)));
  const auto s = store.get(id);
  ASSERT_EQ(s->turns.size(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(s->turns[i].query, "q" + std::to_string(i + 1));
}

TEST(Sessions, UnknownIdRejected) {
  SessionStore store;
  EXPECT_THROW(store.append_turn("nope", turn("q")), UnknownSession);
  EXPECT_THROW(store.lock_conversation("nope"), UnknownSession);
  EXPECT_FALSE(store.get("nope").has_value());
  EXPECT_FALSE(store.contains("nope"));
}

TEST(Window, Examples) {
  SessionStore store;
  const auto id = store.create_session().session_id;
  EXPECT_TRUE(store.window(id).empty());
  for (int i = 1; i <= 3; ++i) store.append_turn(id, turn("q" + std::to_string(i)));
  EXPECT_EQ(store.window(id, 10).size(), 3u);
  for (int i = 4; i <= 12; ++i) store.append_turn(id, turn("q" + std::to_string(i)));
  const auto w = store.window(id);
  ASSERT_EQ(w.size(), 10u);
  EXPECT_EQ(w.front().query, "q3");
  EXPECT_EQ(w.back().query, "q12");
  EXPECT_EQ(kDefaultWindow, 10u);
}

TEST(Window, ConsistentWithFullLog) {
  SessionStore store;
  const auto id = store.create_session().session_id;
  std::vector<std::string> log;
  for (int i = 0; i < 30; ++i) {
    log.push_back("q" + std::to_string(i));
    store.append_turn(id, turn(log.back()));
    for (std::size_t cap : {1u, 4u, 10u, 50u}) {
      const auto w = store.window(id, cap);
      const std::size_t n = std::min(cap, log.size());
      ASSERT_EQ(w.size(), n);
      for (std::size_t j = 0; j < n; ++j) ASSERT_EQ(w[j].query, log[log.size() - n + j]);
    }
  }
}

TEST(Timestamps, RoundTripWithMillis) {
  const auto t = Clock::time_point(std::chrono::milliseconds(1700000000123LL));
  EXPECT_EQ(format_utc(t), "2023-11-14T22:13:20.123Z");
  EXPECT_EQ(parse_utc("2023-11-14T22:13:20.123Z"), t);
  EXPECT_THROW(parse_utc("yesterday"), InvalidParams);
}

TEST(TurnJson, Fields) {
  const Turn t{"q", "a", {"d1", "d2"}, Clock::time_point(std::chrono::seconds(0))};
  const nlohmann::json j = t;
  EXPECT_EQ(j.at("timestamp"), "1970-01-01T00:00:00.000Z");
  EXPECT_EQ(j.at("references").size(), 2u);
  const Turn back = j.get<Turn>();
  EXPECT_EQ(back.query, "q");
  EXPECT_EQ(back.references, t.references);
}

TEST(Persistence, SessionsSurviveRestart) {
  TempDir dir;
  std::string id;
  {
    SessionStore store(dir.path());
    id = store.create_session().session_id;
    store.append_turn(id, turn("persisted?"));
    store.append_turn(id, turn("yes"));
  }
  const std::string file = read_file(dir / ("sessions/" + id + ".jsonl"));
  EXPECT_EQ(std::count(file.begin(), file.end(), '\n'), 2);

  SessionStore reopened(dir.path());
  ASSERT_TRUE(reopened.contains(id));
  const auto s = reopened.get(id);
  ASSERT_EQ(s->turns.size(), 2u);
  EXPECT_EQ(s->turns[0].query, "persisted?");
  reopened.append_turn(id, turn("third"));
  EXPECT_EQ(reopened.window(id).size(), 3u);
}

TEST(Expiry, IdleSessionsArePurged) {
  SessionStore store;
  const auto old_id = store.create_session().session_id;
  EXPECT_EQ(store.purge_expired(Clock::now() + std::chrono::hours(1)), 0u);
  EXPECT_EQ(store.purge_expired(Clock::now() + kIdleExpiry + std::chrono::minutes(1)), 1u);
  EXPECT_FALSE(store.contains(old_id));
}

TEST(Concurrency, AppendsFromManyThreadsAreAllKept) {
  SessionStore store;
  std::vector<std::string> ids;
  for (int i = 0; i < 4; ++i) ids.push_back(store.create_session().session_id);
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 50; ++i) {
        const auto& id = ids[(t + i) % ids.size()];
        const auto lock = store.lock_conversation(id);
        store.append_turn(id, turn("t" + std::to_string(t)));
      }
    });
  }
  for (auto& th : threads) th.join();
  std::size_t total = 0;
  for (const auto& id : ids) total += store.get(id)->turns.size();
  EXPECT_EQ(total, 400u);
}

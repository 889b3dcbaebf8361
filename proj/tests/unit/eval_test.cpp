#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "telecomrag/eval.hpp"
#include "test_support.hpp"

using namespace telecomrag;
using namespace telecomrag::eval;

namespace {

std::vector<Qrel> parse(const std::string& s) {
  std::istringstream in(s);
  return parse_qrels(in);
}

std::size_t error_line(const std::string& s) {
  try {
    parse(s);
  } catch (const QrelsError& e) {
    return e.line();
  }
  return 999;
}

}  // namespace

TEST(Qrels, SplitsOnLastTab) {
  const auto q = parse("a query\twith tab\tdoc-1\r\n\n  second \t doc-2 \n");
  ASSERT_EQ(q.size(), 2u);
  EXPECT_EQ(q[0].query, "a query\twith tab");
  EXPECT_EQ(q[0].expected_doc_id, "doc-1");
  EXPECT_EQ(q[1].query, "second");
  EXPECT_EQ(q[1].expected_doc_id, "doc-2");
}

TEST(Qrels, ErrorsNameTheLine) {
  EXPECT_EQ(error_line("ok\td\nno tab here\n"), 2u);
  EXPECT_EQ(error_line("\n\n\tdoc\n"), 3u);
  EXPECT_EQ(error_line("query\t  \n"), 1u);
  EXPECT_EQ(error_line(""), 0u);
  EXPECT_EQ(error_line("\n \n"), 0u);
  EXPECT_THROW(parse(""), InvalidParams);
}

TEST(Summarize, RecallAndMrr) {
  std::vector<QueryOutcome> outcomes{
      {"a", "d", {}, 1}, {"b", "d", {}, 2}, {"c", "d", {}, std::nullopt}, {"e", "d", {}, 4}};
  const auto r = summarize(outcomes, 4);
  EXPECT_DOUBLE_EQ(r.recall, 0.75);
  EXPECT_DOUBLE_EQ(r.mrr, (1.0 + 0.5 + 0.25) / 4.0);
  const auto tight = summarize(outcomes, 1);
  EXPECT_DOUBLE_EQ(tight.recall, 0.25);
  EXPECT_DOUBLE_EQ(tight.mrr, 0.25);
  const auto none = summarize({}, 4);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.mrr, 0.0);
}

TEST(Summarize, MrrNeverExceedsRecall) {
  std::mt19937_64 rng(5);
  for (int run = 0; run < 200; ++run) {
    std::vector<QueryOutcome> outcomes;
    const std::size_t k = 1 + rng() % 10;
    for (std::size_t i = 0, n = 1 + rng() % 30; i < n; ++i) {
      std::optional<std::size_t> rank;
      if (rng() % 3 != 0) rank = 1 + rng() % 12;
      outcomes.push_back({"q", "d", {}, rank});
    }
    const auto r = summarize(outcomes, k);
    ASSERT_LE(r.mrr, r.recall + 1e-12);
    ASSERT_GE(r.mrr, 0.0);
    ASSERT_LE(r.recall, 1.0);
  }
}

TEST(Evaluate, ChunkTextsFindTheirOwnDocument) {
  const auto kb = telecomrag::testing::ecn_knowledge_base();
  const embed::HashEmbedder embedder(256);
  std::vector<Qrel> qrels;
  for (vindex::HnswIndex::NodeId n = 0; n < kb->index().size(); ++n) {
    const auto* chunk = kb->chunk(kb->index().chunk_id(n));
    ASSERT_NE(chunk, nullptr);
    qrels.push_back({chunk->text, chunk->doc_id});
  }
  const auto report = evaluate(qrels, *kb, embedder, 4);
  EXPECT_EQ(report.k, 4u);
  EXPECT_DOUBLE_EQ(report.recall, 1.0);
  EXPECT_DOUBLE_EQ(report.mrr, 1.0);
  ASSERT_EQ(report.per_query.size(), qrels.size());
  for (const auto& o : report.per_query) EXPECT_LE(o.hits.size(), 4u);
}

TEST(Evaluate, UnknownDocumentScoresZero) {
  const auto kb = telecomrag::testing::ecn_knowledge_base();
  const embed::HashEmbedder embedder(256);
  const auto report = evaluate({{"ECN failure", "not-a-doc"}}, *kb, embedder, 4);
  EXPECT_EQ(report.recall, 0.0);
  EXPECT_FALSE(report.per_query[0].rank.has_value());
}

TEST(Report, JsonShape) {
  const auto r = summarize({{"a", "d", {{"d#0", "d", 0.9}}, 1}, {"b", "d", {}, std::nullopt}}, 4);
  const nlohmann::json j = r;
  EXPECT_EQ(j.at("k"), 4);
  EXPECT_DOUBLE_EQ(j.at("recall").get<double>(), 0.5);
  EXPECT_EQ(j.at("per_query").size(), 2u);
  EXPECT_EQ(j.at("per_query")[0].at("rank"), 1);
  EXPECT_EQ(j.at("per_query")[1].at("rank"), nullptr);
  EXPECT_EQ(j.at("per_query")[0].at("hits")[0].at("chunk_id"), "d#0");
}

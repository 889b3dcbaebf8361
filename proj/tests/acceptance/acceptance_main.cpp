// Acceptance checks for the retrieval QA engine. Prints one PASS/FAIL line
// per criterion and exits non-zero when any of them fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "telecomrag/chain.hpp"
#include "telecomrag/corpus.hpp"
#include "telecomrag/errors.hpp"
#include "telecomrag/eval.hpp"
#include "telecomrag/knowledge_base.hpp"
#include "telecomrag/text.hpp"
#include "telecomrag/vindex.hpp"
#include "test_support.hpp"

using namespace telecomrag;
namespace ts = telecomrag::testing;

namespace {

using Clock = std::chrono::steady_clock;

struct Result {
  bool pass = true;
  std::string detail;
};

Result fail(std::string why) { return {false, std::move(why)}; }

// Reassembles a document from chunk offsets alone, independent of the overlap setting.
std::string stitch_by_offsets(const std::vector<corpus::Chunk>& chunks) {
  std::string out;
  std::size_t covered = 0;
  for (const auto& c : chunks) {
    if (c.start_char > covered) return "<gap>";
    const std::size_t skip = covered - c.start_char;
    const auto offsets = text::code_point_offsets(c.text);
    if (skip >= offsets.size()) return "<no progress>";
    out.append(c.text, offsets[skip], std::string::npos);
    covered = c.end_char;
  }
  return out;
}

Result chunking_reconstruction() {
  std::mt19937_64 rng(20240501);
  std::uniform_int_distribution<std::size_t> len(1, 20000);
  std::uniform_int_distribution<std::size_t> size(1, 5000);
  const auto t0 = Clock::now();
  for (int i = 0; i < 1000; ++i) {
    std::string s = corpus::clean_text(ts::random_text(rng, len(rng)));
    if (s.empty()) s = "x";
    const std::size_t cs = size(rng);
    const std::size_t ov = std::uniform_int_distribution<std::size_t>(0, cs - 1)(rng);
    const auto chunks = corpus::chunk_text(s, corpus::ChunkingParams{cs, ov, false}, "doc");
    if (stitch_by_offsets(chunks) != s) {
      return fail("case " + std::to_string(i) + " (size " + std::to_string(cs) + ", overlap " + std::to_string(ov) +
                  ") did not reconstruct");
    }
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (secs >= 5.0) return fail("took " + std::to_string(secs) + " s");
  return {true, "1000/1000 cases in " + std::to_string(secs) + " s"};
}

Result defaults() {
  const corpus::ChunkingParams p;
  const chain::RetrievalParams r;
  if (p.chunk_size != 4000 || p.overlap != 100) return fail("chunking defaults differ");
  if (r.k != 4 || vindex::kDefaultTopK != 4) return fail("default k differs");
  return {true, "chunk_size=4000 overlap=100 k=4"};
}

Result cosine_identities() {
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t dim = 2 + rng() % 200;
    const EmbeddingVector v = ts::random_unit(rng, dim);
    std::vector<float> neg(v.values().begin(), v.values().end());
    for (float& x : neg) x = -x;
    const EmbeddingVector anti = EmbeddingVector::from_unit(neg);
    // Orthogonal partner: remove v's component from a random vector.
    const EmbeddingVector r = ts::random_unit(rng, dim);
    const double proj = vindex::dot(v.values(), r.values());
    std::vector<float> ortho(dim);
    for (std::size_t d = 0; d < dim; ++d) ortho[d] = r.values()[d] - static_cast<float>(proj) * v.values()[d];
    const EmbeddingVector o = EmbeddingVector::normalized(ortho);
    worst = std::max({worst, std::abs(vindex::cosine(v, v) - 1.0), std::abs(vindex::cosine(v, anti) + 1.0),
                      std::abs(vindex::cosine(v, o))});
  }
  // Standard bases.
  for (std::size_t dim : {2u, 16u, 64u}) {
    for (std::size_t a = 0; a < dim; ++a) {
      for (std::size_t b = 0; b < dim; ++b) {
        std::vector<float> ea(dim, 0.0f), eb(dim, 0.0f);
        ea[a] = 1.0f;
        eb[b] = 1.0f;
        const double c = vindex::cosine(EmbeddingVector::from_unit(ea), EmbeddingVector::from_unit(eb));
        worst = std::max(worst, std::abs(c - (a == b ? 1.0 : 0.0)));
      }
    }
  }
  if (worst > 1e-6) return fail("max deviation " + std::to_string(worst));
  return {true, "max deviation " + std::to_string(worst)};
}

std::vector<std::pair<std::string, EmbeddingVector>> random_points(std::mt19937_64& rng, std::size_t n,
                                                                   std::size_t dim) {
  std::vector<std::pair<std::string, EmbeddingVector>> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pts.emplace_back("v" + std::to_string(i), ts::random_unit(rng, dim));
  return pts;
}

Result hnsw_recall() {
  std::mt19937_64 rng(1234);
  const auto t0 = Clock::now();
  const auto pts = random_points(rng, 10000, 64);
  vindex::HnswIndex index(64);
  for (const auto& [id, v] : pts) index.insert(id, v);
  double recall = 0.0;
  for (int q = 0; q < 100; ++q) {
    const EmbeddingVector query = ts::random_unit(rng, 64);
    const auto approx = index.search_knn(query, 10, 100);
    const auto exact = vindex::brute_force_knn(pts, query, 10);
    std::set<std::string> truth;
    for (const auto& h : exact) truth.insert(h.chunk_id);
    std::size_t found = 0;
    for (const auto& h : approx) found += truth.count(h.chunk_id);
    recall += static_cast<double>(found) / 10.0;
  }
  recall /= 100.0;
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();

  // Exhaustive ef on a small population must match brute force exactly.
  const auto small = random_points(rng, 500, 32);
  vindex::HnswIndex small_index(32);
  for (const auto& [id, v] : small) small_index.insert(id, v);
  std::size_t mismatches = 0;
  for (int q = 0; q < 50; ++q) {
    const EmbeddingVector query = ts::random_unit(rng, 32);
    const auto approx = small_index.search_knn(query, 10, 500);
    const auto exact = vindex::brute_force_knn(small, query, 10);
    std::set<std::string> a, b;
    for (const auto& h : approx) a.insert(h.chunk_id);
    for (const auto& h : exact) b.insert(h.chunk_id);
    if (a != b) ++mismatches;
  }

  const std::string detail = "recall@10=" + std::to_string(recall) + " in " + std::to_string(secs) +
                             " s; exhaustive mismatches=" + std::to_string(mismatches);
  if (recall < 0.95 || secs >= 60.0 || mismatches != 0) return fail(detail);
  return {true, detail};
}

Result persistence() {
  std::mt19937_64 rng(99);
  const auto pts = random_points(rng, 1000, 32);
  vindex::HnswIndex index(32);
  for (const auto& [id, v] : pts) index.insert(id, v);
  ts::TempDir dir;
  vindex::save(index, dir.path());
  const vindex::HnswIndex loaded = vindex::load(dir.path());
  for (int q = 0; q < 50; ++q) {
    const EmbeddingVector query = ts::random_unit(rng, 32);
    if (index.search_knn(query, 10) != loaded.search_knn(query, 10)) {
      return fail("query " + std::to_string(q) + " differs after reload");
    }
  }
  {
    std::fstream f(dir / "graph.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XXXX", 4);
  }
  try {
    vindex::load(dir.path());
    return fail("corrupted graph.bin loaded without error");
  } catch (const FormatError&) {
  }
  return {true, "50/50 identical; corrupted file rejected"};
}

std::shared_ptr<llm::ScriptedChatModel> ecn_model() {
  return std::make_shared<llm::ScriptedChatModel>(llm::read_script(ts::ecn_script_path().string()));
}

Result ecn_end_to_end() {
  const auto t0 = Clock::now();
  ts::TempDir dir;
  IngestOptions options;
  ingest_directory(ts::ecn_corpus_dir(), dir / "index", options);
  auto kb = std::make_shared<const KnowledgeBase>(KnowledgeBase::load(dir / "index"));
  auto embedder = std::shared_ptr<const embed::Embedder>(embed::make_embedder(kb->embedder_config()));
  auto model = ecn_model();
  const chain::QaChain qa(kb, embedder, model, model, chain::ChainConfig{});
  history::SessionStore sessions;
  const auto id = sessions.create_session().session_id;
  const auto env = qa.answer(sessions, id, ts::kEcnQuestion);
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();

  const std::string ecn_doc = ts::fixture_doc_id(*kb, "ts_23.334");
  if (env.verdict != chain::Verdict::kOk) return fail("verdict " + chain::to_string(env.verdict));
  if (env.references.size() != 1 || env.references[0].doc_id != ecn_doc) {
    std::string refs;
    for (const auto& r : env.references) refs += r.doc_id + " ";
    return fail("references: " + refs);
  }
  if (env.retrieved.empty() || env.retrieved[0].chunk.doc_id != ecn_doc) return fail("top chunk not from 23.334");
  if (secs >= 2.0) return fail("took " + std::to_string(secs) + " s");
  return {true, "references=[" + ecn_doc + "] top score " + std::to_string(env.retrieved[0].score) + " in " +
                    std::to_string(secs) + " s"};
}

Result no_documents() {
  const auto kb = ts::ecn_knowledge_base();
  const embed::HashEmbedder embedder(kb->embedder_config().dim);
  const std::string query = "quantum gravity phenomenology";

  // Pre-check: the threshold must sit above every chunk similarity for this query.
  double best = -1.0;
  const EmbeddingVector q = embedder.embed_query(query);
  for (vindex::HnswIndex::NodeId n = 0; n < kb->index().size(); ++n) {
    best = std::max(best, vindex::dot(q.values(), kb->index().vector(n)));
  }
  if (best >= 0.3) return fail("pre-check: max similarity " + std::to_string(best) + " not below 0.3");

  auto model = ecn_model();
  chain::ChainConfig cfg;
  cfg.retrieval.min_score = 0.3;
  cfg.verify.no_docs_message = "Nothing in the corpus covers this question.";
  const chain::QaChain qa(kb, std::make_shared<embed::HashEmbedder>(embedder), model, model, cfg);
  history::SessionStore sessions;
  const auto env = qa.answer(sessions, sessions.create_session().session_id, query);
  if (env.verdict != chain::Verdict::kNoDocuments) return fail("verdict " + chain::to_string(env.verdict));
  if (model->calls() != 0) return fail("model called " + std::to_string(model->calls()) + " times");
  if (env.answer != cfg.verify.no_docs_message) return fail("answer was: " + env.answer);
  return {true, "max similarity " + std::to_string(best) + ", 0 model calls"};
}

Result verifiability_fuzz() {
  const std::vector<std::string> vocab{"bearer", "session", "handover", "ECN",    "QoS",   "anchor", "gateway",
                                       "paging", "slice",   "context",  "timer",  "RRC",   "UPF",    "codec",
                                       "NAS",    "AMF",     "SMF",      "tunnel", "cell",  "beam"};
  std::mt19937_64 rng(314159);
  auto embedder = std::make_shared<embed::HashEmbedder>(128);
  for (int run = 0; run < 200; ++run) {
    IngestOptions options;
    options.chunking.chunk_size = 100 + rng() % 900;
    options.chunking.overlap = rng() % 80;
    std::vector<corpus::SourceDocument> docs;
    const int n_docs = 1 + static_cast<int>(rng() % 6);
    for (int d = 0; d < n_docs; ++d) {
      docs.push_back(*corpus::make_document("f" + std::to_string(d) + ".txt",
                                            ts::random_prose(rng, 10 + rng() % 400, vocab)));
    }
    auto kb = std::make_shared<const KnowledgeBase>(KnowledgeBase::build(docs, options, *embedder));
    std::vector<llm::ScriptEntry> script;
    for (int s = 0; s < 3; ++s) script.push_back({vocab[rng() % vocab.size()], ts::random_prose(rng, 12, vocab)});
    auto model = std::make_shared<llm::ScriptedChatModel>(script);
    chain::ChainConfig cfg;
    cfg.retrieval.k = 1 + rng() % 8;
    cfg.retrieval.min_score = std::uniform_real_distribution<double>(-0.1, 0.5)(rng);
    if (rng() % 3 == 0) cfg.retrieval.excluded_doc_ids.insert(kb->documents()[0].document.doc_id);
    const chain::QaChain qa(kb, embedder, model, model, cfg);
    history::SessionStore sessions;
    const auto id = sessions.create_session().session_id;
    for (int turn = 0; turn < 2; ++turn) {
      const auto env = qa.answer(sessions, id, ts::random_prose(rng, 1 + rng() % 10, vocab));
      std::vector<std::string> expected;
      for (const auto& r : env.retrieved) {
        if (std::find(expected.begin(), expected.end(), r.chunk.doc_id) == expected.end()) {
          expected.push_back(r.chunk.doc_id);
        }
      }
      std::vector<std::string> got;
      for (const auto& r : env.references) got.push_back(r.doc_id);
      if (got != expected) return fail("run " + std::to_string(run) + " turn " + std::to_string(turn));
    }
  }
  return {true, "200/200 runs"};
}

Result eval_sanity() {
  const auto kb = ts::ecn_knowledge_base();
  const embed::HashEmbedder embedder(kb->embedder_config().dim);
  std::vector<eval::Qrel> qrels;
  for (vindex::HnswIndex::NodeId n = 0; n < kb->index().size(); ++n) {
    const auto* c = kb->chunk(kb->index().chunk_id(n));
    qrels.push_back({c->text, c->doc_id});
  }
  const auto report = eval::evaluate(qrels, *kb, embedder, 4);
  const std::string detail = std::to_string(qrels.size()) + " queries, recall@4=" + std::to_string(report.recall) +
                             " mrr=" + std::to_string(report.mrr);
  if (report.recall != 1.0 || report.mrr != 1.0) return fail(detail);
  return {true, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Result()>>> checks{
      {"chunking reconstruction (1000 random strings, snapping off)", chunking_reconstruction},
      {"default chunking (4000, 100) and k=4", defaults},
      {"cosine identities within 1e-6", cosine_identities},
      {"HNSW recall@10 >= 0.95 on 10k x 64, exhaustive-ef equivalence", hnsw_recall},
      {"index persistence round trip, corrupted file rejected", persistence},
      {"ECN fixture end to end", ecn_end_to_end},
      {"no-documents path skips generation", no_documents},
      {"references equal deduplicated retrieved docs (200 runs)", verifiability_fuzz},
      {"eval harness recall@4 = MRR = 1.0 on chunk-text qrels", eval_sanity},
  };
  int failures = 0;
  for (const auto& [name, check] : checks) {
    const auto t0 = Clock::now();
    Result r;
    try {
      r = check();
    } catch (const std::exception& e) {
      r = fail(std::string("exception: ") + e.what());
    }
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    std::printf("[%s] %s: %s (%.0f ms)\n", r.pass ? "PASS" : "FAIL", name.c_str(), r.detail.c_str(), ms);
    std::fflush(stdout);
    if (!r.pass) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(checks.size()) - failures, checks.size());
  return failures == 0 ? 0 : 1;
}

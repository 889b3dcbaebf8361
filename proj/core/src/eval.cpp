#include "telecomrag/eval.hpp"

#include <nlohmann/json.hpp>

#include "telecomrag/chain.hpp"
#include "telecomrag/text.hpp"

namespace telecomrag::eval {

QrelsError::QrelsError(std::size_t line, const std::string& what)
    : InvalidParams(line == 0 ? what : "qrels line " + std::to_string(line) + ": " + what), line_(line) {}

std::vector<Qrel> parse_qrels(std::istream& in) {
  std::vector<Qrel> qrels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw QrelsError(line_no, "expected query<TAB>expected_doc_id");
    Qrel q{text::trim(line.substr(0, tab)), text::trim(line.substr(tab + 1))};
    if (q.query.empty()) throw QrelsError(line_no, "empty query");
    if (q.expected_doc_id.empty()) throw QrelsError(line_no, "empty expected_doc_id");
    qrels.push_back(std::move(q));
  }
  if (qrels.empty()) throw QrelsError(0, "qrels file has no judgments");
  return qrels;
}

EvalReport summarize(std::vector<QueryOutcome> outcomes, std::size_t k) {
  EvalReport report;
  report.k = k;
  double found = 0.0;
  double reciprocal = 0.0;
  for (const auto& o : outcomes) {
    if (o.rank && *o.rank <= k) {
      found += 1.0;
      reciprocal += 1.0 / static_cast<double>(*o.rank);
    }
  }
  if (!outcomes.empty()) {
    report.recall = found / static_cast<double>(outcomes.size());
    report.mrr = reciprocal / static_cast<double>(outcomes.size());
  }
  report.per_query = std::move(outcomes);
  return report;
}

EvalReport evaluate(const std::vector<Qrel>& qrels, const KnowledgeBase& kb, const embed::Embedder& embedder,
                    std::size_t k) {
  chain::RetrievalParams params;
  params.k = k;
  params.min_score = -1.0;

  std::vector<QueryOutcome> outcomes;
  outcomes.reserve(qrels.size());
  for (const auto& q : qrels) {
    QueryOutcome o{q.query, q.expected_doc_id, {}, std::nullopt};
    const auto docs = chain::retrieve(q.query, params, kb, embedder);
    for (std::size_t i = 0; i < docs.size(); ++i) {
      o.hits.push_back({docs[i].chunk.chunk_id, docs[i].chunk.doc_id, docs[i].score});
      if (!o.rank && docs[i].chunk.doc_id == q.expected_doc_id) o.rank = i + 1;
    }
    outcomes.push_back(std::move(o));
  }
  return summarize(std::move(outcomes), k);
}

void to_json(nlohmann::json& j, const EvalReport& r) {
  nlohmann::json per_query = nlohmann::json::array();
  for (const auto& o : r.per_query) {
    nlohmann::json hits = nlohmann::json::array();
    for (const auto& h : o.hits) hits.push_back({{"chunk_id", h.chunk_id}, {"doc_id", h.doc_id}, {"score", h.score}});
    per_query.push_back({{"query", o.query},
                         {"expected", o.expected},
                         {"hits", std::move(hits)},
                         {"rank", o.rank ? nlohmann::json(*o.rank) : nlohmann::json(nullptr)}});
  }
  j = nlohmann::json{{"k", r.k}, {"recall", r.recall}, {"mrr", r.mrr}, {"per_query", std::move(per_query)}};
}

}  // namespace telecomrag::eval

#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "telecomrag/embedder.hpp"
#include "telecomrag/errors.hpp"
#include "telecomrag/knowledge_base.hpp"

namespace telecomrag::eval {

struct Qrel {
  std::string query;
  std::string expected_doc_id;
};

class QrelsError : public InvalidParams {
 public:
  QrelsError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Parses `query<TAB>expected_doc_id` lines; blank lines are skipped.
/// Throws QrelsError naming the first malformed line, or line 0 when the
/// input holds no judgments.
std::vector<Qrel> parse_qrels(std::istream& in);

struct EvalHit {
  std::string chunk_id;
  std::string doc_id;
  double score = 0.0;
};

struct QueryOutcome {
  std::string query;
  std::string expected;
  std::vector<EvalHit> hits;
  std::optional<std::size_t> rank;  // 1-based rank of the first hit from the expected doc
};

struct EvalReport {
  std::size_t k = 0;
  double recall = 0.0;  // fraction of queries with the expected doc in the top k
  double mrr = 0.0;     // mean of 1/rank, 0 when absent from the top k
  std::vector<QueryOutcome> per_query;
};

/// Ranks chunks for every query with no score threshold or exclusions.
EvalReport evaluate(const std::vector<Qrel>& qrels, const KnowledgeBase& kb, const embed::Embedder& embedder,
                    std::size_t k);

/// Recall@k and MRR from 1-based ranks (nullopt: not retrieved).
EvalReport summarize(std::vector<QueryOutcome> outcomes, std::size_t k);

void to_json(nlohmann::json& j, const EvalReport& r);

}  // namespace telecomrag::eval

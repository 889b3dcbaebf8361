#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "telecomrag/corpus.hpp"
#include "telecomrag/embedder.hpp"
#include "telecomrag/history.hpp"
#include "telecomrag/knowledge_base.hpp"
#include "telecomrag/llm.hpp"

namespace telecomrag::chain {

/// Hits fetched per requested result before score and exclusion filtering.
inline constexpr std::size_t kOverfetchFactor = 4;
/// Character budget for the whole composed LLM input.
inline constexpr std::size_t kInputCharBudget = 96000;

inline constexpr std::string_view kCondenseInstruction =
    "Rewrite the user's new question as a single self-contained question, resolving pronouns and references "
    "using the conversation so far. Output only the rewritten question.";

inline constexpr std::string_view kRolePlayPrompt =
    "Assume you are a 3GPP standard expert and need to provide a very comprehensive answer to a "
    "non-experienced trainee.";

inline constexpr std::string_view kGroundingInstruction =
    "Answer ONLY from the numbered CONTEXT blocks. If the context is insufficient, say so.";

inline constexpr std::string_view kDefaultNoDocsMessage =
    "No documents in the knowledge base are related to your query.";

inline constexpr std::string_view kDefaultRefusalMessage =
    "The generated answer was withheld because it did not pass the output checks.";

struct RetrievalParams {
  std::size_t k = vindex::kDefaultTopK;
  double min_score = 0.15;
  std::set<std::string> excluded_doc_ids;

  void validate() const;
};

struct PersonaConfig {
  std::string system_prompt = std::string(kRolePlayPrompt) + "\n" + std::string(kGroundingInstruction);
};

struct VerifyConfig {
  std::string no_docs_message{kDefaultNoDocsMessage};
  std::string refusal_message{kDefaultRefusalMessage};
  std::vector<std::string> banned_keywords;
};

struct RetrievedDoc {
  corpus::Chunk chunk;
  double score = 0.0;
  std::string source_title;
  std::optional<std::string> spec_label;
};

struct Reference {
  std::string doc_id;
  std::string source_title;
  std::optional<std::string> spec_label;

  friend bool operator==(const Reference&, const Reference&) = default;
};

enum class Verdict { kOk, kNoDocuments, kFiltered };

std::string to_string(Verdict v);

struct AnswerEnvelope {
  std::string answer;
  std::vector<Reference> references;
  std::vector<RetrievedDoc> retrieved;
  Verdict verdict = Verdict::kOk;
  std::string standalone_query;
};

void to_json(nlohmann::json& j, const RetrievalParams& p);
void from_json(const nlohmann::json& j, RetrievalParams& p);
void to_json(nlohmann::json& j, const VerifyConfig& v);
void from_json(const nlohmann::json& j, VerifyConfig& v);
void to_json(nlohmann::json& j, const RetrievedDoc& d);
void to_json(nlohmann::json& j, const Reference& r);
void to_json(nlohmann::json& j, const AnswerEnvelope& e);

/// [system: instruction, user: "Q: ..\nA: ..\n...New question: {q}"].
std::vector<llm::ChatMessage> condensation_messages(std::string_view new_query,
                                                    const std::vector<history::Turn>& hist);

/// Rewrites `new_query` into a standalone question. Empty history returns it
/// unchanged without calling the model; an empty or SCRIPT-MISS reply falls
/// back to it. Provider failures also fall back unless `strict`.
std::string condense_query(std::string_view new_query, const std::vector<history::Turn>& hist,
                           const llm::ChatModel& model, bool strict = false);

/// Semantic search for `standalone`: fetches kOverfetchFactor * k hits, drops
/// those under min_score or from excluded documents, keeps the best k.
std::vector<RetrievedDoc> retrieve(std::string_view standalone, const RetrievalParams& params,
                                   const KnowledgeBase& kb, const embed::Embedder& embedder);

/// [system: persona + numbered CONTEXT blocks, history as user/assistant
/// pairs, user: standalone]. Over budget, history goes oldest first, then
/// context blocks are cut from the last one backwards.
std::vector<llm::ChatMessage> compose_llm_input(std::string_view standalone, const std::vector<RetrievedDoc>& docs,
                                                const std::vector<history::Turn>& hist,
                                                const PersonaConfig& persona,
                                                std::size_t char_budget = kInputCharBudget);

std::pair<std::string, Verdict> verify_output(std::string_view tentative, const std::vector<RetrievedDoc>& docs,
                                              const VerifyConfig& cfg);

/// Distinct source documents of `docs` in first-appearance order.
std::vector<Reference> collect_references(const std::vector<RetrievedDoc>& docs);

struct ChainConfig {
  RetrievalParams retrieval;
  PersonaConfig persona;
  VerifyConfig verify;
  std::size_t history_window = history::kDefaultWindow;
  bool strict_condense = false;
};

/// The online stage. Holds a knowledge-base snapshot for its lifetime.
class QaChain {
 public:
  QaChain(std::shared_ptr<const KnowledgeBase> kb, std::shared_ptr<const embed::Embedder> embedder,
          std::shared_ptr<const llm::ChatModel> condenser, std::shared_ptr<const llm::ChatModel> generator,
          ChainConfig cfg);

  /// condense -> retrieve -> compose -> generate -> verify, then appends the
  /// turn to the session. Nothing is appended when a step throws.
  /// Throws UnknownSession, InvalidParams (blank query), ProviderError.
  AnswerEnvelope answer(history::SessionStore& sessions, const std::string& session_id, const std::string& new_query,
                        const std::optional<RetrievalParams>& retrieval_override = std::nullopt) const;

  const KnowledgeBase& knowledge_base() const noexcept { return *kb_; }
  const ChainConfig& config() const noexcept { return cfg_; }

 private:
  std::shared_ptr<const KnowledgeBase> kb_;
  std::shared_ptr<const embed::Embedder> embedder_;
  std::shared_ptr<const llm::ChatModel> condenser_;
  std::shared_ptr<const llm::ChatModel> generator_;
  ChainConfig cfg_;
};

}  // namespace telecomrag::chain

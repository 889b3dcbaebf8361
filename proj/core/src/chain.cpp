#include "telecomrag/chain.hpp"

#include <algorithm>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "telecomrag/errors.hpp"
#include "telecomrag/text.hpp"

namespace telecomrag::chain {
namespace {

nlohmann::json optional_string(const std::optional<std::string>& s) {
  return s ? nlohmann::json(*s) : nlohmann::json(nullptr);
}

std::string context_block(std::size_t number, const RetrievedDoc& d) {
  std::string block = "[" + std::to_string(number) + "] source=" + d.source_title;
  if (d.spec_label) block += " (" + *d.spec_label + ")";
  block += " chunk=" + d.chunk.chunk_id + "\n" + d.chunk.text;
  return block;
}

std::vector<llm::ChatMessage> build_messages(std::string_view standalone, const std::vector<RetrievedDoc>& docs,
                                             const std::vector<history::Turn>& hist, const PersonaConfig& persona) {
  std::string system = persona.system_prompt + "\n\nCONTEXT:";
  for (std::size_t i = 0; i < docs.size(); ++i) system += "\n\n" + context_block(i + 1, docs[i]);

  std::vector<llm::ChatMessage> messages;
  messages.push_back({llm::Role::kSystem, std::move(system)});
  for (const auto& turn : hist) {
    messages.push_back({llm::Role::kUser, turn.query});
    if (!turn.answer.empty()) messages.push_back({llm::Role::kAssistant, turn.answer});
  }
  messages.push_back({llm::Role::kUser, std::string(standalone)});
  return messages;
}

std::size_t total_chars(const std::vector<llm::ChatMessage>& messages) {
  std::size_t n = 0;
  for (const auto& m : messages) n += text::code_point_count(m.content);
  return n;
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kOk:
      return "ok";
    case Verdict::kNoDocuments:
      return "no_documents";
    case Verdict::kFiltered:
      return "filtered";
  }
  return "ok";
}

void RetrievalParams::validate() const {
  if (k < 1) throw InvalidParams("k must be >= 1");
  if (!(min_score >= -1.0 && min_score <= 1.0)) throw InvalidParams("min_score must be in [-1, 1]");
}

void to_json(nlohmann::json& j, const RetrievalParams& p) {
  j = nlohmann::json{{"k", p.k}, {"min_score", p.min_score}, {"excluded_doc_ids", p.excluded_doc_ids}};
}

void from_json(const nlohmann::json& j, RetrievalParams& p) {
  RetrievalParams d;
  p.k = j.value("k", d.k);
  p.min_score = j.value("min_score", d.min_score);
  p.excluded_doc_ids = j.value("excluded_doc_ids", d.excluded_doc_ids);
}

void to_json(nlohmann::json& j, const VerifyConfig& v) {
  j = nlohmann::json{{"no_docs_message", v.no_docs_message},
                     {"refusal_message", v.refusal_message},
                     {"banned_keywords", v.banned_keywords}};
}

void from_json(const nlohmann::json& j, VerifyConfig& v) {
  VerifyConfig d;
  v.no_docs_message = j.value("no_docs_message", d.no_docs_message);
  v.refusal_message = j.value("refusal_message", d.refusal_message);
  v.banned_keywords = j.value("banned_keywords", d.banned_keywords);
}

void to_json(nlohmann::json& j, const RetrievedDoc& d) {
  j = nlohmann::json{{"chunk_id", d.chunk.chunk_id},
                     {"doc_id", d.chunk.doc_id},
                     {"index", d.chunk.index},
                     {"start_char", d.chunk.start_char},
                     {"end_char", d.chunk.end_char},
                     {"text", d.chunk.text},
                     {"score", d.score},
                     {"source_title", d.source_title},
                     {"spec_label", optional_string(d.spec_label)}};
}

void to_json(nlohmann::json& j, const Reference& r) {
  j = nlohmann::json{
      {"doc_id", r.doc_id}, {"source_title", r.source_title}, {"spec_label", optional_string(r.spec_label)}};
}

void to_json(nlohmann::json& j, const AnswerEnvelope& e) {
  j = nlohmann::json{{"answer", e.answer},
                     {"references", e.references},
                     {"retrieved", e.retrieved},
                     {"verdict", to_string(e.verdict)},
                     {"standalone_query", e.standalone_query}};
}

std::vector<llm::ChatMessage> condensation_messages(std::string_view new_query,
                                                    const std::vector<history::Turn>& hist) {
  std::string convo;
  for (const auto& turn : hist) {
    convo += "Q: " + turn.query + "\n";
    convo += "A: " + turn.answer + "\n";
  }
  convo += "New question: ";
  convo += new_query;
  return {{llm::Role::kSystem, std::string(kCondenseInstruction)}, {llm::Role::kUser, std::move(convo)}};
}

std::string condense_query(std::string_view new_query, const std::vector<history::Turn>& hist,
                           const llm::ChatModel& model, bool strict) {
  if (text::trim(new_query).empty()) throw InvalidParams("query is empty");
  if (hist.empty()) return std::string(new_query);
  std::string reply;
  try {
    reply = text::trim(model.complete(condensation_messages(new_query, hist)));
  } catch (const Error&) {
    if (strict) throw;
    return std::string(new_query);
  }
  if (reply.empty() || reply == llm::kScriptMiss) return std::string(new_query);
  return reply;
}

std::vector<RetrievedDoc> retrieve(std::string_view standalone, const RetrievalParams& params,
                                   const KnowledgeBase& kb, const embed::Embedder& embedder) {
  params.validate();
  const EmbeddingVector q = embedder.embed_query(standalone);
  const auto hits = kb.index().search_knn(q, params.k * kOverfetchFactor);

  std::vector<RetrievedDoc> out;
  for (const auto& hit : hits) {
    if (out.size() == params.k) break;
    if (hit.score < params.min_score) break;  // hits are sorted by score
    const corpus::Chunk* chunk = kb.chunk(hit.chunk_id);
    if (chunk == nullptr) throw FormatError("index references unknown chunk " + hit.chunk_id);
    if (params.excluded_doc_ids.count(chunk->doc_id) != 0) continue;
    RetrievedDoc doc{*chunk, hit.score, chunk->doc_id, std::nullopt};
    if (const auto* entry = kb.document(chunk->doc_id)) {
      doc.source_title = entry->document.title;
      doc.spec_label = entry->document.spec_label;
    }
    out.push_back(std::move(doc));
  }
  return out;
}

std::vector<llm::ChatMessage> compose_llm_input(std::string_view standalone, const std::vector<RetrievedDoc>& docs,
                                                const std::vector<history::Turn>& hist,
                                                const PersonaConfig& persona, std::size_t char_budget) {
  std::vector<RetrievedDoc> kept_docs = docs;
  std::vector<history::Turn> kept_hist = hist;
  while (true) {
    auto messages = build_messages(standalone, kept_docs, kept_hist, persona);
    const std::size_t total = total_chars(messages);
    if (total <= char_budget) return messages;
    if (!kept_hist.empty()) {
      kept_hist.erase(kept_hist.begin());
      continue;
    }
    if (kept_docs.empty()) return messages;
    const std::size_t excess = total - char_budget;
    auto& last = kept_docs.back().chunk.text;
    const std::size_t len = text::code_point_count(last);
    if (len > excess) {
      last = std::string(text::truncate_chars(last, len - excess));
    } else {
      kept_docs.pop_back();
    }
  }
}

std::pair<std::string, Verdict> verify_output(std::string_view tentative, const std::vector<RetrievedDoc>& docs,
                                              const VerifyConfig& cfg) {
  if (docs.empty()) return {cfg.no_docs_message, Verdict::kNoDocuments};
  const std::string lowered = text::to_lower(tentative);
  for (const auto& keyword : cfg.banned_keywords) {
    if (keyword.empty()) continue;
    if (lowered.find(text::to_lower(keyword)) != std::string::npos) return {cfg.refusal_message, Verdict::kFiltered};
  }
  return {std::string(tentative), Verdict::kOk};
}

std::vector<Reference> collect_references(const std::vector<RetrievedDoc>& docs) {
  std::vector<Reference> refs;
  std::unordered_set<std::string> seen;
  for (const auto& d : docs) {
    if (seen.insert(d.chunk.doc_id).second) refs.push_back({d.chunk.doc_id, d.source_title, d.spec_label});
  }
  return refs;
}

QaChain::QaChain(std::shared_ptr<const KnowledgeBase> kb, std::shared_ptr<const embed::Embedder> embedder,
                 std::shared_ptr<const llm::ChatModel> condenser, std::shared_ptr<const llm::ChatModel> generator,
                 ChainConfig cfg)
    : kb_(std::move(kb)),
      embedder_(std::move(embedder)),
      condenser_(std::move(condenser)),
      generator_(std::move(generator)),
      cfg_(std::move(cfg)) {
  if (!kb_ || !embedder_ || !condenser_ || !generator_) throw InvalidParams("QaChain needs all components");
  cfg_.retrieval.validate();
}

AnswerEnvelope QaChain::answer(history::SessionStore& sessions, const std::string& session_id,
                               const std::string& new_query,
                               const std::optional<RetrievalParams>& retrieval_override) const {
  if (text::trim(new_query).empty()) throw InvalidParams("question is empty");
  const RetrievalParams& params = retrieval_override ? *retrieval_override : cfg_.retrieval;

  const history::ConversationLock conversation = sessions.lock_conversation(session_id);
  const std::vector<history::Turn> hist = sessions.window(session_id, cfg_.history_window);

  AnswerEnvelope env;
  env.standalone_query = condense_query(new_query, hist, *condenser_, cfg_.strict_condense);
  env.retrieved = retrieve(env.standalone_query, params, *kb_, *embedder_);

  std::string tentative;
  if (!env.retrieved.empty()) {
    tentative = generator_->complete(compose_llm_input(env.standalone_query, env.retrieved, hist, cfg_.persona));
  }
  std::tie(env.answer, env.verdict) = verify_output(tentative, env.retrieved, cfg_.verify);
  env.references = collect_references(env.retrieved);

  history::Turn turn;
  turn.query = new_query;
  turn.answer = env.answer;
  for (const auto& r : env.references) turn.references.push_back(r.doc_id);
  turn.timestamp = history::Clock::now();
  sessions.append_turn(session_id, std::move(turn));
  return env;
}

}  // namespace telecomrag::chain

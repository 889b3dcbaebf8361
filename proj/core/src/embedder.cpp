#include "telecomrag/embedder.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <nlohmann/json.hpp>

#include "telecomrag/errors.hpp"
#include "telecomrag/http_client.hpp"
#include "telecomrag/text.hpp"

namespace telecomrag::embed {
namespace {

void require_non_blank(const std::vector<std::string>& texts) {
  if (texts.empty()) throw EmptyInput("embedding input list is empty");
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (text::trim(texts[i]).empty()) throw EmptyInput("embedding input " + std::to_string(i) + " is blank");
  }
}

}  // namespace

std::string to_string(EmbedderKind kind) { return kind == EmbedderKind::kHash ? "hash" : "remote"; }

EmbedderKind embedder_kind_from_string(std::string_view s) {
  if (s == "hash") return EmbedderKind::kHash;
  if (s == "remote") return EmbedderKind::kRemote;
  throw InvalidParams("unknown embedder kind: " + std::string(s));
}

void EmbedderConfig::validate() const {
  if (kind == EmbedderKind::kHash && dim < 8) throw InvalidParams("hash embedder dim must be >= 8");
  if (kind == EmbedderKind::kRemote && base_url.empty()) throw InvalidParams("remote embedder needs base_url");
  if (kind == EmbedderKind::kRemote && model_name.empty()) throw InvalidParams("remote embedder needs model_name");
  if (batch_size == 0) throw InvalidParams("batch_size must be positive");
  if (max_retries < 0) throw InvalidParams("max_retries must be non-negative");
}

void to_json(nlohmann::json& j, const EmbedderConfig& c) {
  j = nlohmann::json{{"kind", to_string(c.kind)},
                     {"dim", c.dim},
                     {"base_url", c.base_url},
                     {"model_name", c.model_name},
                     {"api_key_env", c.api_key_env},
                     {"batch_size", c.batch_size},
                     {"timeout_ms", c.timeout.count()},
                     {"max_retries", c.max_retries}};
}

void from_json(const nlohmann::json& j, EmbedderConfig& c) {
  EmbedderConfig d;
  c.kind = embedder_kind_from_string(j.value("kind", to_string(d.kind)));
  c.dim = j.value("dim", d.dim);
  c.base_url = j.value("base_url", d.base_url);
  c.model_name = j.value("model_name", d.model_name);
  c.api_key_env = j.value("api_key_env", d.api_key_env);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<long long>(d.timeout.count())));
  c.max_retries = j.value("max_retries", d.max_retries);
  c.backoff_base =
      std::chrono::milliseconds(j.value("backoff_base_ms", static_cast<long long>(d.backoff_base.count())));
  c.max_input_chars = j.value("max_input_chars", d.max_input_chars);
}

EmbeddingVector hash_embed(std::string_view input, std::size_t dim) {
  if (dim < 8) throw InvalidParams("hash embedding dim must be >= 8");
  const std::vector<std::string> tokens = text::alnum_tokens(text::to_lower(input));
  if (tokens.empty()) throw NoTokens();

  std::vector<double> acc(dim, 0.0);
  auto add = [&](std::string_view feature) {
    const std::uint64_t h = text::fnv1a64(feature);
    acc[h % dim] += (h >> 63) == 0 ? 1.0 : -1.0;
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    add(tokens[i]);
    if (i + 1 < tokens.size()) add(tokens[i] + " " + tokens[i + 1]);
  }
  if (std::all_of(acc.begin(), acc.end(), [](double v) { return v == 0.0; })) {
    // Every feature cancelled out across buckets.
    throw NoTokens();
  }
  return EmbeddingVector::normalized(std::span<const double>(acc));
}

EmbeddingVector Embedder::embed_query(std::string_view text) const {
  return embed_batch({std::string(text)}).front();
}

HashEmbedder::HashEmbedder(std::size_t dim) : dim_(dim) {
  if (dim_ < 8) throw InvalidParams("hash embedder dim must be >= 8");
}

std::vector<EmbeddingVector> HashEmbedder::embed_batch(const std::vector<std::string>& texts) const {
  require_non_blank(texts);
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(hash_embed(t, dim_));
  return out;
}

RemoteEmbedder::RemoteEmbedder(EmbedderConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.kind = EmbedderKind::kRemote;
  cfg_.validate();
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(const std::vector<std::string>& texts) const {
  require_non_blank(texts);
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t begin = 0; begin < texts.size(); begin += cfg_.batch_size) {
    const std::size_t end = std::min(texts.size(), begin + cfg_.batch_size);
    std::vector<std::string> sub(texts.begin() + static_cast<std::ptrdiff_t>(begin),
                                 texts.begin() + static_cast<std::ptrdiff_t>(end));
    for (auto& v : embed_sub_batch(sub)) out.push_back(std::move(v));
  }
  return out;
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_sub_batch(const std::vector<std::string>& texts) const {
  nlohmann::json input = nlohmann::json::array();
  for (const auto& t : texts) {
    if (text::code_point_count(t) > cfg_.max_input_chars) {
      spdlog::warn("embedding input truncated to {} characters", cfg_.max_input_chars);
      input.push_back(std::string(text::truncate_chars(t, cfg_.max_input_chars)));
    } else {
      input.push_back(t);
    }
  }
  const nlohmann::json request{{"model", cfg_.model_name}, {"input", std::move(input)}};
  const std::string body = http::post_json(cfg_.base_url, "/embeddings", request.dump(),
                                           http::env_value(cfg_.api_key_env),
                                           {cfg_.timeout, cfg_.max_retries, cfg_.backoff_base});

  nlohmann::json response;
  try {
    response = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw ProviderError(200, body.substr(0, 256));
  }
  const auto data = response.find("data");
  if (data == response.end() || !data->is_array() || data->size() != texts.size()) {
    throw ProviderError(200, "embeddings response has wrong 'data' shape");
  }

  std::vector<std::optional<EmbeddingVector>> slots(texts.size());
  for (std::size_t pos = 0; pos < data->size(); ++pos) {
    const auto& item = (*data)[pos];
    const std::size_t idx = item.value("index", pos);
    if (idx >= slots.size() || slots[idx]) throw ProviderError(200, "embeddings response has bad index");
    const auto raw = item.at("embedding").get<std::vector<double>>();
    std::size_t expected = 0;
    if (!dim_.compare_exchange_strong(expected, raw.size()) && expected != raw.size()) {
      throw DimMismatch(expected, raw.size());
    }
    slots[idx] = EmbeddingVector::normalized(std::span<const double>(raw));
  }
  std::vector<EmbeddingVector> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& cfg) {
  cfg.validate();
  if (cfg.kind == EmbedderKind::kHash) return std::make_unique<HashEmbedder>(cfg.dim);
  return std::make_unique<RemoteEmbedder>(cfg);
}

std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts, const EmbedderConfig& cfg) {
  return make_embedder(cfg)->embed_batch(texts);
}

EmbeddingVector embed_query(std::string_view text, const EmbedderConfig& cfg) {
  return make_embedder(cfg)->embed_query(text);
}

}  // namespace telecomrag::embed

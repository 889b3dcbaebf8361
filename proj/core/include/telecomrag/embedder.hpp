#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "telecomrag/embedding.hpp"

namespace telecomrag::embed {

enum class EmbedderKind { kHash, kRemote };

std::string to_string(EmbedderKind kind);
EmbedderKind embedder_kind_from_string(std::string_view s);

struct EmbedderConfig {
  EmbedderKind kind = EmbedderKind::kHash;
  std::size_t dim = 256;  // hash only
  std::string base_url;
  std::string model_name = "text-embedding-ada-002";
  std::string api_key_env = "TELECOMRAG_EMBED_API_KEY";
  std::size_t batch_size = 128;
  std::chrono::milliseconds timeout{30000};
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{500};
  // Inputs longer than this many characters are truncated before sending.
  std::size_t max_input_chars = 8 * 4000;

  void validate() const;
};

void to_json(nlohmann::json& j, const EmbedderConfig& c);
void from_json(const nlohmann::json& j, EmbedderConfig& c);

/// Feature-hashed bag of unigrams and adjacent bigrams over lowercased
/// alphanumeric tokens. Each feature's FNV-1a 64 hash picks bucket h % dim and
/// sign (bit 63 clear: +1, set: -1). The accumulated vector is L2-normalized.
/// Throws InvalidParams for dim < 8, NoTokens when the text has no tokens.
EmbeddingVector hash_embed(std::string_view text, std::size_t dim);

/// The shared encoder for documents and queries.
class Embedder {
 public:
  virtual ~Embedder() = default;

  /// One unit vector per input, order preserved. Throws EmptyInput when the
  /// list is empty or any text is blank.
  virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) const = 0;

  EmbeddingVector embed_query(std::string_view text) const;

  virtual EmbedderKind kind() const noexcept = 0;
};

class HashEmbedder final : public Embedder {
 public:
  explicit HashEmbedder(std::size_t dim);

  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) const override;
  EmbedderKind kind() const noexcept override { return EmbedderKind::kHash; }
  std::size_t dim() const noexcept { return dim_; }

 private:
  std::size_t dim_;
};

/// Client for an OpenAI-style `POST {base_url}/embeddings` endpoint.
class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(EmbedderConfig cfg);

  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) const override;
  EmbedderKind kind() const noexcept override { return EmbedderKind::kRemote; }

  /// Dimension observed in the first response, 0 before any call.
  std::size_t observed_dim() const noexcept { return dim_.load(); }

 private:
  std::vector<EmbeddingVector> embed_sub_batch(const std::vector<std::string>& texts) const;

  EmbedderConfig cfg_;
  mutable std::atomic<std::size_t> dim_{0};
};

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& cfg);

std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts, const EmbedderConfig& cfg);
EmbeddingVector embed_query(std::string_view text, const EmbedderConfig& cfg);

}  // namespace telecomrag::embed

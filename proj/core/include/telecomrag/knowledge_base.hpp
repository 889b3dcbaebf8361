#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "telecomrag/corpus.hpp"
#include "telecomrag/embedder.hpp"
#include "telecomrag/vindex.hpp"

namespace telecomrag {

struct IngestOptions {
  corpus::ChunkingParams chunking;
  embed::EmbedderConfig embedder;
  vindex::HnswParams hnsw;
  std::set<std::string> extensions = corpus::default_extensions();
};

struct IngestReport {
  std::size_t documents = 0;
  std::size_t chunks = 0;
  std::vector<corpus::LoadError> errors;
};

/// Immutable snapshot served to queries: the vector index plus the chunk and
/// document tables it refers to.
class KnowledgeBase {
 public:
  /// Chunks, embeds and indexes `docs` in order.
  static KnowledgeBase build(const std::vector<corpus::SourceDocument>& docs, const IngestOptions& options,
                             const embed::Embedder& embedder);

  /// Reads an index directory written by save() / ingest_directory().
  static KnowledgeBase load(const std::filesystem::path& dir);

  /// Writes manifest.jsonl, embedder.json and the index files into `dir`.
  void save(const std::filesystem::path& dir) const;

  const vindex::HnswIndex& index() const noexcept { return index_; }
  const embed::EmbedderConfig& embedder_config() const noexcept { return embedder_; }
  const std::vector<corpus::ManifestEntry>& documents() const noexcept { return documents_; }

  const corpus::Chunk* chunk(const std::string& chunk_id) const;
  const corpus::ManifestEntry* document(const std::string& doc_id) const;

  std::size_t doc_count() const noexcept { return documents_.size(); }
  std::size_t chunk_count() const noexcept { return index_.size(); }

 private:
  KnowledgeBase(vindex::HnswIndex index, std::vector<corpus::Chunk> chunks,
                std::vector<corpus::ManifestEntry> documents, embed::EmbedderConfig embedder);

  vindex::HnswIndex index_;
  std::vector<corpus::Chunk> chunks_;  // node order
  std::unordered_map<std::string, std::size_t> chunk_pos_;
  std::vector<corpus::ManifestEntry> documents_;
  std::unordered_map<std::string, std::size_t> doc_pos_;
  embed::EmbedderConfig embedder_;
};

/// Offline stage end to end: load, clean, chunk, embed, index, persist.
/// Per-file load failures are reported, not thrown.
IngestReport ingest_directory(const std::filesystem::path& corpus_root, const std::filesystem::path& out_dir,
                              const IngestOptions& options);

}  // namespace telecomrag

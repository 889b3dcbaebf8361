#include "telecomrag/knowledge_base.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "telecomrag/errors.hpp"

namespace fs = std::filesystem;

namespace telecomrag {
namespace {

constexpr const char* kManifestFile = "manifest.jsonl";
constexpr const char* kEmbedderFile = "embedder.json";

}  // namespace

KnowledgeBase::KnowledgeBase(vindex::HnswIndex index, std::vector<corpus::Chunk> chunks,
                             std::vector<corpus::ManifestEntry> documents, embed::EmbedderConfig embedder)
    : index_(std::move(index)),
      chunks_(std::move(chunks)),
      documents_(std::move(documents)),
      embedder_(std::move(embedder)) {
  for (std::size_t i = 0; i < chunks_.size(); ++i) chunk_pos_.emplace(chunks_[i].chunk_id, i);
  for (std::size_t i = 0; i < documents_.size(); ++i) doc_pos_.emplace(documents_[i].document.doc_id, i);
}

KnowledgeBase KnowledgeBase::build(const std::vector<corpus::SourceDocument>& docs, const IngestOptions& options,
                                   const embed::Embedder& embedder) {
  options.chunking.validate();
  std::vector<corpus::Chunk> chunks;
  std::vector<corpus::ManifestEntry> manifest;
  for (const auto& doc : docs) {
    auto doc_chunks = corpus::chunk_text(doc.text, options.chunking, doc.doc_id);
    corpus::ManifestEntry entry{doc, doc_chunks.size()};
    entry.document.text.clear();
    manifest.push_back(std::move(entry));
    for (auto& c : doc_chunks) chunks.push_back(std::move(c));
  }

  std::vector<std::string> texts;
  texts.reserve(chunks.size());
  for (const auto& c : chunks) texts.push_back(c.text);
  std::vector<EmbeddingVector> vectors;
  if (!texts.empty()) vectors = embedder.embed_batch(texts);

  const std::size_t dim = vectors.empty() ? std::max<std::size_t>(options.embedder.dim, 1) : vectors.front().dim();
  vindex::HnswIndex index(dim, options.hnsw);
  for (std::size_t i = 0; i < chunks.size(); ++i) index.insert(chunks[i].chunk_id, vectors[i]);

  embed::EmbedderConfig recorded = options.embedder;
  if (recorded.kind == embed::EmbedderKind::kRemote) recorded.dim = dim;
  return KnowledgeBase(std::move(index), std::move(chunks), std::move(manifest), std::move(recorded));
}

void KnowledgeBase::save(const fs::path& dir) const {
  vindex::save(index_, dir, chunks_);
  corpus::write_manifest(dir / kManifestFile, documents_);
  std::ofstream out(dir / kEmbedderFile, std::ios::trunc);
  out << nlohmann::json(embedder_).dump(2) << '\n';
  if (!out) throw IoError("cannot write " + (dir / kEmbedderFile).string());
}

KnowledgeBase KnowledgeBase::load(const fs::path& dir) {
  vindex::HnswIndex index = vindex::load(dir);
  std::vector<corpus::Chunk> chunks = vindex::load_chunks(dir);
  std::vector<corpus::ManifestEntry> manifest;
  if (fs::exists(dir / kManifestFile)) manifest = corpus::read_manifest(dir / kManifestFile);

  embed::EmbedderConfig embedder;
  if (fs::exists(dir / kEmbedderFile)) {
    std::ifstream in(dir / kEmbedderFile);
    try {
      embedder = nlohmann::json::parse(in).get<embed::EmbedderConfig>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string(kEmbedderFile) + ": " + e.what());
    }
  } else {
    embedder.dim = index.dim();
  }
  if (embedder.kind == embed::EmbedderKind::kHash && embedder.dim != index.dim()) {
    throw DimMismatch(index.dim(), embedder.dim);
  }
  return KnowledgeBase(std::move(index), std::move(chunks), std::move(manifest), std::move(embedder));
}

const corpus::Chunk* KnowledgeBase::chunk(const std::string& chunk_id) const {
  const auto it = chunk_pos_.find(chunk_id);
  return it == chunk_pos_.end() ? nullptr : &chunks_[it->second];
}

const corpus::ManifestEntry* KnowledgeBase::document(const std::string& doc_id) const {
  const auto it = doc_pos_.find(doc_id);
  return it == doc_pos_.end() ? nullptr : &documents_[it->second];
}

IngestReport ingest_directory(const fs::path& corpus_root, const fs::path& out_dir, const IngestOptions& options) {
  options.chunking.validate();
  const auto embedder = embed::make_embedder(options.embedder);
  corpus::LoadResult loaded = corpus::load_directory(corpus_root, options.extensions);
  const KnowledgeBase kb = KnowledgeBase::build(loaded.documents, options, *embedder);
  kb.save(out_dir);
  return {kb.doc_count(), kb.chunk_count(), std::move(loaded.errors)};
}

}  // namespace telecomrag

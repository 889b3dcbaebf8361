#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace telecomrag::corpus {

inline constexpr std::size_t kDefaultChunkSize = 4000;
inline constexpr std::size_t kDefaultOverlap = 100;
/// Maximum backward distance (in characters) a chunk end may move to land on whitespace.
inline constexpr std::size_t kSnapWindow = 32;

struct SourceDocument {
  std::string doc_id;
  std::filesystem::path path;
  std::string title;
  std::optional<std::string> spec_label;
  std::string content_hash;
  std::size_t char_count = 0;
  // Cleaned text. Held in memory for chunking; not part of the manifest.
  std::string text;
};

/// A retrieval unit. Offsets are code-point offsets into the cleaned text.
struct Chunk {
  std::string chunk_id;
  std::string doc_id;
  std::size_t index = 0;
  std::size_t start_char = 0;
  std::size_t end_char = 0;
  std::string text;
};

struct ChunkingParams {
  std::size_t chunk_size = kDefaultChunkSize;
  std::size_t overlap = kDefaultOverlap;
  // Move chunk ends back to the nearest whitespace within kSnapWindow chars.
  bool snap_to_whitespace = true;

  /// Throws InvalidParams unless 0 < chunk_size and overlap < chunk_size.
  void validate() const;
};

enum class LoadErrorKind { kDecodeError, kReadError, kEmptyAfterCleaning };

struct LoadError {
  std::filesystem::path path;
  LoadErrorKind kind;
  std::string message;
};

struct LoadResult {
  std::vector<SourceDocument> documents;
  std::vector<LoadError> errors;
};

const std::set<std::string>& default_extensions();

/// Recursively loads every file under `root` whose extension (case-insensitive)
/// is in `extensions`. Per-file failures are collected, never thrown.
/// Throws RootNotFound when `root` is not a directory.
LoadResult load_directory(const std::filesystem::path& root,
                          const std::set<std::string>& extensions = default_extensions());

/// Builds a SourceDocument from raw file content. Returns nullopt when the
/// cleaned text is empty.
std::optional<SourceDocument> make_document(const std::filesystem::path& path, std::string_view raw);

/// NFC, LF line endings, one space per horizontal whitespace run, no trailing
/// spaces on lines, at most two consecutive blank lines, trimmed. Idempotent.
std::string clean_text(std::string_view raw);

/// Fixed-stride windows over `cleaned`: each chunk starts `overlap` chars
/// before the previous chunk's end.
std::vector<Chunk> chunk_text(std::string_view cleaned, const ChunkingParams& params,
                              std::string_view doc_id = {});

std::string make_doc_id(std::string_view file_stem, std::string_view content_hash);
std::optional<std::string> parse_spec_label(std::string_view file_name);

struct ManifestEntry {
  SourceDocument document;
  std::size_t num_chunks = 0;
};

void write_manifest(const std::filesystem::path& file, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& file);

void to_json(nlohmann::json& j, const Chunk& c);
void from_json(const nlohmann::json& j, Chunk& c);
void to_json(nlohmann::json& j, const ManifestEntry& e);
void from_json(const nlohmann::json& j, ManifestEntry& e);

}  // namespace telecomrag::corpus

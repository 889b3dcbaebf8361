#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "telecomrag/corpus.hpp"
#include "telecomrag/embedding.hpp"

namespace telecomrag::vindex {

inline constexpr int kFormatVersion = 1;
/// Number of retrieved chunks placed in the LLM input by default.
inline constexpr std::size_t kDefaultTopK = 4;

struct HnswParams {
  std::size_t m = 16;
  std::size_t m0 = 32;
  std::size_t ef_construction = 200;
  std::size_t ef_search = 100;
  double ml = 1.0 / std::log(16.0);
  std::uint64_t seed = 42;

  /// Defaults for a given `m`: m0 = 2m, ml = 1/ln(m).
  static HnswParams with_m(std::size_t m);

  void validate() const;
};

struct SearchHit {
  std::string chunk_id;
  double score = 0.0;  // cosine similarity in [-1, 1]

  friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

/// Total order used for every result list: descending score, then ascending chunk_id.
bool hit_before(const SearchHit& a, const SearchHit& b) noexcept;

/// Inner product accumulated in double.
double dot(std::span<const float> a, std::span<const float> b) noexcept;

/// Cosine similarity of two unit vectors, clamped to [-1, 1]. Throws DimMismatch.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

/// Exact top-k by cosine. Throws DimMismatch on inconsistent dims.
std::vector<SearchHit> brute_force_knn(std::span<const std::pair<std::string, EmbeddingVector>> vectors,
                                       const EmbeddingVector& query, std::size_t k);

/// Hierarchical navigable small world graph over unit vectors.
///
/// Nodes are numbered in insertion order. Layer 0 holds every node; a node
/// drawn at level L also appears in layers 1..L. Edges are kept symmetric at
/// every layer, with degree <= m0 at layer 0 and <= m above.
///
/// search_knn is safe to call concurrently; insert is not.
class HnswIndex {
 public:
  using NodeId = std::uint32_t;

  explicit HnswIndex(std::size_t dim, HnswParams params = {});

  /// Throws DimMismatch or DuplicateId.
  void insert(std::string chunk_id, const EmbeddingVector& v);

  /// Best-first layered search with a candidate pool of max(ef or ef_search, k).
  /// Returns min(k, size()) hits ordered by hit_before.
  std::vector<SearchHit> search_knn(const EmbeddingVector& q, std::size_t k,
                                    std::optional<std::size_t> ef = std::nullopt) const;

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  const HnswParams& params() const noexcept { return params_; }

  std::optional<NodeId> entry_point() const noexcept { return entry_point_; }
  int max_level() const noexcept { return max_level_; }

  const std::string& chunk_id(NodeId node) const { return ids_.at(node); }
  std::optional<NodeId> find(const std::string& chunk_id) const;
  std::span<const float> vector(NodeId node) const;
  int level(NodeId node) const { return static_cast<int>(links_.at(node).size()) - 1; }
  const std::vector<NodeId>& neighbors(NodeId node, int layer) const;

  /// Reassembles an index from persisted parts. Validates structure and
  /// throws FormatError on any inconsistency.
  static HnswIndex from_parts(std::size_t dim, HnswParams params, std::vector<std::string> ids,
                              std::vector<float> vectors, std::vector<std::vector<std::vector<NodeId>>> links,
                              std::optional<NodeId> entry_point, std::uint64_t rng_state_draws);

  /// Number of level draws consumed so far; persisted so a reloaded index
  /// continues the same random stream.
  std::uint64_t level_draws() const noexcept { return level_draws_; }

 private:
  struct Candidate {
    double sim;
    NodeId id;
  };

  double sim_to(std::span<const float> q, NodeId node) const noexcept;
  int draw_level();
  std::vector<Candidate> search_layer(std::span<const float> q, std::vector<Candidate> entry, std::size_t ef,
                                      int layer) const;
  std::vector<NodeId> select_neighbors(std::span<const float> base, std::vector<Candidate> candidates,
                                       std::size_t cap) const;
  void connect(NodeId a, NodeId b, int layer);
  void shrink(NodeId node, int layer, std::size_t cap);

  std::size_t dim_;
  HnswParams params_;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, NodeId> by_id_;
  std::vector<float> vectors_;
  // links_[node][layer] -> neighbor ids
  std::vector<std::vector<std::vector<NodeId>>> links_;
  std::optional<NodeId> entry_point_;
  int max_level_ = -1;
  std::mt19937_64 rng_;
  std::uint64_t level_draws_ = 0;
};

/// Writes index.meta.json, vectors.bin, graph.bin and chunks.jsonl into `dir`.
/// `chunks` supplies the chunk records for chunks.jsonl; nodes without a
/// matching record are written with their chunk_id only.
void save(const HnswIndex& index, const std::filesystem::path& dir, std::span<const corpus::Chunk> chunks = {});

/// Loads an index written by save(). Nothing is returned unless every file
/// validates. Throws IoError, FormatError or VersionMismatch.
HnswIndex load(const std::filesystem::path& dir);

/// As load(), additionally rejecting an index whose dim differs (DimMismatch).
HnswIndex load(const std::filesystem::path& dir, std::size_t expected_dim);

/// Chunk records from chunks.jsonl in node order.
std::vector<corpus::Chunk> load_chunks(const std::filesystem::path& dir);

}  // namespace telecomrag::vindex

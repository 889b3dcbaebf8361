#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace telecomrag {

/// Unit-normalized dense vector. Every instance reachable from the index or
/// a query is normalized by construction.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;

  /// L2-normalizes `raw`. Throws Error on an empty, zero or non-finite input.
  static EmbeddingVector normalized(std::vector<float> raw);
  static EmbeddingVector normalized(std::span<const double> raw);

  /// Wraps values already known to be unit length (e.g. read back from disk).
  static EmbeddingVector from_unit(std::vector<float> values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const float> values() const noexcept { return values_; }
  double norm() const noexcept;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  explicit EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {}
  std::vector<float> values_;
};

}  // namespace telecomrag

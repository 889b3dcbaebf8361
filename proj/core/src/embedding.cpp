#include "telecomrag/embedding.hpp"

#include <cmath>

#include "telecomrag/errors.hpp"

namespace telecomrag {

EmbeddingVector EmbeddingVector::normalized(std::vector<float> raw) {
  std::vector<double> wide(raw.begin(), raw.end());
  return normalized(std::span<const double>(wide));
}

EmbeddingVector EmbeddingVector::normalized(std::span<const double> raw) {
  if (raw.empty()) throw Error("cannot normalize an empty vector");
  double sq = 0.0;
  for (double v : raw) {
    if (!std::isfinite(v)) throw Error("embedding contains a non-finite value");
    sq += v * v;
  }
  if (sq == 0.0) throw Error("cannot normalize a zero vector");
  const double inv = 1.0 / std::sqrt(sq);
  std::vector<float> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = static_cast<float>(raw[i] * inv);
  return EmbeddingVector(std::move(out));
}

EmbeddingVector EmbeddingVector::from_unit(std::vector<float> values) {
  for (float v : values) {
    if (!std::isfinite(v)) throw Error("embedding contains a non-finite value");
  }
  return EmbeddingVector(std::move(values));
}

double EmbeddingVector::norm() const noexcept {
  double sq = 0.0;
  for (float v : values_) sq += static_cast<double>(v) * v;
  return std::sqrt(sq);
}

}  // namespace telecomrag

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "telecomrag/embedding.hpp"
#include "telecomrag/vindex.hpp"

using telecomrag::EmbeddingVector;
using telecomrag::vindex::HnswIndex;

namespace {

std::vector<EmbeddingVector> random_units(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  std::vector<EmbeddingVector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<float> v(dim);
    for (float& x : v) x = g(rng);
    out.push_back(EmbeddingVector::normalized(std::move(v)));
  }
  return out;
}

HnswIndex build(const std::vector<EmbeddingVector>& points) {
  HnswIndex index(points.front().dim());
  for (std::size_t i = 0; i < points.size(); ++i) index.insert("c" + std::to_string(i), points[i]);
  return index;
}

}  // namespace

static void BM_HnswBuild(benchmark::State& state) {
  const auto points = random_units(static_cast<std::size_t>(state.range(0)), 64, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build(points));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HnswBuild)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

static void BM_HnswSearch(benchmark::State& state) {
  static const auto points = random_units(10000, 64, 2);
  static const HnswIndex index = build(points);
  const auto queries = random_units(256, 64, 3);
  const auto ef = static_cast<std::size_t>(state.range(0));
  std::size_t q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.search_knn(queries[q++ % queries.size()], 10, ef));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_HnswSearch)->Arg(16)->Arg(100)->Arg(400);

static void BM_BruteForce(benchmark::State& state) {
  const auto points = random_units(10000, 64, 2);
  std::vector<std::pair<std::string, EmbeddingVector>> labelled;
  for (std::size_t i = 0; i < points.size(); ++i) labelled.emplace_back("c" + std::to_string(i), points[i]);
  const auto queries = random_units(64, 64, 3);
  std::size_t q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(telecomrag::vindex::brute_force_knn(labelled, queries[q++ % queries.size()], 10));
  }
}
BENCHMARK(BM_BruteForce);

BENCHMARK_MAIN();

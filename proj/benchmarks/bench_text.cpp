#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "telecomrag/corpus.hpp"
#include "telecomrag/embedder.hpp"

namespace {

std::string prose(std::size_t words, std::uint64_t seed) {
  static const std::vector<std::string> vocab{"bearer", "session", "handover", "ECN",   "QoS",  "anchor",
                                              "gateway", "paging", "the",      "of",    "and",  "IMS-AGW",
                                              "context", "timer",  "RRC",      "codec", "UPF.", "indication"};
  std::mt19937_64 rng(seed);
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    out += vocab[rng() % vocab.size()];
    out += (i % 17 == 16) ? '\n' : ' ';
  }
  return out;
}

}  // namespace

static void BM_HashEmbed(benchmark::State& state) {
  const std::string text = prose(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(telecomrag::embed::hash_embed(text, 256));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_HashEmbed)->Arg(16)->Arg(600);

static void BM_CleanText(benchmark::State& state) {
  const std::string raw = prose(20000, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(telecomrag::corpus::clean_text(raw));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(raw.size()));
}
BENCHMARK(BM_CleanText);

static void BM_ChunkText(benchmark::State& state) {
  const std::string cleaned = telecomrag::corpus::clean_text(prose(20000, 3));
  telecomrag::corpus::ChunkingParams params;
  params.snap_to_whitespace = state.range(0) != 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(telecomrag::corpus::chunk_text(cleaned, params, "doc"));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(cleaned.size()));
}
BENCHMARK(BM_ChunkText)->Arg(0)->Arg(1);

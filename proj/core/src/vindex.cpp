#include "telecomrag/vindex.hpp"

#include <algorithm>
#include <queue>

#include "telecomrag/errors.hpp"

namespace telecomrag::vindex {
namespace {

// Levels are stored as u8 on disk.
constexpr int kMaxLevel = 32;

class VisitTable {
 public:
  void reset(std::size_t n) {
    if (marks_.size() < n) marks_.resize(n, 0);
    if (++epoch_ == 0) {
      std::fill(marks_.begin(), marks_.end(), 0);
      epoch_ = 1;
    }
  }
  // True the first time `id` is seen since the last reset.
  bool visit(std::uint32_t id) {
    if (marks_[id] == epoch_) return false;
    marks_[id] = epoch_;
    return true;
  }

 private:
  std::vector<std::uint32_t> marks_;
  std::uint32_t epoch_ = 0;
};

thread_local VisitTable visit_table;

}  // namespace

HnswParams HnswParams::with_m(std::size_t m) {
  HnswParams p;
  p.m = m;
  p.m0 = 2 * m;
  p.ml = 1.0 / std::log(static_cast<double>(m));
  return p;
}

void HnswParams::validate() const {
  if (m < 2) throw InvalidParams("m must be >= 2");
  if (m0 < m) throw InvalidParams("m0 must be >= m");
  if (ef_construction < m) throw InvalidParams("ef_construction must be >= m");
  if (ef_search < 1) throw InvalidParams("ef_search must be >= 1");
  if (!(ml > 0.0) || !std::isfinite(ml)) throw InvalidParams("ml must be a positive finite number");
  if (m0 > 0xFFFF) throw InvalidParams("m0 must fit in 16 bits");
}

bool hit_before(const SearchHit& a, const SearchHit& b) noexcept {
  if (a.score != b.score) return a.score > b.score;
  return a.chunk_id < b.chunk_id;
}

double dot(std::span<const float> a, std::span<const float> b) noexcept {
  double acc = 0.0;
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) throw DimMismatch(a.dim(), b.dim());
  return std::clamp(dot(a.values(), b.values()), -1.0, 1.0);
}

std::vector<SearchHit> brute_force_knn(std::span<const std::pair<std::string, EmbeddingVector>> vectors,
                                       const EmbeddingVector& query, std::size_t k) {
  std::vector<SearchHit> hits;
  hits.reserve(vectors.size());
  for (const auto& [id, v] : vectors) hits.push_back({id, cosine(v, query)});
  const std::size_t keep = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), hit_before);
  hits.resize(keep);
  return hits;
}

HnswIndex::HnswIndex(std::size_t dim, HnswParams params) : dim_(dim), params_(params), rng_(params.seed) {
  if (dim_ == 0) throw InvalidParams("index dim must be positive");
  params_.validate();
}

std::optional<HnswIndex::NodeId> HnswIndex::find(const std::string& chunk_id) const {
  const auto it = by_id_.find(chunk_id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::span<const float> HnswIndex::vector(NodeId node) const {
  if (node >= ids_.size()) throw std::out_of_range("node id out of range");
  return {vectors_.data() + static_cast<std::size_t>(node) * dim_, dim_};
}

const std::vector<HnswIndex::NodeId>& HnswIndex::neighbors(NodeId node, int layer) const {
  return links_.at(node).at(static_cast<std::size_t>(layer));
}

double HnswIndex::sim_to(std::span<const float> q, NodeId node) const noexcept {
  return dot(q, {vectors_.data() + static_cast<std::size_t>(node) * dim_, dim_});
}

int HnswIndex::draw_level() {
  // u in (0, 1] from the top 53 bits; independent of the standard library's
  // distribution implementations.
  const double u = static_cast<double>((rng_() >> 11) + 1) * 0x1.0p-53;
  ++level_draws_;
  const double level = std::floor(-std::log(u) * params_.ml);
  return static_cast<int>(std::min<double>(level, kMaxLevel));
}

std::vector<HnswIndex::Candidate> HnswIndex::search_layer(std::span<const float> q, std::vector<Candidate> entry,
                                                          std::size_t ef, int layer) const {
  auto better = [](const Candidate& a, const Candidate& b) {
    return a.sim > b.sim || (a.sim == b.sim && a.id < b.id);
  };
  auto best_on_top = [&](const Candidate& a, const Candidate& b) { return better(b, a); };
  auto worst_on_top = [&](const Candidate& a, const Candidate& b) { return better(a, b); };

  std::priority_queue<Candidate, std::vector<Candidate>, decltype(best_on_top)> frontier(best_on_top);
  std::priority_queue<Candidate, std::vector<Candidate>, decltype(worst_on_top)> found(worst_on_top);

  VisitTable& visited = visit_table;
  visited.reset(ids_.size());
  for (const auto& c : entry) {
    if (!visited.visit(c.id)) continue;
    frontier.push(c);
    found.push(c);
    if (found.size() > ef) found.pop();
  }

  while (!frontier.empty()) {
    const Candidate current = frontier.top();
    if (found.size() >= ef && better(found.top(), current)) break;
    frontier.pop();
    for (NodeId nb : links_[current.id][static_cast<std::size_t>(layer)]) {
      if (!visited.visit(nb)) continue;
      const Candidate c{sim_to(q, nb), nb};
      if (found.size() < ef || better(c, found.top())) {
        frontier.push(c);
        found.push(c);
        if (found.size() > ef) found.pop();
      }
    }
  }

  std::vector<Candidate> out(found.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = found.top();
    found.pop();
  }
  return out;  // best first
}

std::vector<HnswIndex::NodeId> HnswIndex::select_neighbors(std::span<const float> base,
                                                           std::vector<Candidate> candidates,
                                                           std::size_t cap) const {
  (void)base;
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return a.sim > b.sim || (a.sim == b.sim && a.id < b.id);
  });
  std::vector<NodeId> selected;
  std::vector<NodeId> discarded;
  selected.reserve(cap);
  for (const auto& c : candidates) {
    if (selected.size() >= cap) break;
    // Keep c only if it is closer to the base point than to every neighbor already kept.
    const auto cv = vector(c.id);
    const bool diverse = std::all_of(selected.begin(), selected.end(),
                                     [&](NodeId s) { return dot(cv, vector(s)) < c.sim; });
    (diverse ? selected : discarded).push_back(c.id);
  }
  for (std::size_t i = 0; i < discarded.size() && selected.size() < cap; ++i) selected.push_back(discarded[i]);
  return selected;
}

void HnswIndex::connect(NodeId a, NodeId b, int layer) {
  links_[a][static_cast<std::size_t>(layer)].push_back(b);
  links_[b][static_cast<std::size_t>(layer)].push_back(a);
}

void HnswIndex::shrink(NodeId node, int layer, std::size_t cap) {
  auto& list = links_[node][static_cast<std::size_t>(layer)];
  if (list.size() <= cap) return;
  const auto base = vector(node);
  std::vector<Candidate> cands;
  cands.reserve(list.size());
  for (NodeId nb : list) cands.push_back({dot(base, vector(nb)), nb});
  std::vector<NodeId> kept = select_neighbors(base, std::move(cands), cap);

  // Drop the reverse edge of every pruned neighbor so adjacency stays symmetric.
  for (NodeId nb : list) {
    if (std::find(kept.begin(), kept.end(), nb) != kept.end()) continue;
    auto& back = links_[nb][static_cast<std::size_t>(layer)];
    back.erase(std::remove(back.begin(), back.end(), node), back.end());
  }
  list = std::move(kept);
}

void HnswIndex::insert(std::string chunk_id, const EmbeddingVector& v) {
  if (v.dim() != dim_) throw DimMismatch(dim_, v.dim());
  if (by_id_.count(chunk_id) != 0) throw DuplicateId(chunk_id);
  if (ids_.size() >= std::numeric_limits<NodeId>::max()) throw Error("index is full");

  const int level = draw_level();
  const auto id = static_cast<NodeId>(ids_.size());
  by_id_.emplace(chunk_id, id);
  ids_.push_back(std::move(chunk_id));
  vectors_.insert(vectors_.end(), v.values().begin(), v.values().end());
  links_.emplace_back(static_cast<std::size_t>(level) + 1);

  if (!entry_point_) {
    entry_point_ = id;
    max_level_ = level;
    return;
  }

  const auto q = vector(id);
  std::vector<Candidate> eps{{sim_to(q, *entry_point_), *entry_point_}};
  for (int layer = max_level_; layer > level; --layer) {
    eps = search_layer(q, std::move(eps), 1, layer);
  }
  for (int layer = std::min(level, max_level_); layer >= 0; --layer) {
    std::vector<Candidate> found = search_layer(q, eps, params_.ef_construction, layer);
    const std::size_t cap = layer == 0 ? params_.m0 : params_.m;
    for (NodeId nb : select_neighbors(q, found, cap)) {
      connect(id, nb, layer);
      shrink(nb, layer, cap);
    }
    eps = std::move(found);
  }

  if (level > max_level_) {
    max_level_ = level;
    entry_point_ = id;
  }
}

std::vector<SearchHit> HnswIndex::search_knn(const EmbeddingVector& q, std::size_t k,
                                             std::optional<std::size_t> ef) const {
  if (q.dim() != dim_) throw DimMismatch(dim_, q.dim());
  if (!entry_point_ || k == 0) return {};

  const auto qv = q.values();
  std::vector<Candidate> eps{{sim_to(qv, *entry_point_), *entry_point_}};
  for (int layer = max_level_; layer > 0; --layer) {
    eps = search_layer(qv, std::move(eps), 1, layer);
  }
  const std::size_t pool = std::max(ef.value_or(params_.ef_search), k);
  const std::vector<Candidate> found = search_layer(qv, std::move(eps), pool, 0);

  std::vector<SearchHit> hits;
  hits.reserve(found.size());
  for (const auto& c : found) hits.push_back({ids_[c.id], std::clamp(c.sim, -1.0, 1.0)});
  std::sort(hits.begin(), hits.end(), hit_before);
  if (hits.size() > k) hits.resize(k);
  return hits;
}

HnswIndex HnswIndex::from_parts(std::size_t dim, HnswParams params, std::vector<std::string> ids,
                                std::vector<float> vectors, std::vector<std::vector<std::vector<NodeId>>> links,
                                std::optional<NodeId> entry_point, std::uint64_t level_draws) {
  HnswIndex index(dim, params);
  const std::size_t n = ids.size();
  if (vectors.size() != n * dim) throw FormatError("vector payload does not match count x dim");
  if (links.size() != n) throw FormatError("graph node count does not match id count");
  if (n == 0 && entry_point) throw FormatError("entry point set on empty index");
  if (n > 0 && (!entry_point || *entry_point >= n)) throw FormatError("entry point out of range");

  int max_level = -1;
  for (std::size_t node = 0; node < n; ++node) {
    if (links[node].empty()) throw FormatError("node without layer 0");
    max_level = std::max(max_level, static_cast<int>(links[node].size()) - 1);
    for (std::size_t layer = 0; layer < links[node].size(); ++layer) {
      const std::size_t cap = layer == 0 ? params.m0 : params.m;
      if (links[node][layer].size() > cap) throw FormatError("node degree exceeds bound");
      for (NodeId nb : links[node][layer]) {
        if (nb >= n || nb == node) throw FormatError("neighbor id out of range");
        if (links[nb].size() <= layer) throw FormatError("neighbor missing from layer");
      }
    }
  }
  if (entry_point && static_cast<int>(links[*entry_point].size()) - 1 != max_level) {
    throw FormatError("entry point is not on the top layer");
  }

  for (std::size_t node = 0; node < n; ++node) {
    if (!index.by_id_.emplace(ids[node], static_cast<NodeId>(node)).second) {
      throw FormatError("duplicate chunk id: " + ids[node]);
    }
  }
  index.ids_ = std::move(ids);
  index.vectors_ = std::move(vectors);
  index.links_ = std::move(links);
  index.entry_point_ = entry_point;
  index.max_level_ = max_level;
  index.rng_.discard(level_draws);
  index.level_draws_ = level_draws;
  return index;
}

}  // namespace telecomrag::vindex

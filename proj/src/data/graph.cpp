#include "pkef/data/graph.hpp"

#include <random>
#include <string>

#include "pkef/errors.hpp"

namespace pkef {
namespace {

void require_behavior(const BehaviorDataset& ds, std::size_t k) {
  if (k >= ds.behavior_count()) {
    throw ConfigError("behavior index " + std::to_string(k) + " out of range (K = " +
                      std::to_string(ds.behavior_count()) + ")");
  }
}

// Uniform draw from {v in [0, n) : accept(v)} given the accepted count.
template <typename Accept>
Index draw_item(std::mt19937_64& rng, std::size_t n, std::size_t accepted, Accept accept) {
  if (accepted * 2 >= n) {
    std::uniform_int_distribution<Index> pick(0, static_cast<Index>(n - 1));
    for (;;) {
      const Index v = pick(rng);
      if (accept(v)) return v;
    }
  }
  std::uniform_int_distribution<std::size_t> pick(0, accepted - 1);
  std::size_t target = pick(rng);
  for (Index v = 0; v < n; ++v) {
    if (accept(v) && target-- == 0) return v;
  }
  throw UsageError("draw_item: accepted count is inconsistent");
}

}  // namespace

NormalizedAdjacency build_normalized_adjacency(const BehaviorDataset& ds, std::size_t behavior) {
  require_behavior(ds, behavior);
  const auto& pos = ds.behaviors[behavior];
  const std::size_t n = ds.node_count();
  const std::size_t users = ds.user_count;
  std::vector<double> degree(n, 1.0);  // self-loop
  for (const auto& p : pos.pairs()) {
    degree[p.user] += 1.0;
    degree[users + p.item] += 1.0;
  }
  std::vector<Triplet> entries;
  entries.reserve(n + 2 * pos.size());
  for (std::size_t i = 0; i < n; ++i) entries.push_back({i, i, 1.0 / degree[i]});
  for (const auto& p : pos.pairs()) {
    const std::size_t u = p.user, v = users + p.item;
    entries.push_back({u, v, 1.0 / degree[u]});
    entries.push_back({v, u, 1.0 / degree[v]});
  }
  return {behavior, SparseMatrix::from_triplets(n, n, std::move(entries))};
}

std::vector<NormalizedAdjacency> build_all_adjacencies(const BehaviorDataset& ds) {
  std::vector<NormalizedAdjacency> out;
  for (std::size_t k = 0; k < ds.behavior_count(); ++k) out.push_back(build_normalized_adjacency(ds, k));
  return out;
}

TrainTriples sample_bpr_triples(const BehaviorDataset& ds, std::size_t behavior,
                                std::uint64_t seed) {
  require_behavior(ds, behavior);
  const auto& pos = ds.behaviors[behavior];
  std::mt19937_64 rng(seed);
  TrainTriples out{behavior, {}};
  out.triples.reserve(pos.size());
  std::size_t skipped_users = 0;
  for (Index u = 0; u < ds.user_count; ++u) {
    const auto items = pos.items_of(u);
    if (items.empty()) continue;
    const std::size_t free = ds.item_count - items.size();
    if (free == 0) {
      ++skipped_users;
      continue;
    }
    for (Index s : items) {
      const Index t = draw_item(rng, ds.item_count, free,
                                [&](Index v) { return !pos.contains(u, v); });
      out.triples.push_back({u, s, t});
    }
  }
  if (skipped_users > 0) {
    log_warning(pos.name() + ": " + std::to_string(skipped_users) +
                " user(s) interacted with every item; no negatives to sample");
  }
  return out;
}

UniqueLossTriples build_unique_triples(const BehaviorDataset& ds, std::size_t source,
                                       std::size_t guide, std::uint64_t seed) {
  require_behavior(ds, source);
  require_behavior(ds, guide);
  if (source == guide) throw ConfigError("unique triples need two distinct behaviors");
  const auto& src = ds.behaviors[source];
  const auto& gd = ds.behaviors[guide];
  std::mt19937_64 rng(seed);
  UniqueLossTriples out{source, guide, {}};
  for (Index u = 0; u < ds.user_count; ++u) {
    const auto items = src.items_of(u);
    if (items.empty()) continue;
    std::size_t guide_only = 0;  // in O_k+ but not in O_k'+
    for (Index v : gd.items_of(u)) guide_only += src.contains(u, v) ? 0 : 1;
    for (Index s : items) {
      if (gd.contains(u, s)) continue;
      const std::size_t candidates = ds.item_count - guide_only - 1;
      if (candidates == 0) continue;
      const Index t = draw_item(rng, ds.item_count, candidates, [&](Index v) {
        return v != s && (!gd.contains(u, v) || src.contains(u, v));
      });
      out.triples.push_back({u, s, t});
    }
  }
  return out;
}

}  // namespace pkef

#include "pkef/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "pkef/errors.hpp"
#include "pkef/model/model.hpp"

namespace pkef {

std::size_t rank_items(std::span<const double> scores, std::span<const Index> exclude,
                       Index target) {
  if (target >= scores.size()) throw ProtocolError("held-out item outside the score range");
  if (std::binary_search(exclude.begin(), exclude.end(), target)) {
    throw ProtocolError("held-out item " + std::to_string(target) + " is excluded from ranking");
  }
  const double s = scores[target];
  std::size_t rank = 1;
  auto ex = exclude.begin();
  for (Index v = 0; v < scores.size(); ++v) {
    while (ex != exclude.end() && *ex < v) ++ex;
    if (ex != exclude.end() && *ex == v) continue;
    if (scores[v] > s || (scores[v] == s && v < target)) ++rank;
  }
  return rank;
}

HitNdcg hr_ndcg(std::span<const std::size_t> ranks, std::size_t k) {
  if (ranks.empty()) throw ConfigError("hr_ndcg: no ranks");
  HitNdcg m;
  for (std::size_t r : ranks) {
    if (r == 0) throw ConfigError("hr_ndcg: ranks are 1-based");
    if (r > k) continue;
    m.hr += 1.0;
    m.ndcg += 1.0 / std::log2(static_cast<double>(r) + 1.0);
  }
  m.hr /= static_cast<double>(ranks.size());
  m.ndcg /= static_cast<double>(ranks.size());
  return m;
}

nlohmann::json MetricReport::to_json() const {
  return {{"k", k}, {"hr", hr}, {"ndcg", ndcg}, {"users", users}, {"cold_users", cold_users}};
}

MetricReport summarize(std::span<const RankingResult> rankings, std::size_t k) {
  MetricReport r;
  r.k = k;
  r.users = rankings.size();
  if (rankings.empty()) return r;
  std::vector<std::size_t> ranks;
  for (const auto& x : rankings) {
    ranks.push_back(x.rank);
    r.cold_users += x.cold ? 1 : 0;
  }
  const HitNdcg m = hr_ndcg(ranks, k);
  r.hr = m.hr;
  r.ndcg = m.ndcg;
  return r;
}

Evaluation evaluate_pairs(const Model& model, std::span<const NormalizedAdjacency> adjs,
                          const BehaviorDataset& ds, std::span<const Interaction> pairs,
                          std::size_t k) {
  const FrozenOutputs frozen = model.freeze(adjs);
  const std::size_t target = ds.behavior_count() - 1;
  std::vector<Index> all_items(ds.item_count);
  std::iota(all_items.begin(), all_items.end(), Index{0});

  // Users with several held-out items are scored once.
  std::map<Index, std::vector<double>> cache;
  Evaluation e;
  for (const auto& p : pairs) {
    auto it = cache.find(p.user);
    if (it == cache.end()) {
      it = cache.emplace(p.user, model.score_items(frozen, p.user, all_items, target)).first;
    }
    const auto exclude = ds.target().items_of(p.user);
    RankingResult r;
    r.user = p.user;
    r.item = p.item;
    r.rank = rank_items(it->second, exclude, p.item);
    r.candidates = ds.item_count - exclude.size();
    r.cold = exclude.empty();
    e.rankings.push_back(r);
    if (cache.size() > 64) cache.erase(cache.begin());
  }
  e.report = summarize(e.rankings, k);
  return e;
}

Evaluation evaluate_model(const Model& model, std::span<const NormalizedAdjacency> adjs,
                          const BehaviorDataset& ds, std::size_t k) {
  return evaluate_pairs(model, adjs, ds, ds.test, k);
}

}  // namespace pkef

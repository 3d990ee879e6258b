#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pkef/data/dataset.hpp"
#include "pkef/data/graph.hpp"

namespace pkef {

class Model;

struct RankingResult {
  Index user = 0;
  Index item = 0;
  std::size_t rank = 0;        // 1-based
  std::size_t candidates = 0;  // items not excluded
  bool cold = false;           // no target-behavior training history
};

// 1 + number of candidate items scoring strictly above the target, plus
// equally scored candidates with a lower index. `exclude` must be sorted.
// Throws ProtocolError when the target itself is excluded.
std::size_t rank_items(std::span<const double> scores, std::span<const Index> exclude,
                       Index target);

struct HitNdcg {
  double hr = 0.0;
  double ndcg = 0.0;
};

// Throws ConfigError on an empty rank list.
HitNdcg hr_ndcg(std::span<const std::size_t> ranks, std::size_t k);

struct MetricReport {
  std::size_t k = 10;
  double hr = 0.0;
  double ndcg = 0.0;
  std::size_t users = 0;
  std::size_t cold_users = 0;

  nlohmann::json to_json() const;
};

struct Evaluation {
  MetricReport report;
  std::vector<RankingResult> rankings;
};

// Full ranking of the target behavior's cascade score for every test pair,
// excluding the user's target-behavior training positives.
Evaluation evaluate_model(const Model& model, std::span<const NormalizedAdjacency> adjs,
                          const BehaviorDataset& ds, std::size_t k);

// Same, over arbitrary held-out pairs (e.g. a validation split).
Evaluation evaluate_pairs(const Model& model, std::span<const NormalizedAdjacency> adjs,
                          const BehaviorDataset& ds, std::span<const Interaction> pairs,
                          std::size_t k);

MetricReport summarize(std::span<const RankingResult> rankings, std::size_t k);

}  // namespace pkef

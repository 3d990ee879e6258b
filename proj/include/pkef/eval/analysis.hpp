#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pkef/data/dataset.hpp"
#include "pkef/data/graph.hpp"
#include "pkef/eval/metrics.hpp"

namespace pkef {

class Model;

// Pearson correlation of two equally long series; nullopt when either is
// constant.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

// Pearson correlation of two 0/1 indicator vectors over `n` items given the
// sorted positions of their ones.
std::optional<double> indicator_pearson(std::size_t n, std::span<const Index> a,
                                        std::span<const Index> b);

// Mean over behavior pairs of the indicator correlation for one user; pairs
// with an undefined correlation are skipped. nullopt when none is defined.
std::optional<double> mean_behavior_correlation(const BehaviorDataset& ds, Index user);

struct UserGroup {
  double low = 0.0;
  double high = 0.0;
  std::vector<Index> users;
  MetricReport report;
  double mean_interactions = 0.0;  // training interactions over all behaviors
};

struct CaseStudy {
  std::vector<UserGroup> groups;
  std::size_t excluded_users = 0;  // no defined correlation

  nlohmann::json to_json() const;
};

// Buckets the evaluated users into `group_count` equal-width ranges of their
// mean behavior correlation and reports metrics per bucket. Requires K >= 2.
CaseStudy pearson_case_study(const BehaviorDataset& ds, std::span<const RankingResult> rankings,
                             std::size_t k, std::size_t group_count = 5);

struct GateTable {
  std::vector<std::string> labels;
  std::vector<double> mean_weights;
  double entropy = 0.0;  // of the mean distribution, in nats

  nlohmann::json to_json() const;
};

// Mean target-behavior gate weights over the test pairs. Throws ConfigError
// for ungated heads.
GateTable export_gate_weights(const Model& model, std::span<const NormalizedAdjacency> adjs,
                              const BehaviorDataset& ds);

struct DecouplingReport {
  double pme_cross_gradient = 0.0;      // max |dL_k / dq^t|, t != k
  double coupled_cross_gradient = 0.0;  // max |dL_k / de^t|, t != k
  double conflict_cosine = 0.0;         // cos between per-behavior gradients on e_u* o e_v*
  double conflict_magnitude = 0.0;      // min norm of those per-behavior gradients

  nlohmann::json to_json() const;
};

// Compares cross-behavior gradient leakage of the PME head (projection
// coefficients held constant) against a coupled shared-bottom head on a
// small instance whose two behaviors rank the same items in opposite order.
DecouplingReport analyze_decoupling(std::uint64_t seed, std::size_t behaviors = 3,
                                    std::size_t dim = 4, std::size_t pairs = 6);

}  // namespace pkef

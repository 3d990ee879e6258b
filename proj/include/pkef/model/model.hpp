#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pkef/core/params.hpp"
#include "pkef/core/tape.hpp"
#include "pkef/data/graph.hpp"
#include "pkef/experts/heads.hpp"
#include "pkef/objective/loss.hpp"
#include "pkef/propagation/pkf.hpp"

namespace pkef {

struct ModelConfig {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t dim = 64;
  std::vector<int> layers;
  FusionScheme fusion = FusionScheme::projection;
  HeadVariant head = HeadVariant::pme;
  TowerKind tower = TowerKind::sum;
  double gamma = 0.1;

  std::size_t behavior_count() const { return layers.size(); }
  bool has_parallel_stream() const { return fusion != FusionScheme::none; }
  // The unique-part objective belongs to the PME head.
  bool has_unique_loss() const { return head == HeadVariant::pme && layers.size() > 1; }
};

// Triples of one optimizer step. bpr[k] may be empty.
struct StepBatch {
  std::vector<std::span<const Triple>> bpr;
  struct Unique {
    std::size_t source;
    std::size_t guide;
    std::span<const Triple> triples;
  };
  std::vector<Unique> unique;
};

struct StepLoss {
  Var parallel;
  Var cascade;
  Var unique;
  Var penalty;
  Var total;
};

// Node representations after propagation, detached from any tape.
struct FrozenOutputs {
  std::vector<DenseMatrix> cascade;
  std::vector<DenseMatrix> parallel;
};

// PKF network plus prediction head over one shared ParameterStore.
class Model {
 public:
  Model(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  const PkfNetwork& network() const { return network_; }
  const PredictionHead& head() const { return head_; }

  BehaviorOutputs forward(Tape& t, const BoundParameters& bound,
                          std::span<const NormalizedAdjacency> adjs) const;

  // Per-behavior B x d rows for the given users / items.
  std::vector<Var> gather_users(Tape& t, std::span<const Var> reps,
                                std::span<const Index> users) const;
  std::vector<Var> gather_items(Tape& t, std::span<const Var> reps,
                                std::span<const Index> items) const;

  Var cascade_scores(Tape& t, const BoundParameters& bound, const BehaviorOutputs& out,
                     std::span<const Index> users, std::span<const Index> items,
                     std::size_t k) const;
  Var parallel_scores(Tape& t, const BehaviorOutputs& out, std::span<const Index> users,
                      std::span<const Index> items, std::size_t k) const;
  Var unique_scores(Tape& t, const BehaviorOutputs& out, std::span<const Index> users,
                    std::span<const Index> items, std::size_t source, std::size_t guide) const;

  // Parallel, cascade and unique BPR terms plus the L2 penalty. Behaviors
  // with a zero loss weight are not scored.
  StepLoss loss(Tape& t, const BoundParameters& bound, const BehaviorOutputs& out,
                const StepBatch& batch, const LossWeights& weights, double mu) const;

  FrozenOutputs freeze(std::span<const NormalizedAdjacency> adjs) const;

  // Cascade scores of behavior k for one user against `items`.
  std::vector<double> score_items(const FrozenOutputs& frozen, Index user,
                                  std::span<const Index> items, std::size_t k) const;

  // Gate weights of behavior k's head for the given pairs (B x G).
  DenseMatrix gate_weights(const FrozenOutputs& frozen, std::span<const Index> users,
                           std::span<const Index> items, std::size_t k) const;

 private:
  ModelConfig config_;
  PkfNetwork network_;
  PredictionHead head_;
  ParameterStore params_;
};

}  // namespace pkef

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "pkef/data/dataset.hpp"
#include "pkef/data/graph.hpp"
#include "pkef/eval/metrics.hpp"
#include "pkef/model/model.hpp"
#include "pkef/objective/adam.hpp"
#include "pkef/objective/loss.hpp"

namespace pkef {

struct TrainConfig {
  LossWeights weights;
  double mu = 1e-4;
  AdamConfig adam;
  std::size_t epochs = 200;
  std::size_t batch = 1024;
  std::size_t patience = 10;  // 0 disables early stopping
  std::size_t k = 10;
  std::uint64_t seed = 2024;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double hr = 0.0;
  double ndcg = 0.0;
  double loss_par = 0.0;
  double loss_cas = 0.0;
  double loss_uni = 0.0;
  double loss_total = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> trace;
  std::size_t best_epoch = 0;
  MetricReport report;  // test metrics of the restored best parameters
};

// Per-epoch triples: every behavior with a nonzero weight gets fresh BPR
// triples; the unique sets cover each ordered (source, guide) pair whose
// guide weight is nonzero.
struct EpochTriples {
  std::vector<std::vector<Triple>> bpr;
  std::vector<UniqueLossTriples> unique;
};

EpochTriples sample_epoch(const BehaviorDataset& ds, const ModelConfig& model,
                          const LossWeights& weights, std::uint64_t seed, std::size_t epoch);

// Splits the epoch into steps: the target behavior's triples in batches of
// `batch`, every other set cut into the same number of contiguous chunks.
// The steps view into `epoch`, which must outlive them.
std::vector<StepBatch> plan_steps(const EpochTriples& epoch, std::size_t batch);
std::vector<StepBatch> plan_steps(EpochTriples&& epoch, std::size_t batch) = delete;

// One optimizer step on a full-graph forward pass; returns the loss parts.
EpochRecord train_step(Model& model, AdamOptimizer& opt,
                       std::span<const NormalizedAdjacency> adjs, const StepBatch& batch,
                       const LossWeights& weights, double mu);

// Trains with per-epoch evaluation on `validation` (falls back to the test
// pairs when empty), early stopping on HR@k and restoring the best epoch's
// parameters. Throws TrainingError on a non-finite loss.
TrainResult train_model(Model& model, std::span<const NormalizedAdjacency> adjs,
                        const BehaviorDataset& ds, std::span<const Interaction> validation,
                        const TrainConfig& config,
                        const std::function<void(const EpochRecord&)>& on_epoch = {});

void write_metrics_csv(std::span<const EpochRecord> trace, const std::filesystem::path& path);
nlohmann::json report_json(const TrainResult& result);

}  // namespace pkef

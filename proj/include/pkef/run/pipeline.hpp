#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "pkef/data/dataset.hpp"
#include "pkef/data/graph.hpp"
#include "pkef/model/model.hpp"
#include "pkef/run/config.hpp"
#include "pkef/run/trainer.hpp"

namespace pkef {

struct PreparedData {
  BehaviorDataset dataset;
  std::vector<Interaction> validation;  // from validation.txt, if present
  std::vector<NormalizedAdjacency> adjacencies;
};

PreparedData prepare_data(BehaviorDataset ds, std::vector<Interaction> validation = {});
PreparedData load_prepared(const RunConfig& config);

TrainConfig train_config(const RunConfig& config);

struct RunOutcome {
  Model model;
  TrainResult result;
};

// Builds the model from the resolved config and trains it.
RunOutcome run_training(const RunConfig& config, const PreparedData& data,
                        const std::function<void(const EpochRecord&)>& on_epoch = {});

// Writes config.txt, metrics.csv, report.json and model.ckpt into config.out.
void write_run_artifacts(const RunConfig& config, const RunOutcome& outcome);

struct Variant {
  std::string label;
  RunConfig config;
};

// Named variants: full, base (plain cascade + bilinear head), no-pkf,
// no-pme, fusion:<scheme>, head:<variant>, and the sweeps grid:lambda and
// grid:layers. Throws ConfigError for unknown names.
std::vector<Variant> expand_variants(const RunConfig& base, const std::vector<std::string>& names);

}  // namespace pkef

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pkef/experts/heads.hpp"
#include "pkef/model/model.hpp"
#include "pkef/objective/loss.hpp"
#include "pkef/propagation/pkf.hpp"

namespace pkef {

// Everything a run needs. Behavior-indexed lists left empty are filled in
// by resolve() once the behavior count is known.
struct RunConfig {
  std::filesystem::path data;
  std::vector<std::string> behaviors{"view", "cart", "buy"};
  std::filesystem::path out = "runs/latest";
  std::uint64_t seed = 2024;
  FusionScheme fusion = FusionScheme::projection;
  HeadVariant head = HeadVariant::pme;
  TowerKind tower = TowerKind::sum;
  std::size_t dim = 64;
  std::vector<int> layers;
  std::vector<double> lambda;
  double gamma = 0.1;
  double mu = 1e-4;
  double lr = 1e-3;
  std::size_t epochs = 200;
  std::size_t batch = 1024;
  std::size_t patience = 10;
  std::size_t k = 10;

  // Defaults: one layer per behavior; lambda (0, 4/6, 2/6) for three
  // behaviors, uniform otherwise. Throws ConfigError on inconsistencies.
  void resolve();
  ModelConfig model_config(std::size_t users, std::size_t items) const;
  LossWeights loss_weights() const;
};

// Applies one "key = value" setting; keys match the long CLI flag names.
void apply_setting(RunConfig& c, const std::string& key, const std::string& value);

// Flat text file: one "key = value" per line, '#' starts a comment.
RunConfig load_run_config(const std::filesystem::path& path);
void apply_settings(RunConfig& c, const std::map<std::string, std::string>& settings);

std::string serialize(const RunConfig& c);
void save_run_config(const RunConfig& c, const std::filesystem::path& path);

// Comma-separated lists; lambda entries may be fractions such as "4/6".
std::vector<int> parse_int_list(const std::string& s);
std::vector<double> parse_real_list(const std::string& s);
std::vector<std::string> parse_name_list(const std::string& s);

// Loss-weight vectors with entries in {0, 1/6, ..., 1} summing to one.
std::vector<std::vector<double>> lambda_grid(std::size_t behaviors, int steps = 6);
// Every layer-count vector with entries in [1, max_layers].
std::vector<std::vector<int>> layer_grid(std::size_t behaviors, int max_layers = 4);

}  // namespace pkef

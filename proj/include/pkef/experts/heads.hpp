#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pkef/core/params.hpp"
#include "pkef/core/tape.hpp"

namespace pkef {

enum class HeadVariant { pme, shared_bottom, bilinear, mmoe, ple };
enum class TowerKind { sum, linear };

std::string to_string(HeadVariant v);
HeadVariant parse_head(const std::string& s);
std::string to_string(TowerKind t);
TowerKind parse_tower(const std::string& s);

// q = z_u * z_v, row-wise.
Var make_experts(Tape& t, Var z_user, Var z_item);

struct Disentangled {
  Var shared;  // gamma * projection of q_other onto q_guide
  Var unique;  // q_other minus the unscaled projection
};

// The projection coefficient is held constant under differentiation, so
// the shared part only carries gradient back to q_guide.
Disentangled disentangle(Tape& t, Var q_other, Var q_guide, double gamma);

// softmax(W (z_user || z_item) + b) with W of shape G x 2d, b of 1 x G.
Var gate_weights(Tape& t, Var z_user, Var z_item, Var weight, Var bias);

// tower(sum_j gates(:, j) * parts[j]); an invalid tower Var means the
// component-sum tower, otherwise tower is a 1 x d row.
Var aggregate_predict(Tape& t, Var gates, std::span<const Var> parts, Var tower);

// Cascade score of behavior `k` from per-behavior experts. Self part is q^k
// itself; every other behavior contributes its gamma-scaled shared part.
Var pme_scores(Tape& t, std::span<const Var> experts, Var gates, std::size_t k, double gamma,
               Var tower);

Var predict_parallel(Tape& t, Var p_user, Var p_item);

// Inner product of the user-side and item-side unique parts of behavior
// `source` relative to the guide behavior.
Var predict_unique(Tape& t, Var source_user, Var guide_user, Var source_item, Var guide_item);

struct HeadConfig {
  HeadVariant variant = HeadVariant::pme;
  std::size_t behaviors = 0;
  std::size_t dim = 64;
  double gamma = 0.1;
  TowerKind tower = TowerKind::sum;
};

// Multi-task prediction head mapping per-behavior pair representations to
// one cascade score per behavior.
class PredictionHead {
 public:
  explicit PredictionHead(HeadConfig config);

  const HeadConfig& config() const { return config_; }
  bool gated() const;

  void register_parameters(ParameterStore& store, std::mt19937_64& rng) const;

  // users[j] and items[j] hold the B x d rows of z^{j,*} for the pairs.
  Var cascade_scores(Tape& t, const BoundParameters& params, std::span<const Var> users,
                     std::span<const Var> items, std::size_t k) const;

  // Gate weights used for behavior k (B x G). Throws ConfigError for
  // ungated variants.
  Var gates(Tape& t, const BoundParameters& params, std::span<const Var> users,
            std::span<const Var> items, std::size_t k) const;

  // Column labels of gates().
  std::vector<std::string> expert_labels() const;

 private:
  Var coupled(Tape& t, const BoundParameters& params, std::span<const Var> reps) const;

  HeadConfig config_;
};

}  // namespace pkef

#include "pkef/objective/loss.hpp"

#include <cmath>
#include <numeric>

#include "pkef/core/ops.hpp"
#include "pkef/errors.hpp"

namespace pkef {
namespace {

Var zero(Tape& t) { return t.constant(DenseMatrix(1, 1)); }

Var weighted_sum(Tape& t, std::vector<Var> terms) {
  if (terms.empty()) return zero(t);
  return ops::add_n(t, terms);
}

Var bpr_sum(Tape& t, std::span<const ScoredPairs> scored, const LossWeights& weights) {
  std::vector<Var> terms;
  for (const auto& s : scored) {
    if (s.behavior >= weights.size()) throw ConfigError("loss weight missing for a behavior");
    if (weights[s.behavior] == 0.0) continue;
    terms.push_back(bpr_mean(t, s.pos, s.neg, weights[s.behavior]));
  }
  return weighted_sum(t, std::move(terms));
}

}  // namespace

LossWeights::LossWeights(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ConfigError("loss weights are empty");
  for (double v : values_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("loss weights must be non-negative");
  }
  const double total = std::accumulate(values_.begin(), values_.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) {
    throw ConfigError("loss weights must sum to 1, got " + std::to_string(total));
  }
}

LossWeights LossWeights::uniform(std::size_t behaviors) {
  std::vector<double> v(behaviors, 1.0 / static_cast<double>(behaviors));
  v.back() = 1.0 - std::accumulate(v.begin(), v.end() - 1, 0.0);
  return LossWeights(std::move(v));
}

double bpr_term(double pos, double neg) { return softplus(neg - pos); }

Var bpr_mean(Tape& t, Var pos, Var neg, double weight) {
  const std::size_t n = t.value(pos).rows();
  if (n == 0) {
    log_warning("BPR loss over an empty batch");
    return zero(t);
  }
  return ops::softplus_sum(t, ops::sub(t, neg, pos), weight / static_cast<double>(n));
}

Var parallel_loss(Tape& t, std::span<const ScoredPairs> scored, const LossWeights& weights) {
  return bpr_sum(t, scored, weights);
}

Var cascade_loss(Tape& t, std::span<const ScoredPairs> scored, const LossWeights& weights) {
  return bpr_sum(t, scored, weights);
}

Var unique_loss(Tape& t, std::span<const UniqueScoredPairs> scored, const LossWeights& weights) {
  std::vector<Var> terms;
  for (const auto& s : scored) {
    if (s.guide >= weights.size()) throw ConfigError("loss weight missing for a behavior");
    if (weights[s.guide] == 0.0 || t.value(s.pos).rows() == 0) continue;
    terms.push_back(bpr_mean(t, s.pos, s.neg, weights[s.guide]));
  }
  return weighted_sum(t, std::move(terms));
}

Var l2_penalty(Tape& t, const BoundParameters& params, double mu) {
  std::vector<Var> terms;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params.at(i).valid()) terms.push_back(ops::sum_squares(t, params.at(i)));
  }
  if (terms.empty()) return zero(t);
  return ops::scale(t, ops::add_n(t, terms), mu);
}

Var total_loss(Tape& t, Var parallel, Var cascade, Var unique, Var penalty) {
  const Var terms[] = {parallel, cascade, unique, penalty};
  return ops::add_n(t, terms);
}

}  // namespace pkef

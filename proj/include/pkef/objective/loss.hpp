#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pkef/core/params.hpp"
#include "pkef/core/tape.hpp"

namespace pkef {

// Per-behavior loss coefficients; non-negative and summing to one.
class LossWeights {
 public:
  LossWeights() = default;
  explicit LossWeights(std::vector<double> values);  // throws ConfigError

  static LossWeights uniform(std::size_t behaviors);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }
  std::span<const double> values() const { return values_; }

 private:
  std::vector<double> values_;
};

// -ln sigmoid(pos - neg) in a form that neither overflows nor underflows.
double bpr_term(double pos, double neg);

// weight * mean over rows of bpr_term(pos, neg). An empty batch yields a
// zero constant and a warning.
Var bpr_mean(Tape& t, Var pos, Var neg, double weight);

struct ScoredPairs {
  std::size_t behavior = 0;
  Var pos;  // B x 1
  Var neg;  // B x 1
};

struct UniqueScoredPairs {
  std::size_t source = 0;
  std::size_t guide = 0;
  Var pos;
  Var neg;
};

// sum_k lambda_k * batch-mean BPR over the given behaviors.
Var parallel_loss(Tape& t, std::span<const ScoredPairs> scored, const LossWeights& weights);
Var cascade_loss(Tape& t, std::span<const ScoredPairs> scored, const LossWeights& weights);
// Weighted by the guide behavior's coefficient.
Var unique_loss(Tape& t, std::span<const UniqueScoredPairs> scored, const LossWeights& weights);

// mu * sum of squared entries over every bound parameter.
Var l2_penalty(Tape& t, const BoundParameters& params, double mu);

Var total_loss(Tape& t, Var parallel, Var cascade, Var unique, Var penalty);

}  // namespace pkef

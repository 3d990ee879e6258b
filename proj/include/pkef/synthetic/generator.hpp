#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pkef/core/dense.hpp"
#include "pkef/data/dataset.hpp"

namespace pkef {

struct SyntheticSpec {
  std::size_t users = 200;
  std::size_t items = 100;
  std::size_t latent_dim = 8;
  // Fraction of items each user interacts with, upstream first. Must be
  // non-increasing and in (0, 1].
  std::vector<double> densities{0.3, 0.1, 0.03};
  // Share of a downstream behavior's positives drawn from the upstream
  // behavior's positives; 1.0 nests the behaviors exactly.
  double overlap = 1.0;
  // Std-dev of the per-behavior noise added to the latent affinity.
  double noise = 0.5;
  std::uint64_t seed = 7;
  // Hold out a second target positive per user (when one remains) as a
  // validation pair.
  bool validation = false;
  std::vector<std::string> names;  // defaults to b0, b1, ...

  std::size_t behaviors() const { return densities.size(); }
};

struct SyntheticData {
  BehaviorDataset dataset;
  DenseMatrix user_factors;  // users x latent_dim
  DenseMatrix item_factors;  // items x latent_dim
  std::vector<Interaction> validation;
};

// Planted-preference data: each user's positives under a behavior are the
// items with the highest noisy latent affinity, subject to the overlap
// constraint; one target positive per user is held out as the test pair.
// Throws ConfigError on an infeasible spec.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace pkef

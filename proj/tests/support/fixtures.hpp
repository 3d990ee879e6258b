#pragma once

#include <random>
#include <string>
#include <vector>

#include "pkef/data/dataset.hpp"

namespace pkef::testing {

// Random interactions with the given density; every behavior gets at least
// one pair so that sampling has work to do.
inline BehaviorDataset tiny_dataset(std::size_t users, std::size_t items, std::size_t behaviors,
                                    std::uint64_t seed, double density = 0.4) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution hit(density);
  std::vector<std::vector<Interaction>> pairs(behaviors);
  std::vector<std::string> names;
  for (std::size_t k = 0; k < behaviors; ++k) {
    names.push_back("b" + std::to_string(k));
    for (Index u = 0; u < users; ++u) {
      for (Index v = 0; v < items; ++v) {
        if (hit(rng)) pairs[k].push_back({u, v});
      }
    }
    if (pairs[k].empty()) pairs[k].push_back({0, 0});
  }
  return make_dataset(users, items, names, pairs, {});
}

}  // namespace pkef::testing

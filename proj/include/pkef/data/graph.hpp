#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pkef/core/sparse.hpp"
#include "pkef/data/dataset.hpp"

namespace pkef {

// Row-normalized (A_k + I) over the stacked node set: users occupy rows
// [0, |U|), items occupy [|U|, |U| + |V|).
struct NormalizedAdjacency {
  std::size_t behavior = 0;
  SparseMatrix matrix;
};

NormalizedAdjacency build_normalized_adjacency(const BehaviorDataset& ds, std::size_t behavior);
std::vector<NormalizedAdjacency> build_all_adjacencies(const BehaviorDataset& ds);

struct Triple {
  Index user;
  Index pos;
  Index neg;
  friend bool operator==(const Triple&, const Triple&) = default;
};

struct TrainTriples {
  std::size_t behavior = 0;
  std::vector<Triple> triples;
};

struct UniqueLossTriples {
  std::size_t source = 0;  // k'
  std::size_t guide = 0;   // k
  std::vector<Triple> triples;
};

// One uniform negative per positive of `behavior`. Users whose positives
// cover every item are skipped with a warning.
TrainTriples sample_bpr_triples(const BehaviorDataset& ds, std::size_t behavior,
                                std::uint64_t seed);

// Positives are the source's items the guide behavior lacks; negatives are
// drawn uniformly from items outside the guide's positives or shared by both
// behaviors, never equal to the positive.
UniqueLossTriples build_unique_triples(const BehaviorDataset& ds, std::size_t source,
                                       std::size_t guide, std::uint64_t seed);

}  // namespace pkef

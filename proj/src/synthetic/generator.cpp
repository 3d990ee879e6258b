#include "pkef/synthetic/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pkef/errors.hpp"

namespace pkef {
namespace {

std::vector<std::size_t> per_user_counts(const SyntheticSpec& spec) {
  std::vector<std::size_t> counts;
  for (double d : spec.densities) {
    if (!(d > 0.0 && d <= 1.0)) throw ConfigError("synthetic densities must lie in (0, 1]");
    counts.push_back(std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(d * static_cast<double>(spec.items)))));
  }
  for (std::size_t k = 1; k < spec.densities.size(); ++k) {
    if (spec.densities[k] > spec.densities[k - 1]) {
      throw ConfigError("synthetic densities must not increase downstream");
    }
  }
  return counts;
}

// Top `count` of `pool` by descending score, ties by index.
std::vector<Index> top_by(std::vector<Index> pool, const std::vector<double>& score,
                          std::size_t count) {
  std::stable_sort(pool.begin(), pool.end(),
                   [&](Index a, Index b) { return score[a] > score[b]; });
  pool.resize(std::min(count, pool.size()));
  return pool;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.users == 0 || spec.items == 0 || spec.latent_dim == 0) {
    throw ConfigError("synthetic spec needs users, items and a latent dimension");
  }
  if (spec.densities.empty()) throw ConfigError("synthetic spec needs at least one behavior");
  if (!(spec.overlap >= 0.0 && spec.overlap <= 1.0)) {
    throw ConfigError("synthetic overlap must lie in [0, 1]");
  }
  if (!(spec.noise >= 0.0) || !std::isfinite(spec.noise)) {
    throw ConfigError("synthetic noise must be a finite non-negative number");
  }
  const auto counts = per_user_counts(spec);
  std::vector<std::size_t> nested(counts.size(), 0);
  for (std::size_t k = 1; k < counts.size(); ++k) {
    nested[k] = static_cast<std::size_t>(std::llround(spec.overlap * static_cast<double>(counts[k])));
    if (nested[k] > counts[k - 1] || counts[k] - nested[k] > spec.items - counts[k - 1]) {
      throw ConfigError("synthetic density/overlap combination is infeasible for behavior " +
                        std::to_string(k));
    }
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SyntheticData out;
  out.user_factors = DenseMatrix(spec.users, spec.latent_dim);
  out.item_factors = DenseMatrix(spec.items, spec.latent_dim);
  for (double& v : out.user_factors.values()) v = gauss(rng);
  for (double& v : out.item_factors.values()) v = gauss(rng);

  const std::size_t behaviors = spec.behaviors();
  std::vector<std::vector<Interaction>> pairs(behaviors);
  std::vector<Interaction> test;
  std::vector<double> score(spec.items);
  for (Index u = 0; u < spec.users; ++u) {
    std::vector<Index> upstream;
    std::vector<Index> target_items;
    for (std::size_t k = 0; k < behaviors; ++k) {
      for (Index v = 0; v < spec.items; ++v) {
        score[v] = dot(out.user_factors.row(u), out.item_factors.row(v)) + spec.noise * gauss(rng);
      }
      std::vector<Index> chosen;
      if (k == 0) {
        std::vector<Index> all(spec.items);
        std::iota(all.begin(), all.end(), Index{0});
        chosen = top_by(std::move(all), score, counts[0]);
      } else {
        std::vector<Index> inside = upstream, outside;
        std::sort(inside.begin(), inside.end());
        for (Index v = 0; v < spec.items; ++v) {
          if (!std::binary_search(inside.begin(), inside.end(), v)) outside.push_back(v);
        }
        chosen = top_by(std::move(inside), score, nested[k]);
        const auto extra = top_by(std::move(outside), score, counts[k] - nested[k]);
        chosen.insert(chosen.end(), extra.begin(), extra.end());
      }
      std::sort(chosen.begin(), chosen.end());
      if (k + 1 == behaviors) {
        std::uniform_int_distribution<std::size_t> pick(0, chosen.size() - 1);
        const std::size_t held = pick(rng);
        test.push_back({u, chosen[held]});
        chosen.erase(chosen.begin() + static_cast<std::ptrdiff_t>(held));
        if (spec.validation && !chosen.empty()) {
          std::uniform_int_distribution<std::size_t> again(0, chosen.size() - 1);
          const std::size_t v = again(rng);
          out.validation.push_back({u, chosen[v]});
          chosen.erase(chosen.begin() + static_cast<std::ptrdiff_t>(v));
        }
      }
      for (Index v : chosen) pairs[k].push_back({u, v});
      upstream = chosen;
    }
  }
  std::vector<std::string> names = spec.names;
  if (names.empty()) {
    for (std::size_t k = 0; k < behaviors; ++k) names.push_back("b" + std::to_string(k));
  }
  if (names.size() != behaviors) throw ConfigError("synthetic names do not match behaviors");
  out.dataset = make_dataset(spec.users, spec.items, names, pairs, std::move(test));
  return out;
}

}  // namespace pkef

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pkef/core/dense.hpp"
#include "pkef/errors.hpp"
#include "pkef/eval/metrics.hpp"
#include "pkef/synthetic/generator.hpp"

using namespace pkef;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Realized density of behavior k, counting held-out target pairs.
double density(const BehaviorDataset& ds, std::size_t k) {
  double n = static_cast<double>(ds.behaviors[k].size());
  if (k + 1 == ds.behavior_count()) n += static_cast<double>(ds.test.size());
  return n / static_cast<double>(ds.user_count * ds.item_count);
}

}  // namespace

TEST_CASE("realized densities are within ten percent of the request") {
  for (std::uint64_t seed : {1, 2, 3}) {
    SyntheticSpec spec;
    spec.seed = seed;
    const auto data = generate_synthetic(spec);
    for (std::size_t k = 0; k < 3; ++k) {
      CAPTURE(k);
      CHECK(std::abs(density(data.dataset, k) / spec.densities[k] - 1.0) <= 0.1);
    }
    CHECK(data.dataset.behaviors[0].name() == "b0");
  }
}

TEST_CASE("full overlap nests every downstream behavior in its upstream one") {
  const auto ds = generate_synthetic(SyntheticSpec{}).dataset;
  for (std::size_t k = 1; k < ds.behavior_count(); ++k) {
    for (const auto& p : ds.behaviors[k].pairs()) CHECK(ds.behaviors[k - 1].contains(p.user, p.item));
  }
  for (const auto& p : ds.test) CHECK(ds.behaviors[1].contains(p.user, p.item));

  SyntheticSpec loose;
  loose.overlap = 0.0;
  const auto disjoint = generate_synthetic(loose).dataset;
  std::size_t shared = 0;
  for (const auto& p : disjoint.behaviors[2].pairs()) shared += disjoint.behaviors[1].contains(p.user, p.item);
  CHECK(shared == 0);
}

TEST_CASE("held-out pairs are disjoint from training and one per user") {
  const auto ds = generate_synthetic(SyntheticSpec{}).dataset;
  CHECK(ds.test.size() == ds.user_count);
  std::vector<int> seen(ds.user_count, 0);
  for (const auto& p : ds.test) {
    CHECK_FALSE(ds.target().contains(p.user, p.item));
    ++seen[p.user];
  }
  for (int s : seen) CHECK(s == 1);
}

TEST_CASE("generation is deterministic down to the written bytes") {
  SyntheticSpec spec;
  spec.users = 50;
  spec.items = 40;
  spec.densities = {0.3, 0.1, 0.05};
  const auto a = generate_synthetic(spec), b = generate_synthetic(spec);
  CHECK(a.user_factors == b.user_factors);
  CHECK(a.item_factors == b.item_factors);
  const auto base = fs::temp_directory_path() / "pkef_synth_det";
  fs::remove_all(base);
  write_dataset(a.dataset, base / "a");
  write_dataset(b.dataset, base / "b");
  for (const auto& entry : fs::directory_iterator(base / "a")) {
    const auto name = entry.path().filename();
    CAPTURE(name.string());
    REQUIRE(fs::exists(base / "b" / name));
    CHECK(slurp(entry.path()) == slurp(base / "b" / name));
  }
  spec.seed += 1;
  CHECK_FALSE(generate_synthetic(spec).user_factors == a.user_factors);
}

TEST_CASE("infeasible specs are rejected") {
  auto bad = [](auto edit) {
    SyntheticSpec s;
    edit(s);
    return s;
  };
  CHECK_THROWS_AS(generate_synthetic(bad([](auto& s) { s.densities = {0.1, 0.3}; })), ConfigError);
  CHECK_THROWS_AS(generate_synthetic(bad([](auto& s) { s.densities = {1.5, 0.1}; })), ConfigError);
  CHECK_THROWS_AS(generate_synthetic(bad([](auto& s) { s.densities = {0.3, 0.0}; })), ConfigError);
  CHECK_THROWS_AS(generate_synthetic(bad([](auto& s) { s.densities = {}; })), ConfigError);
  CHECK_THROWS_AS(generate_synthetic(bad([](auto& s) { s.users = 0; })), ConfigError);
  CHECK_THROWS_AS(generate_synthetic(bad([](auto& s) { s.overlap = 1.5; })), ConfigError);
  CHECK_THROWS_AS(generate_synthetic(bad([](auto& s) { s.noise = -1; })), ConfigError);
  CHECK_THROWS_AS(generate_synthetic(bad([](auto& s) { s.names = {"a"}; })), ConfigError);
}

TEST_CASE("the planted factors rank held-out items near the top") {
  const auto data = generate_synthetic(SyntheticSpec{});
  const auto& ds = data.dataset;
  std::vector<std::size_t> ranks;
  for (const auto& p : ds.test) {
    std::vector<double> scores(ds.item_count);
    for (Index v = 0; v < ds.item_count; ++v) {
      scores[v] = dot(data.user_factors.row(p.user), data.item_factors.row(v));
    }
    ranks.push_back(rank_items(scores, ds.target().items_of(p.user), p.item));
  }
  CHECK(hr_ndcg(ranks, 5).hr >= 0.8);
}

TEST_CASE("an optional validation split takes a second target item") {
  SyntheticSpec spec;
  spec.validation = true;
  const auto with = generate_synthetic(spec);
  const auto without = generate_synthetic(SyntheticSpec{});
  CHECK(with.validation.size() == spec.users);
  CHECK(without.validation.empty());
  CHECK(with.dataset.target().size() + spec.users == without.dataset.target().size());
  for (std::size_t i = 0; i < with.validation.size(); ++i) {
    const auto& v = with.validation[i];
    CHECK_FALSE(with.dataset.target().contains(v.user, v.item));
    CHECK_FALSE(v == with.dataset.test[i]);
    CHECK(with.dataset.behaviors[1].contains(v.user, v.item));
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "pkef/core/ops.hpp"
#include "pkef/data/graph.hpp"
#include "pkef/errors.hpp"
#include "pkef/model/model.hpp"
#include "pkef/objective/adam.hpp"
#include "pkef/objective/loss.hpp"
#include "pkef/run/trainer.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

using namespace pkef;

namespace {

Var col(Tape& t, std::vector<double> v) {
  const std::size_t n = v.size();
  return t.constant(DenseMatrix(n, 1, std::move(v)));
}

double scalar(Tape& t, Var v) { return t.value(v)(0, 0); }

struct Fixture {
  BehaviorDataset ds;
  std::vector<NormalizedAdjacency> adjs;
  EpochTriples epoch;
  StepBatch batch;
};

Fixture fixture(std::size_t K, const ModelConfig& mc, const LossWeights& w, std::uint64_t seed) {
  Fixture f{pkef::testing::tiny_dataset(mc.users, mc.items, K, seed, 0.35), {}, {}, {}};
  f.adjs = build_all_adjacencies(f.ds);
  f.epoch = sample_epoch(f.ds, mc, w, seed, 1);
  f.batch = plan_steps(f.epoch, 1 << 20).front();
  return f;
}

}  // namespace

TEST_CASE("bpr_term examples") {
  CHECK(bpr_term(0.3, 0.3) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(bpr_term(800, 0) < 1e-300);
  CHECK(bpr_term(0, 100) == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(std::isfinite(bpr_term(0, 1e6)));
  CHECK(bpr_term(std::log(3.0), 0) == doctest::Approx(std::log(4.0 / 3.0)).epsilon(1e-14));
}

TEST_CASE("loss weights") {
  CHECK_THROWS_AS(LossWeights({0.5, 0.6}), ConfigError);
  CHECK_THROWS_AS(LossWeights({-0.5, 1.5}), ConfigError);
  CHECK_THROWS_AS(LossWeights(std::vector<double>{}), ConfigError);
  CHECK_NOTHROW(LossWeights({0, 4.0 / 6, 2.0 / 6}));
  const auto u = LossWeights::uniform(3);
  CHECK(u[0] == doctest::Approx(1.0 / 3));
}

TEST_CASE("parallel and cascade loss examples") {
  Tape t;
  const LossWeights w({0.0, 1.0});
  // behavior 0 has weight zero: contributes nothing however bad its scores are
  const ScoredPairs zero_weight{0, col(t, {-50, -50}), col(t, {50, 50})};
  const ScoredPairs tied{1, col(t, {0.2, -1, 3}), col(t, {0.2, -1, 3})};
  const ScoredPairs both[] = {zero_weight, tied};
  CHECK(scalar(t, parallel_loss(t, both, w)) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(scalar(t, cascade_loss(t, both, w)) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  const ScoredPairs only_zero[] = {zero_weight};
  CHECK(scalar(t, parallel_loss(t, only_zero, w)) == 0.0);

  const ScoredPairs single[] = {{1, col(t, {std::log(3.0)}), col(t, {0})}};
  CHECK(scalar(t, cascade_loss(t, single, w)) == doctest::Approx(0.28768207245178).epsilon(1e-12));

  set_quiet(true);
  const ScoredPairs empty[] = {{1, t.constant(DenseMatrix(0, 1)), t.constant(DenseMatrix(0, 1))}};
  CHECK(scalar(t, cascade_loss(t, empty, w)) == 0.0);
  set_quiet(false);
}

TEST_CASE("unique loss examples") {
  Tape t;
  CHECK(scalar(t, unique_loss(t, {}, LossWeights({1.0}))) == 0.0);
  const UniqueScoredPairs one[] = {{0, 1, col(t, {0.7}), col(t, {0.7})}};
  CHECK(scalar(t, unique_loss(t, one, LossWeights({0.5, 0.5}))) ==
        doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-14));
  CHECK(scalar(t, unique_loss(t, one, LossWeights({1.0, 0.0}))) == 0.0);
}

TEST_CASE("total loss examples") {
  Tape t;
  const Var l2 = t.constant(DenseMatrix(1, 1, std::log(2.0)));
  const Var z = t.constant(DenseMatrix(1, 1));
  CHECK(scalar(t, total_loss(t, l2, l2, l2, z)) == doctest::Approx(3 * std::log(2.0)));

  ParameterStore store;
  store.add("theta", DenseMatrix::from_rows({{1, 1}, {1, 1}}));  // squared norm 4
  const BoundParameters bound(t, store);
  const Var pen = l2_penalty(t, bound, 0.5);
  CHECK(scalar(t, total_loss(t, z, z, z, pen)) == doctest::Approx(2.0));
  CHECK(scalar(t, l2_penalty(t, bound, 0.0)) == 0.0);
}

TEST_CASE("adam examples") {
  ParameterStore store;
  store.add("theta", DenseMatrix::from_rows({{0.5, -2}}));
  AdamOptimizer opt;
  const std::vector<DenseMatrix> zero{DenseMatrix(1, 2)};
  opt.step(store, zero);
  CHECK(store.value("theta") == DenseMatrix::from_rows({{0.5, -2}}));

  ParameterStore fresh;
  fresh.add("theta", DenseMatrix(1, 1, 1.0));
  AdamOptimizer first;
  const std::vector<DenseMatrix> ones{DenseMatrix(1, 1, 1.0)};
  first.step(fresh, ones);
  CHECK(fresh.value("theta")(0, 0) - 1.0 == doctest::Approx(-1e-3).epsilon(1e-6));

  double prev = fresh.value("theta")(0, 0), last_step = 0;
  const std::vector<DenseMatrix> g{DenseMatrix(1, 1, 0.37)};
  for (int i = 0; i < 5000; ++i) {
    first.step(fresh, g);
    const double now = fresh.value("theta")(0, 0);
    last_step = prev - now;
    prev = now;
  }
  CHECK(last_step == doctest::Approx(1e-3).epsilon(1e-4));
  CHECK(first.step_count() == 5001);

  const std::vector<DenseMatrix> wrong{DenseMatrix(2, 2)};
  CHECK_THROWS_AS(first.step(fresh, wrong), UsageError);
}

TEST_CASE("end-to-end total loss gradient on tiny instances") {
  for (FusionScheme s : {FusionScheme::none, FusionScheme::projection, FusionScheme::vanilla,
                         FusionScheme::summation, FusionScheme::linear}) {
    CAPTURE(to_string(s));
    const ModelConfig mc{3, 5, 3, {2, 1}, s, HeadVariant::pme, TowerKind::sum, 0.1};
    const LossWeights w({0.4, 0.6});
    const auto f = fixture(2, mc, w, 3);
    const Model model(mc, 4);
    const auto r = pkef::testing::check_store_gradients(model.params(), [&](Tape& t, const BoundParameters& b) {
      const auto out = model.forward(t, b, f.adjs);
      return model.loss(t, b, out, f.batch, w, 0.01).total;
    });
    CHECK(r.max_rel < 1e-4);
  }
}

TEST_CASE("loss parts are non-negative") {
  const ModelConfig mc{6, 8, 4, {1, 2, 1}, FusionScheme::projection, HeadVariant::pme, TowerKind::sum, 0.1};
  const LossWeights w({0.2, 0.5, 0.3});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto f = fixture(3, mc, w, seed);
    const Model model(mc, seed);
    Tape t;
    const BoundParameters b(t, model.params());
    const auto l = model.loss(t, b, model.forward(t, b, f.adjs), f.batch, w, 1e-4);
    CHECK(scalar(t, l.parallel) >= 0);
    CHECK(scalar(t, l.cascade) >= 0);
    CHECK(scalar(t, l.unique) >= 0);
    CHECK(scalar(t, l.penalty) >= 0);
  }
}

TEST_CASE("200 Adam steps on a fixed batch halve the loss") {
  const ModelConfig mc{6, 8, 4, {1, 1, 1}, FusionScheme::projection, HeadVariant::pme, TowerKind::sum, 0.1};
  const LossWeights w({0.0, 4.0 / 6, 2.0 / 6});
  const auto f = fixture(3, mc, w, 5);
  Model model(mc, 6);
  AdamOptimizer opt(AdamConfig{0.01});
  double first = 0, last = 0;
  for (int i = 0; i < 200; ++i) {
    const EpochRecord r = train_step(model, opt, f.adjs, f.batch, w, 1e-4);
    if (i == 0) first = r.loss_total;
    last = r.loss_total;
  }
  CHECK(last <= 0.5 * first);
}

TEST_CASE("a zero-weight behavior does not influence the loss") {
  const ModelConfig mc{5, 7, 3, {1, 1, 1}, FusionScheme::projection, HeadVariant::pme, TowerKind::sum, 0.1};
  const LossWeights w({0.0, 0.5, 0.5});
  auto f = fixture(3, mc, w, 7);
  // hand behavior 0 some triples even though its weight is zero
  std::vector<Triple> upstream{{0, 1, 2}, {1, 3, 4}, {2, 0, 6}};
  f.batch.bpr[0] = upstream;
  const Model model(mc, 8);
  auto total = [&](const StepBatch& batch) {
    Tape t;
    const BoundParameters b(t, model.params());
    return scalar(t, model.loss(t, b, model.forward(t, b, f.adjs), batch, w, 1e-4).total);
  };
  const double base = total(f.batch);
  std::vector<Triple> flipped;
  for (const auto& tr : upstream) flipped.push_back({tr.user, tr.neg, tr.pos});
  std::reverse(flipped.begin(), flipped.end());
  StepBatch changed = f.batch;
  changed.bpr[0] = flipped;
  CHECK(total(changed) == base);
  changed.bpr[0] = {};
  CHECK(total(changed) == base);
}

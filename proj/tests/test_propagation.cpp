#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "pkef/core/ops.hpp"
#include "pkef/data/graph.hpp"
#include "pkef/errors.hpp"
#include "pkef/propagation/pkf.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"
#include "support/oracle.hpp"

using namespace pkef;
using pkef::testing::random_matrix;

namespace {

constexpr FusionScheme kAllSchemes[] = {FusionScheme::projection, FusionScheme::vanilla,
                                        FusionScheme::summation, FusionScheme::linear};

DenseMatrix fuse(FusionScheme s, const DenseMatrix& e_cas, const DenseMatrix& e_par,
                 const DenseMatrix& z, const DenseMatrix& W = {}, const DenseMatrix& b = {},
                 const DenseMatrix& T = {}) {
  Tape t;
  const Var c = t.variable(e_cas), p = t.variable(e_par), zz = t.variable(z);
  switch (s) {
    case FusionScheme::projection: return t.value(fuse_projection(t, c, p, zz));
    case FusionScheme::vanilla:
      return t.value(fuse_vanilla(t, c, p, zz, t.variable(W), t.variable(b)));
    case FusionScheme::summation: return t.value(fuse_summation(t, c, p, zz));
    case FusionScheme::linear: return t.value(fuse_linear(t, c, p, zz, t.variable(T)));
    case FusionScheme::none: break;
  }
  return {};
}

void check_close(const DenseMatrix& a, const DenseMatrix& b, double tol = 1e-12) {
  REQUIRE(a.same_shape(b));
  CHECK(max_abs_diff(a, b) < tol);
}

struct Tiny {
  BehaviorDataset ds;
  std::vector<NormalizedAdjacency> adjs;
};

Tiny tiny(std::size_t users, std::size_t items, std::size_t K, std::uint64_t seed) {
  Tiny t{pkef::testing::tiny_dataset(users, items, K, seed), {}};
  t.adjs = build_all_adjacencies(t.ds);
  return t;
}

}  // namespace

TEST_CASE("propagate_layer examples") {
  const auto A = SparseMatrix::from_dense(DenseMatrix::from_rows({{0.5, 0.5}, {0.5, 0.5}}));
  Tape t;
  const Var x = t.variable(DenseMatrix::from_rows({{2, 0}, {0, 2}}));
  const LayerStep s = propagate_layer(t, A, x);
  CHECK(t.value(s.message) == DenseMatrix::from_rows({{1, 1}, {1, 1}}));
  CHECK(t.value(s.next) == DenseMatrix::from_rows({{3, 1}, {1, 3}}));

  const Var zero = t.variable(DenseMatrix(2, 2));
  CHECK(t.value(propagate_layer(t, A, zero).next) == DenseMatrix(2, 2));

  std::mt19937_64 rng(1);
  const auto r = random_matrix(3, 2, rng);
  const Var xr = t.variable(r);
  CHECK(t.value(propagate_layer(t, SparseMatrix::identity(3), xr).next) == 2.0 * r);
  CHECK_THROWS_AS(propagate_layer(t, SparseMatrix::identity(4), xr), ConfigError);
}

TEST_CASE("cascade handoff examples") {
  Tape t;
  const Var last = t.variable(DenseMatrix::from_rows({{1, 2}}));
  const Var first = t.variable(DenseMatrix::from_rows({{3, 4}}));
  CHECK(t.value(cascade_handoff(t, last, first)) == DenseMatrix::from_rows({{4, 6}}));
  const Var zero = t.variable(DenseMatrix(1, 2));
  const DenseMatrix handed = t.value(cascade_handoff(t, zero, first));
  CHECK(handed == t.value(first));
}

TEST_CASE("fusion examples") {
  const auto e_cas = DenseMatrix::from_rows({{2, 0}});
  const auto e_par = DenseMatrix::from_rows({{1, 1}});
  const DenseMatrix z(1, 2);

  check_close(fuse(FusionScheme::projection, e_cas, e_par, z), DenseMatrix::from_rows({{3, 0}}));
  const auto orth = DenseMatrix::from_rows({{0, 5}});
  check_close(fuse(FusionScheme::projection, e_cas, orth, z), e_cas);
  check_close(fuse(FusionScheme::projection, e_cas, e_cas, z), 2.0 * e_cas);

  const DenseMatrix W(4, 2), b(1, 4);
  check_close(fuse(FusionScheme::vanilla, e_cas, e_par, z, W, b), DenseMatrix::from_rows({{3.5, 0}}));
  // e_par = 0 leaves chunks [e_cas, 0, e_cas, 0], so a quarter of 2 e_cas is added
  check_close(fuse(FusionScheme::vanilla, e_cas, DenseMatrix(1, 2), z, W, b), 1.5 * e_cas);

  check_close(fuse(FusionScheme::summation, e_cas, e_par, z), DenseMatrix::from_rows({{3, 1}}));

  std::mt19937_64 rng(2);
  const auto c = random_matrix(3, 4, rng), p = random_matrix(3, 4, rng), zp = random_matrix(3, 4, rng);
  check_close(fuse(FusionScheme::linear, c, p, zp, {}, {}, DenseMatrix::identity(4)),
              fuse(FusionScheme::summation, c, p, zp));
  check_close(fuse(FusionScheme::linear, c, p, zp, {}, {}, DenseMatrix(4, 4)), c + zp);
}

TEST_CASE("orthogonal parallel knowledge leaves the cascade unchanged") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto e_cas = random_matrix(6, 5, rng);
    auto e_par = random_matrix(6, 5, rng);
    for (std::size_t r = 0; r < 6; ++r) {
      const auto p = project(e_par.row(r), e_cas.row(r)).vector;
      for (std::size_t c = 0; c < 5; ++c) e_par(r, c) -= p[c];
    }
    const auto z = random_matrix(6, 5, rng);
    check_close(fuse(FusionScheme::projection, e_cas, e_par, z), e_cas + z, 1e-10);
  }
}

TEST_CASE("forward on a single self-loop graph") {
  // K = 1, L = 1, identity adjacency: z1 = 3 z0 and z* = 4 z0.
  const PkfNetwork net(PkfConfig{2, 1, 3, {1}, FusionScheme::projection});
  ParameterStore store;
  std::mt19937_64 rng(4);
  net.register_parameters(store, rng);
  const NormalizedAdjacency adj{0, SparseMatrix::identity(3)};
  Tape t;
  const BoundParameters bound(t, store);
  const auto out = net.forward(t, bound, std::span(&adj, 1));
  const DenseMatrix& z0 = t.value(out.streams[0].cascade[0]);
  check_close(t.value(out.streams[0].cascade[1]), 3.0 * z0);
  check_close(t.value(out.cascade[0]), 4.0 * z0);
}

TEST_CASE("zero embeddings give zero outputs and shapes follow the graph") {
  const auto data = tiny(3, 4, 3, 5);
  for (FusionScheme s : kAllSchemes) {
    const PkfNetwork net(PkfConfig{3, 4, 2, {2, 1, 3}, s});
    ParameterStore store;
    std::mt19937_64 rng(6);
    net.register_parameters(store, rng);
    store.value("emb.user").fill(0.0);
    store.value("emb.item").fill(0.0);
    Tape t;
    const BoundParameters bound(t, store);
    const auto out = net.forward(t, bound, data.adjs);
    REQUIRE(out.cascade.size() == 3);
    REQUIRE(out.parallel.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(t.value(out.cascade[k]) == DenseMatrix(7, 2));
      CHECK(t.value(out.parallel[k]) == DenseMatrix(7, 2));
      CHECK(out.streams[k].cascade.size() == static_cast<std::size_t>(net.config().layers[k]) + 1);
    }
  }
}

TEST_CASE("invalid network configurations") {
  CHECK_THROWS_AS(PkfNetwork(PkfConfig{2, 2, 3, {}, FusionScheme::projection}), ConfigError);
  CHECK_THROWS_AS(PkfNetwork(PkfConfig{2, 2, 3, {1, 0}, FusionScheme::projection}), ConfigError);
  CHECK_THROWS_AS(parse_fusion("attention"), ConfigError);
}

TEST_CASE("forward matches the straight-line oracle for every scheme") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (FusionScheme s : kAllSchemes) {
      const std::size_t K = 2 + seed % 2;
      const auto data = tiny(2 + seed % 2, 3, K, 50 + seed);
      std::vector<int> layers;
      for (std::size_t k = 0; k < K; ++k) layers.push_back(1 + static_cast<int>((seed + k) % 3));
      const PkfNetwork net(PkfConfig{data.ds.user_count, data.ds.item_count, 3, layers, s});
      ParameterStore store;
      std::mt19937_64 rng(seed);
      net.register_parameters(store, rng);
      Tape t;
      const BoundParameters bound(t, store);
      const auto out = net.forward(t, bound, data.adjs);
      std::vector<oracle::Mat> dense;
      for (const auto& a : data.adjs) dense.push_back(oracle::to_mat(a.matrix.to_dense()));
      const auto ref = oracle::forward(dense, store, layers, s);
      for (std::size_t k = 0; k < K; ++k) {
        CHECK(oracle::max_diff(ref.cascade[k], t.value(out.cascade[k])) < 1e-10);
        CHECK(oracle::max_diff(ref.parallel[k], t.value(out.parallel[k])) < 1e-10);
      }
    }
  }
}

TEST_CASE("each parallel stream depends only on its own graph") {
  const auto a = tiny(3, 4, 3, 7);
  auto b = a;
  b.adjs[0] = NormalizedAdjacency{0, SparseMatrix::identity(7)};
  const PkfNetwork net(PkfConfig{3, 4, 3, {1, 2, 1}, FusionScheme::projection});
  ParameterStore store;
  std::mt19937_64 rng(8);
  net.register_parameters(store, rng);
  Tape t;
  const BoundParameters bound(t, store);
  const auto oa = net.forward(t, bound, a.adjs);
  const auto ob = net.forward(t, bound, b.adjs);
  CHECK(t.value(oa.parallel[1]) == t.value(ob.parallel[1]));
  CHECK(t.value(oa.parallel[2]) == t.value(ob.parallel[2]));
  CHECK_FALSE(t.value(oa.parallel[0]) == t.value(ob.parallel[0]));
  // the cascade, in contrast, carries upstream changes downstream
  CHECK_FALSE(t.value(oa.cascade[2]) == t.value(ob.cascade[2]));
}

TEST_CASE("network gradients match finite differences") {
  const auto data = tiny(2, 3, 2, 9);
  for (FusionScheme s : {FusionScheme::none, FusionScheme::projection, FusionScheme::vanilla,
                         FusionScheme::summation, FusionScheme::linear}) {
    CAPTURE(to_string(s));
    const PkfNetwork net(PkfConfig{2, 3, 3, {2, 1}, s});
    ParameterStore store;
    std::mt19937_64 rng(10);
    net.register_parameters(store, rng);
    const auto r = pkef::testing::check_store_gradients(store, [&](Tape& t, const BoundParameters& bound) {
      const auto out = net.forward(t, bound, data.adjs);
      Var total = pkef::testing::random_projection(t, out.cascade[1], 11);
      if (!out.parallel.empty()) {
        total = ops::add(t, total, pkef::testing::random_projection(t, out.parallel[0], 12));
      }
      return total;
    });
    CHECK(r.max_rel < 1e-4);
  }
}

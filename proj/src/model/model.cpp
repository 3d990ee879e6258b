#include "pkef/model/model.hpp"

#include <algorithm>
#include <random>

#include "pkef/core/ops.hpp"
#include "pkef/errors.hpp"

namespace pkef {
namespace {

PkfConfig network_config(const ModelConfig& c) {
  return PkfConfig{c.users, c.items, c.dim, c.layers, c.fusion};
}

HeadConfig head_config(const ModelConfig& c) {
  return HeadConfig{c.head, c.behavior_count(), c.dim, c.gamma, c.tower};
}

std::vector<std::uint32_t> offset(std::span<const Index> ids, std::size_t by) {
  std::vector<std::uint32_t> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) out[i] = static_cast<std::uint32_t>(ids[i] + by);
  return out;
}

struct Columns {
  std::vector<Index> users, pos, neg;
};

Columns split(std::span<const Triple> triples) {
  Columns c;
  c.users.reserve(triples.size());
  c.pos.reserve(triples.size());
  c.neg.reserve(triples.size());
  for (const auto& t : triples) {
    c.users.push_back(t.user);
    c.pos.push_back(t.pos);
    c.neg.push_back(t.neg);
  }
  return c;
}

DenseMatrix gather(const DenseMatrix& m, std::span<const std::uint32_t> rows) {
  DenseMatrix out(rows.size(), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto src = m.row(rows[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

const std::vector<std::string> kPropagationPrefixes{"emb.", "fuse."};

}  // namespace

Model::Model(ModelConfig config, std::uint64_t seed)
    : config_(std::move(config)),
      network_(network_config(config_)),
      head_(head_config(config_)) {
  if (config_.gamma < 0.0) throw ConfigError("gamma must be non-negative");
  std::mt19937_64 rng(seed);
  network_.register_parameters(params_, rng);
  head_.register_parameters(params_, rng);
}

BehaviorOutputs Model::forward(Tape& t, const BoundParameters& bound,
                               std::span<const NormalizedAdjacency> adjs) const {
  return network_.forward(t, bound, adjs);
}

std::vector<Var> Model::gather_users(Tape& t, std::span<const Var> reps,
                                     std::span<const Index> users) const {
  std::vector<Var> out;
  for (Var r : reps) out.push_back(ops::gather_rows(t, r, offset(users, 0)));
  return out;
}

std::vector<Var> Model::gather_items(Tape& t, std::span<const Var> reps,
                                     std::span<const Index> items) const {
  std::vector<Var> out;
  for (Var r : reps) out.push_back(ops::gather_rows(t, r, offset(items, config_.users)));
  return out;
}

Var Model::cascade_scores(Tape& t, const BoundParameters& bound, const BehaviorOutputs& out,
                          std::span<const Index> users, std::span<const Index> items,
                          std::size_t k) const {
  const auto u = gather_users(t, out.cascade, users);
  const auto v = gather_items(t, out.cascade, items);
  return head_.cascade_scores(t, bound, u, v, k);
}

Var Model::parallel_scores(Tape& t, const BehaviorOutputs& out, std::span<const Index> users,
                           std::span<const Index> items, std::size_t k) const {
  if (out.parallel.empty()) throw ConfigError("model has no parallel stream");
  const Var p = out.parallel.at(k);
  return predict_parallel(t, ops::gather_rows(t, p, offset(users, 0)),
                          ops::gather_rows(t, p, offset(items, config_.users)));
}

Var Model::unique_scores(Tape& t, const BehaviorOutputs& out, std::span<const Index> users,
                         std::span<const Index> items, std::size_t source,
                         std::size_t guide) const {
  const Var zs = out.cascade.at(source);
  const Var zg = out.cascade.at(guide);
  const auto u = offset(users, 0);
  const auto v = offset(items, config_.users);
  return predict_unique(t, ops::gather_rows(t, zs, u), ops::gather_rows(t, zg, u),
                        ops::gather_rows(t, zs, v), ops::gather_rows(t, zg, v));
}

StepLoss Model::loss(Tape& t, const BoundParameters& bound, const BehaviorOutputs& out,
                     const StepBatch& batch, const LossWeights& weights, double mu) const {
  if (weights.size() != config_.behavior_count()) {
    throw ConfigError("loss weights need one entry per behavior");
  }
  std::vector<ScoredPairs> parallel, cascade;
  for (std::size_t k = 0; k < batch.bpr.size(); ++k) {
    if (batch.bpr[k].empty() || weights[k] == 0.0) continue;
    const Columns c = split(batch.bpr[k]);
    cascade.push_back({k, cascade_scores(t, bound, out, c.users, c.pos, k),
                       cascade_scores(t, bound, out, c.users, c.neg, k)});
    if (config_.has_parallel_stream()) {
      parallel.push_back({k, parallel_scores(t, out, c.users, c.pos, k),
                          parallel_scores(t, out, c.users, c.neg, k)});
    }
  }
  std::vector<UniqueScoredPairs> unique;
  if (config_.has_unique_loss()) {
    for (const auto& u : batch.unique) {
      if (u.triples.empty() || weights[u.guide] == 0.0) continue;
      const Columns c = split(u.triples);
      unique.push_back({u.source, u.guide,
                        unique_scores(t, out, c.users, c.pos, u.source, u.guide),
                        unique_scores(t, out, c.users, c.neg, u.source, u.guide)});
    }
  }
  StepLoss l;
  l.parallel = parallel_loss(t, parallel, weights);
  l.cascade = cascade_loss(t, cascade, weights);
  l.unique = unique_loss(t, unique, weights);
  l.penalty = l2_penalty(t, bound, mu);
  l.total = total_loss(t, l.parallel, l.cascade, l.unique, l.penalty);
  return l;
}

FrozenOutputs Model::freeze(std::span<const NormalizedAdjacency> adjs) const {
  Tape t;
  t.set_grad_enabled(false);
  const BoundParameters bound(t, params_);
  const BehaviorOutputs out = network_.forward(t, bound, adjs);
  FrozenOutputs f;
  for (Var v : out.cascade) f.cascade.push_back(t.value(v));
  for (Var v : out.parallel) f.parallel.push_back(t.value(v));
  return f;
}

std::vector<double> Model::score_items(const FrozenOutputs& frozen, Index user,
                                       std::span<const Index> items, std::size_t k) const {
  const std::vector<Index> users(items.size(), user);
  Tape t;
  t.set_grad_enabled(false);
  const BoundParameters bound(t, params_, kPropagationPrefixes);
  std::vector<Var> u, v;
  const auto urows = offset(users, 0);
  const auto vrows = offset(items, config_.users);
  for (const auto& z : frozen.cascade) {
    u.push_back(t.constant(gather(z, urows)));
    v.push_back(t.constant(gather(z, vrows)));
  }
  const Var s = head_.cascade_scores(t, bound, u, v, k);
  auto values = t.value(s).values();
  return {values.begin(), values.end()};
}

DenseMatrix Model::gate_weights(const FrozenOutputs& frozen, std::span<const Index> users,
                                std::span<const Index> items, std::size_t k) const {
  Tape t;
  t.set_grad_enabled(false);
  const BoundParameters bound(t, params_, kPropagationPrefixes);
  std::vector<Var> u, v;
  const auto urows = offset(users, 0);
  const auto vrows = offset(items, config_.users);
  for (const auto& z : frozen.cascade) {
    u.push_back(t.constant(gather(z, urows)));
    v.push_back(t.constant(gather(z, vrows)));
  }
  return t.value(head_.gates(t, bound, u, v, k));
}

}  // namespace pkef

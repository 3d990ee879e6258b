#include "pkef/experts/heads.hpp"

#include "pkef/core/ops.hpp"
#include "pkef/errors.hpp"

namespace pkef {
namespace {

std::string indexed(const char* prefix, std::size_t k) { return prefix + std::to_string(k); }

// x scaled by the j-th entry of a 1 x n row parameter.
Var scale_by_entry(Tape& t, Var x, Var row, std::size_t j) {
  const Var w = ops::column(t, row, j);
  const Var broadcast = ops::gather_rows(t, w, std::vector<std::uint32_t>(t.value(x).rows(), 0));
  return ops::scale_rows(t, x, broadcast);
}

}  // namespace

std::string to_string(HeadVariant v) {
  switch (v) {
    case HeadVariant::pme: return "pme";
    case HeadVariant::shared_bottom: return "sb";
    case HeadVariant::bilinear: return "bilinear";
    case HeadVariant::mmoe: return "mmoe";
    case HeadVariant::ple: return "ple";
  }
  return "?";
}

HeadVariant parse_head(const std::string& s) {
  if (s == "pme") return HeadVariant::pme;
  if (s == "sb" || s == "shared-bottom") return HeadVariant::shared_bottom;
  if (s == "bilinear") return HeadVariant::bilinear;
  if (s == "mmoe") return HeadVariant::mmoe;
  if (s == "ple") return HeadVariant::ple;
  throw ConfigError("unknown head variant '" + s + "'");
}

std::string to_string(TowerKind t) { return t == TowerKind::sum ? "sum" : "linear"; }

TowerKind parse_tower(const std::string& s) {
  if (s == "sum") return TowerKind::sum;
  if (s == "linear") return TowerKind::linear;
  throw ConfigError("unknown tower '" + s + "'");
}

Var make_experts(Tape& t, Var z_user, Var z_item) { return ops::mul(t, z_user, z_item); }

Disentangled disentangle(Tape& t, Var q_other, Var q_guide, double gamma) {
  const Var proj = ops::row_project(t, q_other, q_guide, ops::ProjectionGrad::stop_coefficient);
  return {ops::scale(t, proj, gamma), ops::sub(t, q_other, proj)};
}

Var gate_weights(Tape& t, Var z_user, Var z_item, Var weight, Var bias) {
  const Var input = ops::concat_cols(t, z_user, z_item);
  return ops::row_softmax(t, ops::add_row(t, ops::matmul_nt(t, input, weight), bias));
}

Var aggregate_predict(Tape& t, Var gates, std::span<const Var> parts, Var tower) {
  if (t.value(gates).cols() != parts.size()) {
    throw ConfigError("aggregate_predict: gate width does not match expert count");
  }
  std::vector<Var> weighted;
  for (std::size_t j = 0; j < parts.size(); ++j) {
    weighted.push_back(ops::scale_rows(t, parts[j], ops::column(t, gates, j)));
  }
  const Var mixed = ops::add_n(t, weighted);
  return tower.valid() ? ops::matmul_nt(t, mixed, tower) : ops::row_sum(t, mixed);
}

Var pme_scores(Tape& t, std::span<const Var> experts, Var gates, std::size_t k, double gamma,
               Var tower) {
  std::vector<Var> parts;
  for (std::size_t j = 0; j < experts.size(); ++j) {
    parts.push_back(j == k ? experts[k] : disentangle(t, experts[j], experts[k], gamma).shared);
  }
  return aggregate_predict(t, gates, parts, tower);
}

Var predict_parallel(Tape& t, Var p_user, Var p_item) { return ops::row_dot(t, p_user, p_item); }

Var predict_unique(Tape& t, Var source_user, Var guide_user, Var source_item, Var guide_item) {
  const Var u = disentangle(t, source_user, guide_user, 1.0).unique;
  const Var v = disentangle(t, source_item, guide_item, 1.0).unique;
  return ops::row_dot(t, u, v);
}

PredictionHead::PredictionHead(HeadConfig config) : config_(config) {
  if (config_.behaviors == 0) throw ConfigError("head needs at least one behavior");
  if (config_.dim == 0) throw ConfigError("head needs a positive dimension");
}

bool PredictionHead::gated() const {
  return config_.variant == HeadVariant::pme || config_.variant == HeadVariant::mmoe ||
         config_.variant == HeadVariant::ple;
}

void PredictionHead::register_parameters(ParameterStore& store, std::mt19937_64& rng) const {
  const std::size_t behaviors = config_.behaviors;
  const std::size_t d = config_.dim;
  auto coupling = [&] {
    store.add("head.coupling", DenseMatrix(1, behaviors, 1.0 / static_cast<double>(behaviors)));
  };
  switch (config_.variant) {
    case HeadVariant::pme:
      for (std::size_t k = 0; k < behaviors; ++k) {
        store.add(indexed("pme.gate.W.", k), DenseMatrix(behaviors, 2 * d));
        store.add(indexed("pme.gate.b.", k), DenseMatrix(1, behaviors));
        if (config_.tower == TowerKind::linear) {
          store.add(indexed("pme.tower.", k), DenseMatrix(1, d, 1.0));
        }
      }
      break;
    case HeadVariant::bilinear:
      for (std::size_t k = 0; k < behaviors; ++k) {
        store.add(indexed("bilinear.W.", k), xavier_uniform(d, d, rng));
      }
      break;
    case HeadVariant::shared_bottom:
      coupling();
      store.add("sb.shared", xavier_uniform(d, d, rng));
      for (std::size_t k = 0; k < behaviors; ++k) {
        store.add(indexed("sb.tower.", k), xavier_uniform(1, d, rng));
      }
      break;
    case HeadVariant::mmoe:
      coupling();
      for (std::size_t j = 0; j < behaviors; ++j) {
        store.add(indexed("mmoe.expert.", j), xavier_uniform(d, d, rng));
      }
      for (std::size_t k = 0; k < behaviors; ++k) {
        store.add(indexed("mmoe.gate.W.", k), DenseMatrix(behaviors, 2 * d));
        store.add(indexed("mmoe.gate.b.", k), DenseMatrix(1, behaviors));
      }
      break;
    case HeadVariant::ple:
      coupling();
      store.add("ple.expert.shared", xavier_uniform(d, d, rng));
      for (std::size_t k = 0; k < behaviors; ++k) {
        store.add(indexed("ple.expert.", k), xavier_uniform(d, d, rng));
        store.add(indexed("ple.gate.W.", k), DenseMatrix(2, 2 * d));
        store.add(indexed("ple.gate.b.", k), DenseMatrix(1, 2));
      }
      break;
  }
}

Var PredictionHead::coupled(Tape& t, const BoundParameters& params,
                            std::span<const Var> reps) const {
  const Var weights = params["head.coupling"];
  std::vector<Var> terms;
  for (std::size_t j = 0; j < reps.size(); ++j) terms.push_back(scale_by_entry(t, reps[j], weights, j));
  return ops::add_n(t, terms);
}

Var PredictionHead::gates(Tape& t, const BoundParameters& params, std::span<const Var> users,
                          std::span<const Var> items, std::size_t k) const {
  switch (config_.variant) {
    case HeadVariant::pme:
      return gate_weights(t, users[k], items[k], params[indexed("pme.gate.W.", k)],
                          params[indexed("pme.gate.b.", k)]);
    case HeadVariant::mmoe:
      return gate_weights(t, coupled(t, params, users), coupled(t, params, items),
                          params[indexed("mmoe.gate.W.", k)], params[indexed("mmoe.gate.b.", k)]);
    case HeadVariant::ple:
      return gate_weights(t, coupled(t, params, users), coupled(t, params, items),
                          params[indexed("ple.gate.W.", k)], params[indexed("ple.gate.b.", k)]);
    default:
      throw ConfigError("head variant '" + to_string(config_.variant) + "' has no gates");
  }
}

std::vector<std::string> PredictionHead::expert_labels() const {
  std::vector<std::string> labels;
  if (config_.variant == HeadVariant::ple) return {"task", "shared"};
  for (std::size_t j = 0; j < config_.behaviors; ++j) labels.push_back(indexed("expert", j));
  return labels;
}

Var PredictionHead::cascade_scores(Tape& t, const BoundParameters& params,
                                   std::span<const Var> users, std::span<const Var> items,
                                   std::size_t k) const {
  if (users.size() != config_.behaviors || items.size() != config_.behaviors) {
    throw ConfigError("cascade_scores: expected one representation per behavior");
  }
  if (k >= config_.behaviors) throw ConfigError("cascade_scores: behavior out of range");
  switch (config_.variant) {
    case HeadVariant::pme: {
      std::vector<Var> experts;
      for (std::size_t j = 0; j < users.size(); ++j) experts.push_back(make_experts(t, users[j], items[j]));
      const Var tower =
          config_.tower == TowerKind::linear ? params[indexed("pme.tower.", k)] : Var{};
      return pme_scores(t, experts, gates(t, params, users, items, k), k, config_.gamma, tower);
    }
    case HeadVariant::bilinear:
      return ops::row_dot(t, ops::matmul_nt(t, users[k], params[indexed("bilinear.W.", k)]),
                          items[k]);
    case HeadVariant::shared_bottom: {
      const Var pair = ops::mul(t, coupled(t, params, users), coupled(t, params, items));
      const Var bottom = ops::matmul_nt(t, pair, params["sb.shared"]);
      return ops::matmul_nt(t, bottom, params[indexed("sb.tower.", k)]);
    }
    case HeadVariant::mmoe: {
      const Var pair = ops::mul(t, coupled(t, params, users), coupled(t, params, items));
      std::vector<Var> experts;
      for (std::size_t j = 0; j < config_.behaviors; ++j) {
        experts.push_back(ops::matmul_nt(t, pair, params[indexed("mmoe.expert.", j)]));
      }
      return aggregate_predict(t, gates(t, params, users, items, k), experts, Var{});
    }
    case HeadVariant::ple: {
      const Var pair = ops::mul(t, coupled(t, params, users), coupled(t, params, items));
      const Var experts[] = {ops::matmul_nt(t, pair, params[indexed("ple.expert.", k)]),
                             ops::matmul_nt(t, pair, params["ple.expert.shared"])};
      return aggregate_predict(t, gates(t, params, users, items, k), experts, Var{});
    }
  }
  throw ConfigError("unhandled head variant");
}

}  // namespace pkef

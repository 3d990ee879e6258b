#include "pkef/propagation/pkf.hpp"

#include "pkef/core/ops.hpp"
#include "pkef/errors.hpp"

namespace pkef {

std::string to_string(FusionScheme s) {
  switch (s) {
    case FusionScheme::none: return "none";
    case FusionScheme::projection: return "projection";
    case FusionScheme::vanilla: return "vanilla";
    case FusionScheme::summation: return "summation";
    case FusionScheme::linear: return "linear";
  }
  return "?";
}

FusionScheme parse_fusion(const std::string& s) {
  if (s == "none") return FusionScheme::none;
  if (s == "projection") return FusionScheme::projection;
  if (s == "vanilla") return FusionScheme::vanilla;
  if (s == "summation") return FusionScheme::summation;
  if (s == "linear") return FusionScheme::linear;
  throw ConfigError("unknown fusion scheme '" + s + "'");
}

LayerStep propagate_layer(Tape& t, const SparseMatrix& adj, Var x) {
  const Var message = ops::spmm(t, adj, x);
  return {message, ops::add(t, message, x)};
}

Var cascade_handoff(Tape& t, Var last_layer, Var first_layer) {
  return ops::add(t, last_layer, first_layer);
}

Var fuse_projection(Tape& t, Var e_cas, Var e_par, Var z_prev) {
  const Var collinear = ops::row_project(t, e_par, e_cas, ops::ProjectionGrad::full);
  const Var terms[] = {e_cas, z_prev, collinear};
  return ops::add_n(t, terms);
}

Var fuse_vanilla(Tape& t, Var e_cas, Var e_par, Var z_prev, Var weight, Var bias) {
  const Var w = ops::row_softmax(t, ops::add_row(t, ops::matmul_nt(t, e_cas, weight), bias));
  const Var chunks[] = {e_cas, e_par, ops::sub(t, e_cas, e_par), ops::mul(t, e_cas, e_par)};
  std::vector<Var> terms{e_cas, z_prev};
  for (std::size_t j = 0; j < 4; ++j) {
    terms.push_back(ops::scale_rows(t, chunks[j], ops::column(t, w, j)));
  }
  return ops::add_n(t, terms);
}

Var fuse_summation(Tape& t, Var e_cas, Var e_par, Var z_prev) {
  const Var terms[] = {e_cas, z_prev, e_par};
  return ops::add_n(t, terms);
}

Var fuse_linear(Tape& t, Var e_cas, Var e_par, Var z_prev, Var transform) {
  const Var terms[] = {e_cas, z_prev, ops::matmul_nt(t, e_par, transform)};
  return ops::add_n(t, terms);
}

PkfNetwork::PkfNetwork(PkfConfig config) : config_(std::move(config)) {
  if (config_.layers.empty()) throw ConfigError("PKF needs at least one behavior");
  for (int l : config_.layers) {
    if (l < 1) throw ConfigError("every behavior needs at least one GCN layer");
  }
  if (config_.dim == 0) throw ConfigError("embedding size must be positive");
  if (config_.users == 0 || config_.items == 0) throw ConfigError("empty user or item set");
}

std::string PkfNetwork::fusion_weight_name(std::size_t k, std::size_t l) {
  return "fuse.W." + std::to_string(k) + "." + std::to_string(l);
}
std::string PkfNetwork::fusion_bias_name(std::size_t k, std::size_t l) {
  return "fuse.b." + std::to_string(k) + "." + std::to_string(l);
}
std::string PkfNetwork::fusion_transform_name(std::size_t k, std::size_t l) {
  return "fuse.T." + std::to_string(k) + "." + std::to_string(l);
}

void PkfNetwork::register_parameters(ParameterStore& store, std::mt19937_64& rng) const {
  const std::size_t d = config_.dim;
  store.add("emb.user", xavier_uniform(config_.users, d, rng));
  store.add("emb.item", xavier_uniform(config_.items, d, rng));
  for (std::size_t k = 0; k < config_.behavior_count(); ++k) {
    for (std::size_t l = 0; l < static_cast<std::size_t>(config_.layers[k]); ++l) {
      if (config_.fusion == FusionScheme::vanilla) {
        store.add(fusion_weight_name(k, l), xavier_uniform(4, d, rng));
        store.add(fusion_bias_name(k, l), DenseMatrix(1, 4));
      } else if (config_.fusion == FusionScheme::linear) {
        store.add(fusion_transform_name(k, l), xavier_uniform(d, d, rng));
      }
    }
  }
}

Var PkfNetwork::initial_embeddings(Tape& t, const BoundParameters& params) const {
  return ops::concat_rows(t, params["emb.user"], params["emb.item"]);
}

BehaviorOutputs PkfNetwork::forward(Tape& t, const BoundParameters& params,
                                    std::span<const NormalizedAdjacency> adjs) const {
  const std::size_t behaviors = config_.behavior_count();
  if (adjs.size() != behaviors) {
    throw ConfigError("expected " + std::to_string(behaviors) + " adjacencies, got " +
                      std::to_string(adjs.size()));
  }
  const Var x0 = initial_embeddings(t, params);
  BehaviorOutputs out;
  Var cascade_input = x0;
  for (std::size_t k = 0; k < behaviors; ++k) {
    const SparseMatrix& adj = adjs[k].matrix;
    const std::size_t depth = static_cast<std::size_t>(config_.layers[k]);
    StreamState state;
    std::vector<Var> parallel_messages;
    if (config_.has_parallel_stream()) {
      state.parallel.push_back(x0);
      for (std::size_t l = 0; l < depth; ++l) {
        const LayerStep step = propagate_layer(t, adj, state.parallel.back());
        parallel_messages.push_back(step.message);
        state.parallel.push_back(step.next);
      }
    }
    state.cascade.push_back(cascade_input);
    for (std::size_t l = 0; l < depth; ++l) {
      const Var z = state.cascade.back();
      const Var e_cas = ops::spmm(t, adj, z);
      Var next;
      switch (config_.fusion) {
        case FusionScheme::none: next = ops::add(t, e_cas, z); break;
        case FusionScheme::projection:
          next = fuse_projection(t, e_cas, parallel_messages[l], z);
          break;
        case FusionScheme::vanilla:
          next = fuse_vanilla(t, e_cas, parallel_messages[l], z, params[fusion_weight_name(k, l)],
                              params[fusion_bias_name(k, l)]);
          break;
        case FusionScheme::summation:
          next = fuse_summation(t, e_cas, parallel_messages[l], z);
          break;
        case FusionScheme::linear:
          next = fuse_linear(t, e_cas, parallel_messages[l], z,
                             params[fusion_transform_name(k, l)]);
          break;
      }
      state.cascade.push_back(next);
    }
    out.cascade.push_back(ops::add_n(t, state.cascade));
    if (config_.has_parallel_stream()) out.parallel.push_back(ops::add_n(t, state.parallel));
    if (k + 1 < behaviors) {
      cascade_input = cascade_handoff(t, state.cascade.back(), state.cascade.front());
    }
    out.streams.push_back(std::move(state));
  }
  return out;
}

}  // namespace pkef

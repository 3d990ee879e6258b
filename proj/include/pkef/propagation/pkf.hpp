#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pkef/core/params.hpp"
#include "pkef/core/sparse.hpp"
#include "pkef/core/tape.hpp"
#include "pkef/data/graph.hpp"

namespace pkef {

// How parallel-stream knowledge enters the cascade update. `none` is the
// plain cascade of the ablation baselines and disables the parallel stream.
enum class FusionScheme { none, projection, vanilla, summation, linear };

std::string to_string(FusionScheme s);
FusionScheme parse_fusion(const std::string& s);

struct LayerStep {
  Var message;  // A_hat * x
  Var next;     // message + x
};

LayerStep propagate_layer(Tape& t, const SparseMatrix& adj, Var x);

// z^{k+1,0} = z^{k,L_k} + z^{k,0}
Var cascade_handoff(Tape& t, Var last_layer, Var first_layer);

Var fuse_projection(Tape& t, Var e_cas, Var e_par, Var z_prev);
// weight is 4 x d, bias 1 x 4; the softmax selects among
// [e_cas, e_par, e_cas - e_par, e_cas * e_par].
Var fuse_vanilla(Tape& t, Var e_cas, Var e_par, Var z_prev, Var weight, Var bias);
Var fuse_summation(Tape& t, Var e_cas, Var e_par, Var z_prev);
// transform is d x d and acts on e_par.
Var fuse_linear(Tape& t, Var e_cas, Var e_par, Var z_prev, Var transform);

struct StreamState {
  std::vector<Var> cascade;   // z^{k,0..L_k}
  std::vector<Var> parallel;  // p^{k,0..L_k}; empty without a parallel stream
};

struct BehaviorOutputs {
  std::vector<Var> cascade;   // z^{k,*} per behavior, (|U|+|V|) x d
  std::vector<Var> parallel;  // p^{k,*} per behavior; empty without a parallel stream
  std::vector<StreamState> streams;
};

struct PkfConfig {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t dim = 64;
  std::vector<int> layers;  // one entry per behavior, upstream first
  FusionScheme fusion = FusionScheme::projection;

  std::size_t behavior_count() const { return layers.size(); }
  bool has_parallel_stream() const { return fusion != FusionScheme::none; }
};

// Embedding tables plus cascade/parallel propagation with per-layer fusion.
class PkfNetwork {
 public:
  explicit PkfNetwork(PkfConfig config);

  const PkfConfig& config() const { return config_; }

  // Registers "emb.user", "emb.item" and the fusion parameters of the
  // active scheme.
  void register_parameters(ParameterStore& store, std::mt19937_64& rng) const;

  // Initial node matrix x_u || y_v, users first.
  Var initial_embeddings(Tape& t, const BoundParameters& params) const;

  BehaviorOutputs forward(Tape& t, const BoundParameters& params,
                          std::span<const NormalizedAdjacency> adjs) const;

  static std::string fusion_weight_name(std::size_t k, std::size_t l);
  static std::string fusion_bias_name(std::size_t k, std::size_t l);
  static std::string fusion_transform_name(std::size_t k, std::size_t l);

 private:
  PkfConfig config_;
};

}  // namespace pkef

#include "pkef/eval/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pkef/core/ops.hpp"
#include "pkef/errors.hpp"
#include "pkef/experts/heads.hpp"
#include "pkef/model/model.hpp"
#include "pkef/objective/loss.hpp"

namespace pkef {

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw ConfigError("pearson: length mismatch");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

std::optional<double> indicator_pearson(std::size_t n, std::span<const Index> a,
                                        std::span<const Index> b) {
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double total = static_cast<double>(n);
  if (a.empty() || b.empty() || a.size() == n || b.size() == n) return std::nullopt;
  std::size_t both = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++both, ++ia, ++ib;
    }
  }
  const double cov = total * static_cast<double>(both) - na * nb;
  return cov / std::sqrt(na * (total - na) * nb * (total - nb));
}

std::optional<double> mean_behavior_correlation(const BehaviorDataset& ds, Index user) {
  double sum = 0.0;
  std::size_t defined = 0;
  for (std::size_t i = 0; i < ds.behavior_count(); ++i) {
    for (std::size_t j = i + 1; j < ds.behavior_count(); ++j) {
      const auto r = indicator_pearson(ds.item_count, ds.behaviors[i].items_of(user),
                                       ds.behaviors[j].items_of(user));
      if (!r) continue;
      sum += *r;
      ++defined;
    }
  }
  if (defined == 0) return std::nullopt;
  return sum / static_cast<double>(defined);
}

nlohmann::json CaseStudy::to_json() const {
  nlohmann::json groups_json = nlohmann::json::array();
  for (const auto& g : groups) {
    groups_json.push_back({{"low", g.low},
                           {"high", g.high},
                           {"users", g.users.size()},
                           {"mean_interactions", g.mean_interactions},
                           {"metrics", g.report.to_json()}});
  }
  return {{"groups", groups_json}, {"excluded_users", excluded_users}};
}

CaseStudy pearson_case_study(const BehaviorDataset& ds, std::span<const RankingResult> rankings,
                             std::size_t k, std::size_t group_count) {
  if (ds.behavior_count() < 2) throw ConfigError("case study needs at least two behaviors");
  if (group_count == 0) throw ConfigError("case study needs at least one group");
  std::vector<std::pair<std::size_t, double>> eligible;  // ranking index, correlation
  CaseStudy study;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    const auto c = mean_behavior_correlation(ds, rankings[i].user);
    if (c) {
      eligible.emplace_back(i, *c);
    } else {
      ++study.excluded_users;
    }
  }
  if (eligible.empty()) return study;
  double lo = eligible.front().second, hi = lo;
  for (const auto& e : eligible) {
    lo = std::min(lo, e.second);
    hi = std::max(hi, e.second);
  }
  const double width = (hi - lo) / static_cast<double>(group_count);
  std::vector<std::vector<RankingResult>> members(group_count);
  study.groups.resize(group_count);
  for (std::size_t g = 0; g < group_count; ++g) {
    study.groups[g].low = lo + width * static_cast<double>(g);
    study.groups[g].high = g + 1 == group_count ? hi : lo + width * static_cast<double>(g + 1);
  }
  for (const auto& [idx, corr] : eligible) {
    std::size_t g = width > 0.0 ? static_cast<std::size_t>((corr - lo) / width) : 0;
    g = std::min(g, group_count - 1);
    members[g].push_back(rankings[idx]);
    study.groups[g].users.push_back(rankings[idx].user);
  }
  for (std::size_t g = 0; g < group_count; ++g) {
    auto& group = study.groups[g];
    group.report = summarize(members[g], k);
    double interactions = 0.0;
    for (Index u : group.users) {
      for (const auto& b : ds.behaviors) interactions += static_cast<double>(b.items_of(u).size());
    }
    group.mean_interactions =
        group.users.empty() ? 0.0 : interactions / static_cast<double>(group.users.size());
  }
  return study;
}

nlohmann::json GateTable::to_json() const {
  nlohmann::json experts = nlohmann::json::array();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    experts.push_back({{"expert", labels[i]}, {"mean_weight", mean_weights[i]}});
  }
  return {{"experts", experts}, {"entropy", entropy}};
}

GateTable export_gate_weights(const Model& model, std::span<const NormalizedAdjacency> adjs,
                              const BehaviorDataset& ds) {
  if (!model.head().gated()) {
    throw ConfigError("gate export is unsupported for head '" +
                      to_string(model.config().head) + "'");
  }
  if (ds.test.empty()) throw ConfigError("gate export needs test pairs");
  std::vector<Index> users, items;
  for (const auto& p : ds.test) {
    users.push_back(p.user);
    items.push_back(p.item);
  }
  const FrozenOutputs frozen = model.freeze(adjs);
  const DenseMatrix g = model.gate_weights(frozen, users, items, ds.behavior_count() - 1);
  GateTable table;
  table.labels = model.head().expert_labels();
  table.mean_weights.assign(g.cols(), 0.0);
  for (std::size_t r = 0; r < g.rows(); ++r)
    for (std::size_t c = 0; c < g.cols(); ++c) table.mean_weights[c] += g(r, c);
  for (double& w : table.mean_weights) {
    w /= static_cast<double>(g.rows());
    if (w > 0.0) table.entropy -= w * std::log(w);
  }
  return table;
}

nlohmann::json DecouplingReport::to_json() const {
  return {{"pme_cross_gradient", pme_cross_gradient},
          {"coupled_cross_gradient", coupled_cross_gradient},
          {"conflict_cosine", conflict_cosine},
          {"conflict_magnitude", conflict_magnitude}};
}

namespace {

DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

double max_abs(const DenseMatrix& m) {
  double out = 0.0;
  for (double v : m.values()) out = std::max(out, std::abs(v));
  return out;
}

double norm(const DenseMatrix& m) {
  return std::sqrt(dot(m.values(), m.values()));
}

// Behavior k prefers the "positive" items when k is even and the
// "negative" items when k is odd.
Var opposing_bpr(Tape& t, Var pos_scores, Var neg_scores, std::size_t k) {
  return k % 2 == 0 ? bpr_mean(t, pos_scores, neg_scores, 1.0)
                    : bpr_mean(t, neg_scores, pos_scores, 1.0);
}

}  // namespace

DecouplingReport analyze_decoupling(std::uint64_t seed, std::size_t behaviors, std::size_t dim,
                                    std::size_t pairs) {
  if (behaviors < 2) throw ConfigError("decoupling analysis needs at least two behaviors");
  std::mt19937_64 rng(seed);
  std::vector<DenseMatrix> zu, zv_pos, zv_neg;
  for (std::size_t j = 0; j < behaviors; ++j) {
    zu.push_back(random_matrix(pairs, dim, rng));
    zv_pos.push_back(random_matrix(pairs, dim, rng));
    zv_neg.push_back(random_matrix(pairs, dim, rng));
  }
  std::vector<DenseMatrix> gate_w, gate_b;
  for (std::size_t j = 0; j < behaviors; ++j) {
    gate_w.push_back(random_matrix(behaviors, 2 * dim, rng));
    gate_b.push_back(random_matrix(1, behaviors, rng));
  }
  auto hadamard = [](DenseMatrix a, const DenseMatrix& b) {
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i) av[i] *= bv[i];
    return a;
  };

  DecouplingReport report;
  // PME: experts enter as leaves so their gradients can be read directly.
  for (std::size_t k = 0; k < behaviors; ++k) {
    Tape t;
    std::vector<Var> q_pos, q_neg;
    for (std::size_t j = 0; j < behaviors; ++j) {
      q_pos.push_back(t.variable(hadamard(zu[j], zv_pos[j])));
      q_neg.push_back(t.variable(hadamard(zu[j], zv_neg[j])));
    }
    const Var u = t.variable(zu[k]);
    const Var w = t.variable(gate_w[k]);
    const Var b = t.variable(gate_b[k]);
    const Var g_pos = gate_weights(t, u, t.variable(zv_pos[k]), w, b);
    const Var g_neg = gate_weights(t, u, t.variable(zv_neg[k]), w, b);
    const Var s_pos = pme_scores(t, q_pos, g_pos, k, 0.1, Var{});
    const Var s_neg = pme_scores(t, q_neg, g_neg, k, 0.1, Var{});
    t.backward(opposing_bpr(t, s_pos, s_neg, k));
    for (std::size_t j = 0; j < behaviors; ++j) {
      if (j == k) continue;
      report.pme_cross_gradient = std::max(
          {report.pme_cross_gradient, max_abs(t.grad(q_pos[j])), max_abs(t.grad(q_neg[j]))});
    }
  }

  // Coupled shared-bottom head: every behavior's loss reaches every input.
  PredictionHead sb(HeadConfig{HeadVariant::shared_bottom, behaviors, dim, 0.1, TowerKind::sum});
  ParameterStore store;
  sb.register_parameters(store, rng);
  // Correlated tasks: identical towers, so only the labels differ.
  for (std::size_t k = 1; k < behaviors; ++k) {
    store.value("sb.tower." + std::to_string(k)) = store.value("sb.tower.0");
  }
  for (std::size_t k = 0; k < behaviors; ++k) {
    Tape t;
    const BoundParameters params(t, store);
    std::vector<Var> u, v_pos, v_neg;
    for (std::size_t j = 0; j < behaviors; ++j) {
      u.push_back(t.variable(zu[j]));
      v_pos.push_back(t.variable(zv_pos[j]));
      v_neg.push_back(t.variable(zv_neg[j]));
    }
    const Var s_pos = sb.cascade_scores(t, params, u, v_pos, k);
    const Var s_neg = sb.cascade_scores(t, params, u, v_neg, k);
    t.backward(opposing_bpr(t, s_pos, s_neg, k));
    for (std::size_t j = 0; j < behaviors; ++j) {
      if (j == k) continue;
      report.coupled_cross_gradient =
          std::max({report.coupled_cross_gradient, max_abs(t.grad(u[j])),
                    max_abs(t.grad(v_pos[j])), max_abs(t.grad(v_neg[j]))});
    }
  }

  // Per-behavior gradients on the shared coupled pair vector e_u* o e_v*.
  const DenseMatrix& coupling = store.value("head.coupling");
  auto couple = [&](const std::vector<DenseMatrix>& reps) {
    DenseMatrix c(pairs, dim);
    for (std::size_t j = 0; j < behaviors; ++j) c += coupling(0, j) * reps[j];
    return c;
  };
  const DenseMatrix cu = couple(zu);
  const DenseMatrix pair_pos = hadamard(cu, couple(zv_pos));
  const DenseMatrix pair_neg = hadamard(cu, couple(zv_neg));
  std::vector<DenseMatrix> grads;
  for (std::size_t k = 0; k < 2; ++k) {
    Tape t;
    const Var x_pos = t.variable(pair_pos);
    const Var x_neg = t.variable(pair_neg);
    const Var shared = t.constant(store.value("sb.shared"));
    const Var tower = t.constant(store.value("sb.tower." + std::to_string(k)));
    auto score = [&](Var x) { return ops::matmul_nt(t, ops::matmul_nt(t, x, shared), tower); };
    t.backward(opposing_bpr(t, score(x_pos), score(x_neg), k));
    grads.push_back(t.grad(x_pos));
  }
  const double n0 = norm(grads[0]), n1 = norm(grads[1]);
  report.conflict_magnitude = std::min(n0, n1);
  report.conflict_cosine =
      n0 > 0.0 && n1 > 0.0 ? dot(grads[0].values(), grads[1].values()) / (n0 * n1) : 0.0;
  return report;
}

}  // namespace pkef

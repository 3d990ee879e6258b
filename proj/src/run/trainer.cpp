#include "pkef/run/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "pkef/errors.hpp"

namespace pkef {
namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::size_t epoch, std::size_t tag) {
  return mix(mix(mix(seed) ^ epoch) ^ tag);
}

std::vector<std::span<const Triple>> chunks(std::span<const Triple> all, std::size_t n) {
  std::vector<std::span<const Triple>> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t b = all.size() * i / n;
    const std::size_t e = all.size() * (i + 1) / n;
    out.push_back(all.subspan(b, e - b));
  }
  return out;
}

}  // namespace

EpochTriples sample_epoch(const BehaviorDataset& ds, const ModelConfig& model,
                          const LossWeights& weights, std::uint64_t seed, std::size_t epoch) {
  const std::size_t K = ds.behavior_count();
  EpochTriples e;
  e.bpr.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    if (weights[k] == 0.0 || ds.behaviors[k].size() == 0) continue;
    e.bpr[k] = sample_bpr_triples(ds, k, stream_seed(seed, epoch, k)).triples;
    std::mt19937_64 rng(stream_seed(seed, epoch, 1000 + k));
    std::shuffle(e.bpr[k].begin(), e.bpr[k].end(), rng);
  }
  if (model.has_unique_loss()) {
    for (std::size_t guide = 0; guide < K; ++guide) {
      if (weights[guide] == 0.0) continue;
      for (std::size_t source = 0; source < K; ++source) {
        if (source == guide) continue;
        const std::size_t tag = 2000 + source * K + guide;
        auto u = build_unique_triples(ds, source, guide, stream_seed(seed, epoch, tag));
        std::mt19937_64 rng(stream_seed(seed, epoch, tag + K * K));
        std::shuffle(u.triples.begin(), u.triples.end(), rng);
        if (!u.triples.empty()) e.unique.push_back(std::move(u));
      }
    }
  }
  return e;
}

std::vector<StepBatch> plan_steps(const EpochTriples& epoch, std::size_t batch) {
  if (batch == 0) throw ConfigError("batch size must be positive");
  // The target behavior drives the step count; if it carries no loss the
  // largest sampled set does.
  std::size_t driver = epoch.bpr.empty() ? 0 : epoch.bpr.back().size();
  if (driver == 0) {
    for (const auto& b : epoch.bpr) driver = std::max(driver, b.size());
  }
  const std::size_t steps = std::max<std::size_t>(1, (driver + batch - 1) / batch);
  std::vector<StepBatch> out(steps);
  for (const auto& set : epoch.bpr) {
    const auto parts = chunks(set, steps);
    for (std::size_t s = 0; s < steps; ++s) out[s].bpr.push_back(parts[s]);
  }
  for (const auto& u : epoch.unique) {
    const auto parts = chunks(u.triples, steps);
    for (std::size_t s = 0; s < steps; ++s) {
      out[s].unique.push_back({u.source, u.guide, parts[s]});
    }
  }
  return out;
}

EpochRecord train_step(Model& model, AdamOptimizer& opt,
                       std::span<const NormalizedAdjacency> adjs, const StepBatch& batch,
                       const LossWeights& weights, double mu) {
  Tape t;
  const BoundParameters bound(t, model.params());
  const BehaviorOutputs out = model.forward(t, bound, adjs);
  const StepLoss l = model.loss(t, bound, out, batch, weights, mu);
  EpochRecord r;
  r.loss_par = t.value(l.parallel)(0, 0);
  r.loss_cas = t.value(l.cascade)(0, 0);
  r.loss_uni = t.value(l.unique)(0, 0);
  r.loss_total = t.value(l.total)(0, 0);
  if (!std::isfinite(r.loss_total)) {
    throw TrainingError("loss became non-finite at optimizer step " +
                        std::to_string(opt.step_count() + 1));
  }
  t.backward(l.total);
  const auto grads = bound.gradients(t);
  opt.step(model.params(), grads);
  return r;
}

TrainResult train_model(Model& model, std::span<const NormalizedAdjacency> adjs,
                        const BehaviorDataset& ds, std::span<const Interaction> validation,
                        const TrainConfig& config,
                        const std::function<void(const EpochRecord&)>& on_epoch) {
  if (config.weights.size() != ds.behavior_count()) {
    throw ConfigError("loss weights need one entry per behavior");
  }
  if (ds.test.empty() && validation.empty()) throw ConfigError("no held-out pairs to evaluate");
  const std::span<const Interaction> monitor = validation.empty() ? std::span(ds.test) : validation;
  AdamOptimizer opt(config.adam);
  TrainResult result;
  std::vector<DenseMatrix> best;
  double best_hr = -1.0;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const EpochTriples triples = sample_epoch(ds, model.config(), config.weights, config.seed, epoch);
    const auto steps = plan_steps(triples, config.batch);
    EpochRecord rec;
    rec.epoch = epoch;
    for (const auto& step : steps) {
      const EpochRecord s = train_step(model, opt, adjs, step, config.weights, config.mu);
      rec.loss_par += s.loss_par;
      rec.loss_cas += s.loss_cas;
      rec.loss_uni += s.loss_uni;
      rec.loss_total += s.loss_total;
    }
    const double n = static_cast<double>(steps.size());
    rec.loss_par /= n;
    rec.loss_cas /= n;
    rec.loss_uni /= n;
    rec.loss_total /= n;
    const MetricReport m = evaluate_pairs(model, adjs, ds, monitor, config.k).report;
    rec.hr = m.hr;
    rec.ndcg = m.ndcg;
    result.trace.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (rec.hr > best_hr) {
      best_hr = rec.hr;
      result.best_epoch = epoch;
      best.clear();
      for (const auto& p : model.params()) best.push_back(p.value);
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }
  }
  if (!best.empty()) {
    for (std::size_t i = 0; i < best.size(); ++i) model.params()[i].value = std::move(best[i]);
  }
  if (!ds.test.empty()) result.report = evaluate_model(model, adjs, ds, config.k).report;
  return result;
}

void write_metrics_csv(std::span<const EpochRecord> trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  out << "epoch,hr,ndcg,loss_par,loss_cas,loss_uni,loss_total\n";
  for (const auto& r : trace) {
    out << r.epoch << ',' << r.hr << ',' << r.ndcg << ',' << r.loss_par << ',' << r.loss_cas
        << ',' << r.loss_uni << ',' << r.loss_total << '\n';
  }
}

nlohmann::json report_json(const TrainResult& result) {
  nlohmann::json j = result.report.to_json();
  j["best_epoch"] = result.best_epoch;
  j["epochs_run"] = result.trace.size();
  if (!result.trace.empty()) {
    const auto& last = result.trace.back();
    j["final_loss"] = {{"parallel", last.loss_par},
                       {"cascade", last.loss_cas},
                       {"unique", last.loss_uni},
                       {"total", last.loss_total}};
  }
  return j;
}

}  // namespace pkef

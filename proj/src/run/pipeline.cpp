#include "pkef/run/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "pkef/errors.hpp"
#include "pkef/run/checkpoint.hpp"

namespace pkef {
namespace {

std::string join_ints(const std::vector<int>& v) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
  return out.str();
}

std::string lambda_label(const std::vector<double>& v) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out << (i ? "," : "") << static_cast<int>(std::lround(v[i] * 6)) << "/6";
  }
  return out.str();
}

}  // namespace

PreparedData prepare_data(BehaviorDataset ds, std::vector<Interaction> validation) {
  for (const auto& p : validation) {
    if (p.user >= ds.user_count || p.item >= ds.item_count) {
      throw FormatError("validation pair out of range");
    }
    if (ds.target().contains(p.user, p.item)) {
      throw FormatError("validation pair is also a target training positive");
    }
  }
  PreparedData d;
  d.adjacencies = build_all_adjacencies(ds);
  d.dataset = std::move(ds);
  d.validation = std::move(validation);
  return d;
}

PreparedData load_prepared(const RunConfig& config) {
  if (config.data.empty()) throw ConfigError("no dataset directory given (--data)");
  BehaviorDataset ds = load_dataset(config.data, config.behaviors);
  std::vector<Interaction> validation;
  const auto vfile = config.data / "validation.txt";
  if (std::filesystem::exists(vfile)) validation = read_interactions(vfile);
  return prepare_data(std::move(ds), std::move(validation));
}

TrainConfig train_config(const RunConfig& c) {
  TrainConfig t;
  t.weights = c.loss_weights();
  t.mu = c.mu;
  t.adam.lr = c.lr;
  t.epochs = c.epochs;
  t.batch = c.batch;
  t.patience = c.patience;
  t.k = c.k;
  t.seed = c.seed;
  return t;
}

RunOutcome run_training(const RunConfig& config, const PreparedData& data,
                        const std::function<void(const EpochRecord&)>& on_epoch) {
  RunConfig c = config;
  c.resolve();
  const auto& ds = data.dataset;
  if (c.behaviors.size() != ds.behavior_count()) {
    throw ConfigError("config names " + std::to_string(c.behaviors.size()) +
                      " behaviors, dataset has " + std::to_string(ds.behavior_count()));
  }
  RunOutcome o{Model(c.model_config(ds.user_count, ds.item_count), c.seed), {}};
  o.result = train_model(o.model, data.adjacencies, ds, data.validation, train_config(c), on_epoch);
  return o;
}

void write_run_artifacts(const RunConfig& config, const RunOutcome& outcome) {
  std::filesystem::create_directories(config.out);
  save_run_config(config, config.out / "config.txt");
  write_metrics_csv(outcome.result.trace, config.out / "metrics.csv");
  std::ofstream report(config.out / "report.json");
  if (!report) throw IoError("cannot write report.json");
  report << report_json(outcome.result).dump(2) << '\n';
  save_checkpoint(outcome.model.params(), config.out / "model.ckpt");
}

std::vector<Variant> expand_variants(const RunConfig& base, const std::vector<std::string>& names) {
  std::vector<Variant> out;
  for (const auto& name : names) {
    RunConfig c = base;
    if (name == "full") {
      c.fusion = FusionScheme::projection;
      c.head = HeadVariant::pme;
    } else if (name == "base") {
      c.fusion = FusionScheme::none;
      c.head = HeadVariant::bilinear;
    } else if (name == "no-pkf") {
      c.fusion = FusionScheme::none;
      c.head = HeadVariant::pme;
    } else if (name == "no-pme") {
      c.fusion = FusionScheme::projection;
      c.head = HeadVariant::bilinear;
    } else if (name.rfind("fusion:", 0) == 0) {
      c.fusion = parse_fusion(name.substr(7));
    } else if (name.rfind("head:", 0) == 0) {
      c.head = parse_head(name.substr(5));
    } else if (name == "grid:lambda") {
      for (auto& w : lambda_grid(base.behaviors.size())) {
        RunConfig g = base;
        g.lambda = w;
        out.push_back({"lambda=" + lambda_label(w), g});
      }
      continue;
    } else if (name == "grid:layers") {
      for (auto& l : layer_grid(base.behaviors.size())) {
        RunConfig g = base;
        g.layers = l;
        out.push_back({"layers=" + join_ints(l), g});
      }
      continue;
    } else {
      throw ConfigError("unknown ablation variant '" + name + "'");
    }
    out.push_back({name, c});
  }
  return out;
}

}  // namespace pkef

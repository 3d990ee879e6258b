#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pkef/errors.hpp"
#include "pkef/eval/analysis.hpp"
#include "pkef/eval/metrics.hpp"
#include "pkef/run/checkpoint.hpp"
#include "pkef/run/config.hpp"
#include "pkef/run/pipeline.hpp"
#include "pkef/synthetic/generator.hpp"

namespace fs = std::filesystem;
using namespace pkef;

namespace {

// Flags shared by every run-configuring subcommand; only flags that were
// actually given override the config file.
struct RunFlags {
  std::string config;
  std::map<std::string, std::string> values;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "key = value config file");
    for (const char* key : {"data", "behaviors", "out", "seed", "fusion", "head", "tower", "dim",
                            "layers", "lambda", "gamma", "mu", "lr", "epochs", "batch",
                            "patience", "k"}) {
      app->add_option_function<std::string>(
          std::string("--") + key, [this, key](const std::string& v) { values[key] = v; });
    }
  }

  RunConfig build(const std::optional<fs::path>& fallback_config = std::nullopt) const {
    RunConfig c;
    if (!config.empty()) {
      c = load_run_config(config);
    } else if (fallback_config && fs::exists(*fallback_config)) {
      c = load_run_config(*fallback_config);
    }
    apply_settings(c, values);
    return c;
  }
};

void print_epoch(const EpochRecord& r, std::size_t k) {
  std::cout << "epoch " << r.epoch << "  HR@" << k << " " << std::fixed << std::setprecision(4)
            << r.hr << "  NDCG@" << k << " " << r.ndcg << "  loss " << r.loss_total
            << std::defaultfloat << std::endl;
}

int cmd_train(const RunFlags& flags) {
  RunConfig c = flags.build();
  c.resolve();
  const PreparedData data = load_prepared(c);
  const RunOutcome o = run_training(c, data, [&](const EpochRecord& r) { print_epoch(r, c.k); });
  write_run_artifacts(c, o);
  std::cout << report_json(o.result).dump(2) << std::endl;
  return 0;
}

// Loads config.txt next to the checkpoint unless --config is given.
struct Restored {
  RunConfig config;
  PreparedData data;
  Model model;
};

Restored restore(const RunFlags& flags, const std::string& checkpoint_flag) {
  fs::path checkpoint = checkpoint_flag;
  RunConfig c = flags.build(checkpoint.empty() ? std::nullopt
                                               : std::optional(checkpoint.parent_path() / "config.txt"));
  if (checkpoint.empty()) checkpoint = c.out / "model.ckpt";
  c.resolve();
  PreparedData data = load_prepared(c);
  Model model(c.model_config(data.dataset.user_count, data.dataset.item_count), c.seed);
  load_checkpoint(model.params(), checkpoint);
  return {c, std::move(data), std::move(model)};
}

int cmd_evaluate(const RunFlags& flags, const std::string& checkpoint) {
  const Restored r = restore(flags, checkpoint);
  const Evaluation e = evaluate_model(r.model, r.data.adjacencies, r.data.dataset, r.config.k);
  const auto j = e.report.to_json();
  fs::create_directories(r.config.out);
  std::ofstream(r.config.out / "eval_report.json") << j.dump(2) << '\n';
  std::cout << j.dump(2) << std::endl;
  return 0;
}

std::string dir_label(std::string label) {
  for (char& ch : label) {
    if (ch == ':' || ch == '/' || ch == ',' || ch == '=') ch = '_';
  }
  return label;
}

int cmd_ablate(const RunFlags& flags, const std::string& variants) {
  RunConfig base = flags.build();
  base.resolve();
  const PreparedData data = load_prepared(base);
  const auto list = expand_variants(base, parse_name_list(variants));
  fs::create_directories(base.out);
  std::ofstream table(base.out / "ablation.csv");
  table << "variant,fusion,head,hr,ndcg,best_epoch\n";
  std::cout << std::left << std::setw(28) << "variant" << std::setw(12) << "fusion"
            << std::setw(10) << "head" << "HR@" << base.k << "     NDCG@" << base.k << '\n';
  for (const auto& v : list) {
    RunConfig c = v.config;
    c.out = base.out / dir_label(v.label);
    const RunOutcome o = run_training(c, data);
    write_run_artifacts(c, o);
    const auto& m = o.result.report;
    table << v.label << ',' << to_string(c.fusion) << ',' << to_string(c.head) << ','
          << std::setprecision(17) << m.hr << ',' << m.ndcg << ',' << o.result.best_epoch << '\n';
    std::cout << std::left << std::setw(28) << v.label << std::setw(12) << to_string(c.fusion)
              << std::setw(10) << to_string(c.head) << std::fixed << std::setprecision(4)
              << m.hr << "    " << m.ndcg << std::defaultfloat << std::endl;
  }
  return 0;
}

int cmd_analyze(const RunFlags& flags, const std::string& analysis, const std::string& checkpoint) {
  if (analysis == "decoupling") {
    RunConfig c = flags.build();
    const DecouplingReport d = analyze_decoupling(c.seed);
    std::cout << d.to_json().dump(2) << '\n';
    std::cout << "PME max cross-behavior gradient: " << d.pme_cross_gradient
              << (d.pme_cross_gradient < 1e-10 ? "  (decoupled)" : "  (LEAKS)") << '\n';
    std::cout << "coupled head max cross-behavior gradient: " << d.coupled_cross_gradient
              << (d.coupled_cross_gradient > 1e-3 ? "  (coupled)" : "  (weak)") << '\n';
    std::cout << "per-behavior gradient cosine on the shared pair vector: " << d.conflict_cosine
              << std::endl;
    return 0;
  }
  if (analysis != "case-study" && analysis != "gates") {
    throw ConfigError("unknown analysis '" + analysis + "' (decoupling, case-study, gates)");
  }
  const Restored r = restore(flags, checkpoint);
  nlohmann::json j;
  if (analysis == "gates") {
    j = export_gate_weights(r.model, r.data.adjacencies, r.data.dataset).to_json();
  } else {
    const Evaluation e = evaluate_model(r.model, r.data.adjacencies, r.data.dataset, r.config.k);
    j = pearson_case_study(r.data.dataset, e.rankings, r.config.k).to_json();
  }
  fs::create_directories(r.config.out);
  std::ofstream(r.config.out / (analysis + ".json")) << j.dump(2) << '\n';
  std::cout << j.dump(2) << std::endl;
  return 0;
}

int cmd_generate(const SyntheticSpec& spec, const std::string& out) {
  const SyntheticData s = generate_synthetic(spec);
  write_dataset(s.dataset, out);
  if (spec.validation) write_interactions(fs::path(out) / "validation.txt", s.validation);
  std::cout << "wrote " << s.dataset.user_count << " users, " << s.dataset.item_count
            << " items, behaviors";
  for (const auto& b : s.dataset.behaviors) std::cout << ' ' << b.name() << '=' << b.size();
  std::cout << ", " << s.dataset.test.size() << " test pairs";
  if (spec.validation) std::cout << ", " << s.validation.size() << " validation pairs";
  std::cout << " to " << out << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-behavior recommender: parallel knowledge fusion with a projection expert head"};
  app.require_subcommand(1);

  RunFlags train_flags, eval_flags, ablate_flags, analyze_flags;
  auto* train = app.add_subcommand("train", "train a model and write run artifacts");
  train_flags.attach(train);

  auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint on the test pairs");
  eval_flags.attach(evaluate);
  std::string eval_checkpoint;
  evaluate->add_option("--checkpoint", eval_checkpoint, "checkpoint (default <out>/model.ckpt)");

  auto* ablate = app.add_subcommand("ablate", "train several variants under one config and seed");
  ablate_flags.attach(ablate);
  std::string variants = "base,no-pkf,no-pme,full";
  ablate->add_option("--variants", variants,
                     "comma list of full, base, no-pkf, no-pme, fusion:<scheme>, head:<head>, "
                     "grid:lambda, grid:layers")
      ->capture_default_str();

  auto* analyze = app.add_subcommand("analyze", "decoupling, case-study or gates analysis");
  analyze_flags.attach(analyze);
  std::string analysis = "decoupling", analyze_checkpoint;
  analyze->add_option("--analysis", analysis, "decoupling | case-study | gates")
      ->capture_default_str();
  analyze->add_option("--checkpoint", analyze_checkpoint, "checkpoint (default <out>/model.ckpt)");

  auto* generate = app.add_subcommand("generate", "write a synthetic planted-preference dataset");
  SyntheticSpec spec;
  std::string gen_out, densities = "0.3,0.1,0.03", names = "view,cart,buy";
  generate->add_option("--out", gen_out, "output directory")->required();
  generate->add_option("--users", spec.users)->capture_default_str();
  generate->add_option("--items", spec.items)->capture_default_str();
  generate->add_option("--latent", spec.latent_dim)->capture_default_str();
  generate->add_option("--densities", densities)->capture_default_str();
  generate->add_option("--behaviors", names)->capture_default_str();
  generate->add_option("--overlap", spec.overlap)->capture_default_str();
  generate->add_option("--noise", spec.noise)->capture_default_str();
  generate->add_option("--seed", spec.seed)->capture_default_str();
  generate->add_flag("--validation", spec.validation, "also hold out a validation pair per user");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(train_flags);
    if (*evaluate) return cmd_evaluate(eval_flags, eval_checkpoint);
    if (*ablate) return cmd_ablate(ablate_flags, variants);
    if (*analyze) return cmd_analyze(analyze_flags, analysis, analyze_checkpoint);
    if (*generate) {
      spec.densities = parse_real_list(densities);
      spec.names = parse_name_list(names);
      return cmd_generate(spec, gen_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return 3;
  } catch (const TrainingError& e) {
    std::cerr << "training aborted: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

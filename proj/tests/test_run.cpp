#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pkef/errors.hpp"
#include "pkef/eval/metrics.hpp"
#include "pkef/run/checkpoint.hpp"
#include "pkef/run/config.hpp"
#include "pkef/run/pipeline.hpp"
#include "pkef/synthetic/generator.hpp"

using namespace pkef;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("pkef_run_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// A small synthetic dataset on disk plus a quick config pointing at it.
RunConfig small_run(const std::string& name) {
  const auto dir = scratch(name);
  SyntheticSpec spec;
  spec.users = 30;
  spec.items = 20;
  spec.densities = {0.3, 0.2, 0.1};
  write_dataset(generate_synthetic(spec).dataset, dir / "data");
  RunConfig c;
  c.data = dir / "data";
  c.behaviors = {"b0", "b1", "b2"};
  c.out = dir / "out";
  c.dim = 8;
  c.epochs = 3;
  c.batch = 16;
  c.lr = 0.01;
  c.k = 5;
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PKEF_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing, overrides and round-trip") {
  const auto dir = scratch("config");
  std::ofstream(dir / "run.txt") << "# comment\n"
                                    "data = some/dir\n"
                                    "behaviors = a, b\n"
                                    "fusion = summation\n"
                                    "head = mmoe\n"
                                    "dim = 16  # trailing\n"
                                    "lambda = 1/6, 5/6\n"
                                    "layers = 2,3\n"
                                    "\n"
                                    "lr = 0.005\n";
  auto c = load_run_config(dir / "run.txt");
  CHECK(c.data == fs::path("some/dir"));
  CHECK(c.behaviors == std::vector<std::string>{"a", "b"});
  CHECK(c.fusion == FusionScheme::summation);
  CHECK(c.head == HeadVariant::mmoe);
  CHECK(c.dim == 16);
  CHECK(c.lambda[0] == doctest::Approx(1.0 / 6));
  CHECK(c.layers == std::vector<int>{2, 3});
  CHECK(c.seed == 2024);
  CHECK(c.epochs == 200);

  apply_settings(c, {{"dim", "32"}, {"seed", "5"}});
  CHECK(c.dim == 32);
  CHECK(c.seed == 5);

  save_run_config(c, dir / "back.txt");
  const auto back = load_run_config(dir / "back.txt");
  CHECK(serialize(back) == serialize(c));
  CHECK(back.lambda == c.lambda);

  CHECK_THROWS_AS(apply_setting(c, "colour", "red"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "dim", "many"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "lambda", "1/0"), ConfigError);
  std::ofstream(dir / "broken.txt") << "just words\n";
  CHECK_THROWS_AS(load_run_config(dir / "broken.txt"), ConfigError);
}

TEST_CASE("resolve fills behavior-indexed defaults") {
  RunConfig c;
  c.resolve();
  CHECK(c.layers == std::vector<int>{1, 1, 1});
  REQUIRE(c.lambda.size() == 3);
  CHECK(c.lambda[0] == 0.0);
  CHECK(c.lambda[1] == doctest::Approx(4.0 / 6));
  CHECK(c.lambda[2] == doctest::Approx(2.0 / 6));

  RunConfig two;
  two.behaviors = {"a", "b"};
  two.resolve();
  CHECK(two.lambda == std::vector<double>{0.5, 0.5});

  RunConfig bad;
  bad.layers = {1, 2};
  CHECK_THROWS_AS(bad.resolve(), ConfigError);
}

TEST_CASE("sweep grids") {
  const auto lg = lambda_grid(3);
  CHECK(lg.size() == 28);  // compositions of 6 into three parts
  std::set<std::vector<double>> unique(lg.begin(), lg.end());
  CHECK(unique.size() == lg.size());
  for (const auto& w : lg) CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0));
  CHECK(lambda_grid(2).size() == 7);

  const auto layers = layer_grid(3);
  CHECK(layers.size() == 64);
  for (const auto& l : layers) {
    for (int x : l) CHECK((x >= 1 && x <= 4));
  }
}

TEST_CASE("variant expansion") {
  RunConfig base;
  const auto v = expand_variants(base, {"full", "base", "no-pkf", "no-pme", "fusion:linear", "head:ple"});
  REQUIRE(v.size() == 6);
  CHECK(v[0].config.fusion == FusionScheme::projection);
  CHECK(v[0].config.head == HeadVariant::pme);
  CHECK(v[1].config.fusion == FusionScheme::none);
  CHECK(v[1].config.head == HeadVariant::bilinear);
  CHECK(v[2].config.fusion == FusionScheme::none);
  CHECK(v[2].config.head == HeadVariant::pme);
  CHECK(v[3].config.fusion == FusionScheme::projection);
  CHECK(v[3].config.head == HeadVariant::bilinear);
  CHECK(v[4].config.fusion == FusionScheme::linear);
  CHECK(v[5].config.head == HeadVariant::ple);
  CHECK(expand_variants(base, {"grid:lambda"}).size() == 28);
  CHECK(expand_variants(base, {"grid:layers"}).size() == 64);
  CHECK_THROWS_AS(expand_variants(base, {"mystery"}), ConfigError);
  CHECK_THROWS_AS(expand_variants(base, {"fusion:attention"}), ConfigError);
}

TEST_CASE("checkpoint round-trip and damage") {
  const auto dir = scratch("ckpt");
  const ModelConfig mc{6, 5, 4, {1, 2}, FusionScheme::vanilla, HeadVariant::pme, TowerKind::linear, 0.1};
  const Model a(mc, 1);
  save_checkpoint(a.params(), dir / "m.ckpt");
  Model b(mc, 2);
  load_checkpoint(b.params(), dir / "m.ckpt");
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    CHECK(a.params()[i].value == b.params()[i].value);
  }

  const std::string bytes = slurp(dir / "m.ckpt");
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream(dir / name, std::ios::binary) << content;
    return dir / name;
  };
  CHECK_THROWS_AS(load_checkpoint(b.params(), write("trunc", bytes.substr(0, bytes.size() - 3))), FormatError);
  CHECK_THROWS_AS(load_checkpoint(b.params(), write("extra", bytes + "x")), FormatError);
  std::string magic = bytes;
  magic[0] = 'Q';
  CHECK_THROWS_AS(load_checkpoint(b.params(), write("magic", magic)), FormatError);
  std::string nan = bytes;
  for (std::size_t i = nan.size() - 8; i < nan.size(); ++i) nan[i] = static_cast<char>(0xff);
  CHECK_THROWS_AS(load_checkpoint(b.params(), write("nan", nan)), FormatError);
  CHECK_THROWS_AS(load_checkpoint(b.params(), dir / "missing"), IoError);

  ModelConfig other = mc;
  other.dim = 5;
  Model c(other, 3);
  CHECK_THROWS_AS(load_checkpoint(c.params(), dir / "m.ckpt"), ConfigError);
}

TEST_CASE("training is deterministic and reload reproduces the report") {
  auto c = small_run("determinism");
  const auto data = load_prepared(c);
  const auto first = run_training(c, data);
  write_run_artifacts(c, first);
  const std::string csv = slurp(c.out / "metrics.csv");
  CHECK(csv.rfind("epoch,hr,ndcg,loss_par,loss_cas,loss_uni,loss_total\n", 0) == 0);

  const fs::path first_out = c.out;
  c.out = first_out.parent_path() / "again";
  write_run_artifacts(c, run_training(c, data));
  CHECK(slurp(c.out / "metrics.csv") == csv);

  // scores from a reloaded checkpoint match the trained model
  c.resolve();
  Model reloaded(c.model_config(data.dataset.user_count, data.dataset.item_count), 99);
  load_checkpoint(reloaded.params(), first_out / "model.ckpt");
  const auto a = evaluate_model(first.model, data.adjacencies, data.dataset, c.k);
  const auto b = evaluate_model(reloaded, data.adjacencies, data.dataset, c.k);
  CHECK(std::abs(a.report.hr - b.report.hr) < 1e-10);
  CHECK(std::abs(a.report.ndcg - b.report.ndcg) < 1e-10);
  const auto report = nlohmann::json::parse(slurp(first_out / "report.json"));
  CHECK(std::abs(report["hr"].get<double>() - a.report.hr) < 1e-10);
}

TEST_CASE("command-line tool") {
  auto c = small_run("cli");
  save_run_config(c, c.out.parent_path() / "run.txt");
  const std::string cfg = (c.out.parent_path() / "run.txt").string();
  CHECK(run_cli("train --config " + cfg) == 0);
  CHECK(fs::exists(c.out / "model.ckpt"));
  CHECK(run_cli("evaluate --checkpoint " + (c.out / "model.ckpt").string()) == 0);
  const auto train_report = nlohmann::json::parse(slurp(c.out / "report.json"));
  const auto eval_report = nlohmann::json::parse(slurp(c.out / "eval_report.json"));
  CHECK(std::abs(train_report["hr"].get<double>() - eval_report["hr"].get<double>()) < 1e-10);
  CHECK(run_cli("analyze --analysis gates --checkpoint " + (c.out / "model.ckpt").string()) == 0);
  CHECK(fs::exists(c.out / "gates.json"));

  std::ofstream(c.out / "bad.ckpt", std::ios::binary) << "PKEF\x01";
  CHECK(run_cli("evaluate --config " + cfg + " --checkpoint " + (c.out / "bad.ckpt").string()) == 3);
  CHECK(run_cli("train --config " + cfg + " --fusion attention") == 2);
  CHECK(run_cli("frobnicate") != 0);
}

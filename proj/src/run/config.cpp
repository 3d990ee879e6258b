#include "pkef/run/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pkef/errors.hpp"

namespace pkef {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    part = trim(part);
    if (part.empty()) throw ConfigError("empty entry in list '" + s + "'");
    out.push_back(part);
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

double parse_real(const std::string& s) {
  const auto slash = s.find('/');
  if (slash != std::string::npos) {
    const std::string den = s.substr(slash + 1);
    if (den.find('/') != std::string::npos) throw ConfigError("not a number: '" + s + "'");
    const double d = parse_real(den);
    if (d == 0.0) throw ConfigError("zero denominator in '" + s + "'");
    return parse_real(s.substr(0, slash)) / d;
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v)) throw ConfigError("not a number: '" + s + "'");
  return v;
}

std::uint64_t parse_unsigned(const std::string& s) {
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) {
    throw ConfigError("not a non-negative integer: '" + s + "'");
  }
  return v;
}

std::string join(const auto& values) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << values[i];
  return out.str();
}

void grid_rec(std::size_t k, int remaining, int steps, std::vector<int>& cur,
              std::vector<std::vector<double>>& out) {
  if (k + 1 == cur.size()) {
    cur[k] = remaining;
    std::vector<double> w;
    for (int c : cur) w.push_back(static_cast<double>(c) / steps);
    out.push_back(std::move(w));
    return;
  }
  for (int c = 0; c <= remaining; ++c) {
    cur[k] = c;
    grid_rec(k + 1, remaining - c, steps, cur, out);
  }
}

}  // namespace

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& p : split_commas(s)) {
    const auto v = parse_unsigned(p);
    out.push_back(static_cast<int>(v));
  }
  return out;
}

std::vector<double> parse_real_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& p : split_commas(s)) out.push_back(parse_real(p));
  return out;
}

std::vector<std::string> parse_name_list(const std::string& s) { return split_commas(s); }

void apply_setting(RunConfig& c, const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "data") c.data = value;
  else if (key == "behaviors") c.behaviors = parse_name_list(value);
  else if (key == "out") c.out = value;
  else if (key == "seed") c.seed = parse_unsigned(value);
  else if (key == "fusion") c.fusion = parse_fusion(value);
  else if (key == "head") c.head = parse_head(value);
  else if (key == "tower") c.tower = parse_tower(value);
  else if (key == "dim") c.dim = parse_unsigned(value);
  else if (key == "layers") c.layers = parse_int_list(value);
  else if (key == "lambda") c.lambda = parse_real_list(value);
  else if (key == "gamma") c.gamma = parse_real(value);
  else if (key == "mu") c.mu = parse_real(value);
  else if (key == "lr") c.lr = parse_real(value);
  else if (key == "epochs") c.epochs = parse_unsigned(value);
  else if (key == "batch") c.batch = parse_unsigned(value);
  else if (key == "patience") c.patience = parse_unsigned(value);
  else if (key == "k") c.k = parse_unsigned(value);
  else throw ConfigError("unknown setting '" + key + "'");
}

void apply_settings(RunConfig& c, const std::map<std::string, std::string>& settings) {
  for (const auto& [key, value] : settings) apply_setting(c, key, value);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  RunConfig c;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(number) + ": expected key = value");
    }
    apply_setting(c, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return c;
}

void RunConfig::resolve() {
  const std::size_t K = behaviors.size();
  if (K == 0) throw ConfigError("at least one behavior is required");
  if (layers.empty()) layers.assign(K, 1);
  if (lambda.empty()) {
    if (K == 3) lambda = {0.0, 4.0 / 6.0, 2.0 / 6.0};
    else lambda.assign(K, 1.0 / static_cast<double>(K));
  }
  if (layers.size() != K) throw ConfigError("layers needs one entry per behavior");
  if (lambda.size() != K) throw ConfigError("lambda needs one entry per behavior");
  for (int l : layers) {
    if (l < 1) throw ConfigError("layer counts must be at least 1");
  }
  LossWeights check(lambda);
  if (dim == 0) throw ConfigError("dim must be positive");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (mu < 0.0) throw ConfigError("mu must be non-negative");
  if (gamma < 0.0) throw ConfigError("gamma must be non-negative");
  if (batch == 0) throw ConfigError("batch must be positive");
  if (k == 0) throw ConfigError("k must be positive");
}

ModelConfig RunConfig::model_config(std::size_t users, std::size_t items) const {
  return ModelConfig{users, items, dim, layers, fusion, head, tower, gamma};
}

LossWeights RunConfig::loss_weights() const { return LossWeights(lambda); }

std::string serialize(const RunConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "data = " << c.data.string() << "\n"
      << "behaviors = " << join(c.behaviors) << "\n"
      << "out = " << c.out.string() << "\n"
      << "seed = " << c.seed << "\n"
      << "fusion = " << to_string(c.fusion) << "\n"
      << "head = " << to_string(c.head) << "\n"
      << "tower = " << to_string(c.tower) << "\n"
      << "dim = " << c.dim << "\n";
  if (!c.layers.empty()) out << "layers = " << join(c.layers) << "\n";
  if (!c.lambda.empty()) out << "lambda = " << join(c.lambda) << "\n";
  out << "gamma = " << c.gamma << "\n"
      << "mu = " << c.mu << "\n"
      << "lr = " << c.lr << "\n"
      << "epochs = " << c.epochs << "\n"
      << "batch = " << c.batch << "\n"
      << "patience = " << c.patience << "\n"
      << "k = " << c.k << "\n";
  return out.str();
}

void save_run_config(const RunConfig& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << serialize(c);
}

std::vector<std::vector<double>> lambda_grid(std::size_t behaviors, int steps) {
  if (behaviors == 0 || steps < 1) throw ConfigError("lambda grid needs behaviors and steps");
  std::vector<int> cur(behaviors, 0);
  std::vector<std::vector<double>> out;
  grid_rec(0, steps, steps, cur, out);
  return out;
}

std::vector<std::vector<int>> layer_grid(std::size_t behaviors, int max_layers) {
  if (behaviors == 0 || max_layers < 1) throw ConfigError("layer grid needs behaviors and depth");
  std::vector<std::vector<int>> out;
  std::vector<int> cur(behaviors, 1);
  while (true) {
    out.push_back(cur);
    std::size_t i = 0;
    while (i < behaviors && cur[i] == max_layers) cur[i++] = 1;
    if (i == behaviors) break;
    ++cur[i];
  }
  return out;
}

}  // namespace pkef

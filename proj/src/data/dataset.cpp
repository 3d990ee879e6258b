#include "pkef/data/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "pkef/errors.hpp"

namespace pkef {
namespace {

std::uint64_t key(const Interaction& x) {
  return (static_cast<std::uint64_t>(x.user) << 32) | x.item;
}

}  // namespace

std::vector<Interaction> read_interactions(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file.string());
  std::vector<Interaction> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    long long u = 0, v = 0;
    if (!(ss >> u)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw FormatError(file.string() + ":" + std::to_string(line_no) + ": expected 'user item'");
    }
    std::string rest;
    if (!(ss >> v) || (ss >> rest) || u < 0 || v < 0 || u > UINT32_MAX || v > UINT32_MAX) {
      throw FormatError(file.string() + ":" + std::to_string(line_no) +
                        ": expected two non-negative integers");
    }
    pairs.push_back({static_cast<Index>(u), static_cast<Index>(v)});
  }
  return pairs;
}

namespace {

}  // namespace

BehaviorPositives::BehaviorPositives(std::string name, std::span<const Interaction> pairs,
                                     std::size_t user_count)
    : name_(std::move(name)), by_user_(user_count) {
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(pairs.size() * 2);
  pairs_.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (!seen.insert(key(p)).second) {
      ++duplicates_;
      continue;
    }
    pairs_.push_back(p);
    by_user_.at(p.user).push_back(p.item);
  }
  for (auto& items : by_user_) std::sort(items.begin(), items.end());
}

bool BehaviorPositives::contains(Index user, Index item) const {
  const auto& items = by_user_[user];
  return std::binary_search(items.begin(), items.end(), item);
}

BehaviorDataset make_dataset(std::size_t user_count, std::size_t item_count,
                             const std::vector<std::string>& names,
                             const std::vector<std::vector<Interaction>>& behaviors,
                             std::vector<Interaction> test) {
  if (names.empty()) throw ConfigError("dataset needs at least one behavior");
  if (names.size() != behaviors.size()) throw ConfigError("behavior name/data count mismatch");
  auto check = [&](const std::vector<Interaction>& pairs, const std::string& what) {
    for (const auto& p : pairs) {
      if (p.user >= user_count || p.item >= item_count) {
        throw FormatError(what + ": pair (" + std::to_string(p.user) + ", " +
                          std::to_string(p.item) + ") outside " + std::to_string(user_count) +
                          " users x " + std::to_string(item_count) + " items");
      }
    }
  };
  BehaviorDataset ds;
  ds.user_count = user_count;
  ds.item_count = item_count;
  for (std::size_t k = 0; k < names.size(); ++k) {
    check(behaviors[k], names[k]);
    ds.behaviors.emplace_back(names[k], behaviors[k], user_count);
    if (ds.behaviors.back().duplicates_dropped() > 0) {
      log_info(names[k] + ": dropped " + std::to_string(ds.behaviors.back().duplicates_dropped()) +
               " duplicate interactions");
    }
    if (ds.behaviors.back().size() == 0) log_warning("behavior '" + names[k] + "' is empty");
  }
  check(test, "test");
  std::unordered_set<std::uint64_t> seen;
  for (const auto& p : test) {
    if (!seen.insert(key(p)).second) continue;
    if (ds.target().contains(p.user, p.item)) {
      throw FormatError("test pair (" + std::to_string(p.user) + ", " + std::to_string(p.item) +
                        ") is also a training positive of the target behavior");
    }
    ds.test.push_back(p);
  }
  return ds;
}

BehaviorDataset load_dataset(const std::filesystem::path& dir,
                             const std::vector<std::string>& behavior_names) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::vector<Interaction>> behaviors;
  for (const auto& name : behavior_names) behaviors.push_back(read_interactions(dir / (name + ".txt")));
  auto test = read_interactions(dir / "test.txt");

  std::size_t users = 0, items = 0;
  const auto size_file = dir / "size.txt";
  if (std::filesystem::exists(size_file)) {
    std::ifstream in(size_file);
    long long u = -1, v = -1;
    if (!(in >> u >> v) || u < 0 || v < 0) throw FormatError(size_file.string() + ": expected '|U| |V|'");
    users = static_cast<std::size_t>(u);
    items = static_cast<std::size_t>(v);
  } else {
    auto grow = [&](const std::vector<Interaction>& pairs) {
      for (const auto& p : pairs) {
        users = std::max<std::size_t>(users, p.user + 1);
        items = std::max<std::size_t>(items, p.item + 1);
      }
    };
    for (const auto& b : behaviors) grow(b);
    grow(test);
  }
  return make_dataset(users, items, behavior_names, behaviors, std::move(test));
}

void write_interactions(const std::filesystem::path& file, std::span<const Interaction> pairs) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  for (const auto& p : pairs) out << p.user << ' ' << p.item << '\n';
}

void write_dataset(const BehaviorDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& b : ds.behaviors) write_interactions(dir / (b.name() + ".txt"), b.pairs());
  write_interactions(dir / "test.txt", ds.test);
  std::ofstream out(dir / "size.txt");
  if (!out) throw IoError("cannot write " + (dir / "size.txt").string());
  out << ds.user_count << ' ' << ds.item_count << '\n';
}

}  // namespace pkef

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace pkef {

using Index = std::uint32_t;

struct Interaction {
  Index user;
  Index item;
  friend bool operator==(const Interaction&, const Interaction&) = default;
};

// Positive set of one behavior. Keeps the deduplicated pairs in first-seen
// order plus a sorted per-user item list for membership queries.
class BehaviorPositives {
 public:
  BehaviorPositives() = default;
  // Drops repeated pairs, keeping the first occurrence.
  BehaviorPositives(std::string name, std::span<const Interaction> pairs, std::size_t user_count);

  const std::string& name() const { return name_; }
  std::span<const Interaction> pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  std::span<const Index> items_of(Index user) const { return by_user_[user]; }
  bool contains(Index user, Index item) const;
  std::size_t duplicates_dropped() const { return duplicates_; }

 private:
  std::string name_;
  std::vector<Interaction> pairs_;
  std::vector<std::vector<Index>> by_user_;
  std::size_t duplicates_ = 0;
};

// Multi-behavior interaction data. Behaviors are ordered upstream to
// downstream; the last one is the target behavior. Indices are 0-based.
struct BehaviorDataset {
  std::size_t user_count = 0;
  std::size_t item_count = 0;
  std::vector<BehaviorPositives> behaviors;
  std::vector<Interaction> test;

  std::size_t behavior_count() const { return behaviors.size(); }
  const BehaviorPositives& target() const { return behaviors.back(); }
  std::size_t node_count() const { return user_count + item_count; }
};

// Validates ranges, deduplicates and checks that test pairs are disjoint
// from the target behavior's training positives. Throws FormatError.
BehaviorDataset make_dataset(std::size_t user_count, std::size_t item_count,
                             const std::vector<std::string>& names,
                             const std::vector<std::vector<Interaction>>& behaviors,
                             std::vector<Interaction> test);

// One "user item" pair per line; blank lines are skipped.
std::vector<Interaction> read_interactions(const std::filesystem::path& file);
void write_interactions(const std::filesystem::path& file, std::span<const Interaction> pairs);

// Reads "<name>.txt" per behavior, "test.txt" and the optional "size.txt".
// Throws IoError for missing files and FormatError for malformed content.
BehaviorDataset load_dataset(const std::filesystem::path& dir,
                             const std::vector<std::string>& behavior_names);

void write_dataset(const BehaviorDataset& ds, const std::filesystem::path& dir);

}  // namespace pkef

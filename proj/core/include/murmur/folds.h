#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "murmur/feature_cache.h"
#include "murmur/types.h"

namespace murmur {

struct Fold {
  std::vector<std::string> train;  // segment ids, pool order
  std::vector<std::string> test;   // segment ids, pool order

  bool operator==(const Fold&) const = default;
};

struct FoldPlan {
  std::size_t k = 5;
  std::uint64_t seed = 0;
  std::vector<Fold> folds;
  std::vector<std::string> warnings;  // not serialized

  bool operator==(const FoldPlan& o) const { return k == o.k && seed == o.seed && folds == o.folds; }

  // {seed, k, folds: [{train: [ids], test: [ids]}]}
  nlohmann::json to_json() const;
  static FoldPlan from_json(const nlohmann::json& j);
};

// Partitions subjects into k test groups. A subject counts as murmur when any
// of its segments is murmur. Murmur subjects are placed first, then normal
// ones; within a class subjects are shuffled with the seed and then taken in
// decreasing segment count, each going to the fold with the fewest segments
// of that class (ties: fewest segments overall, then lowest index).
// Warns when there are fewer murmur subjects than folds.
FoldPlan make_folds(std::span<const SegmentInfo> pool, std::size_t k, std::uint64_t seed);

// Repeats the minority class until the classes are equal: whole copies first,
// then a seeded sample without replacement for the remainder. The majority is
// kept as is and the result is shuffled with the seed.
// Throws ConfigError unless both classes are present.
std::vector<std::string> balance_upsample(std::span<const std::string> ids, std::span<const Label> labels,
                                          std::uint64_t seed);

}  // namespace murmur

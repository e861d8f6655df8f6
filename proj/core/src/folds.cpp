#include "murmur/folds.h"

#include <algorithm>
#include <map>
#include <random>
#include <tuple>

#include "murmur/error.h"

namespace murmur {

nlohmann::json FoldPlan::to_json() const {
  nlohmann::json folds_json = nlohmann::json::array();
  for (const auto& f : folds) folds_json.push_back({{"train", f.train}, {"test", f.test}});
  return {{"seed", seed}, {"k", k}, {"folds", folds_json}};
}

FoldPlan FoldPlan::from_json(const nlohmann::json& j) {
  FoldPlan plan;
  try {
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.k = j.at("k").get<std::size_t>();
    for (const auto& f : j.at("folds"))
      plan.folds.push_back({f.at("train").get<std::vector<std::string>>(), f.at("test").get<std::vector<std::string>>()});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("fold plan: ") + e.what());
  }
  if (plan.folds.size() != plan.k) throw FormatError("fold plan: fold count does not match k");
  return plan;
}

FoldPlan make_folds(std::span<const SegmentInfo> pool, std::size_t k, std::uint64_t seed) {
  if (pool.empty()) throw ArgumentError("make_folds: empty pool");
  if (k < 2) throw ArgumentError("make_folds: k must be at least 2");

  struct Subject {
    std::string name;
    std::size_t segments = 0;
    bool murmur = false;
  };
  std::map<std::string, Subject> by_name;
  for (const auto& s : pool) {
    if (s.subject.empty()) throw ArgumentError("make_folds: segment " + s.segment_id + " has no subject");
    auto& subj = by_name[s.subject];
    subj.name = s.subject;
    ++subj.segments;
    subj.murmur = subj.murmur || s.label == Label::kMurmur;
  }

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;

  std::vector<Subject> groups[kNumClasses];
  for (auto& [name, subj] : by_name) groups[subj.murmur ? 1 : 0].push_back(subj);
  const std::size_t n_murmur = groups[1].size();
  if (n_murmur < k)
    plan.warnings.push_back("only " + std::to_string(n_murmur) + " murmur subjects for " + std::to_string(k) +
                            " folds; some test folds will lack murmur cases");
  if (groups[0].size() < k)
    plan.warnings.push_back("only " + std::to_string(groups[0].size()) + " normal subjects for " +
                            std::to_string(k) + " folds; some test folds will lack normal cases");

  std::mt19937_64 rng(seed);
  std::vector<std::array<std::size_t, kNumClasses>> class_load(k, {0, 0});
  std::vector<std::size_t> total_load(k, 0);
  std::map<std::string, std::size_t> fold_of;
  for (int c : {1, 0}) {
    auto& subjects = groups[c];
    std::shuffle(subjects.begin(), subjects.end(), rng);
    std::stable_sort(subjects.begin(), subjects.end(),
                     [](const Subject& a, const Subject& b) { return a.segments > b.segments; });
    for (const auto& subj : subjects) {
      std::size_t best = 0;
      for (std::size_t f = 1; f < k; ++f)
        if (std::tie(class_load[f][c], total_load[f]) < std::tie(class_load[best][c], total_load[best])) best = f;
      class_load[best][c] += subj.segments;
      total_load[best] += subj.segments;
      fold_of[subj.name] = best;
    }
  }

  plan.folds.resize(k);
  for (const auto& s : pool) {
    const std::size_t home = fold_of.at(s.subject);
    for (std::size_t f = 0; f < k; ++f) (f == home ? plan.folds[f].test : plan.folds[f].train).push_back(s.segment_id);
  }
  for (std::size_t f = 0; f < k; ++f)
    if (plan.folds[f].test.empty()) plan.warnings.push_back("fold " + std::to_string(f) + " has an empty test set");
  return plan;
}

std::vector<std::string> balance_upsample(std::span<const std::string> ids, std::span<const Label> labels,
                                          std::uint64_t seed) {
  if (ids.size() != labels.size()) throw ArgumentError("balance_upsample: ids and labels differ in length");
  std::vector<std::string> by_class[kNumClasses];
  for (std::size_t i = 0; i < ids.size(); ++i) by_class[static_cast<int>(labels[i])].push_back(ids[i]);
  if (by_class[0].empty() || by_class[1].empty())
    throw ConfigError("balance_upsample: training fold contains a single class");

  const int minority = by_class[1].size() < by_class[0].size() ? 1 : 0;
  const auto& minor = by_class[minority];
  const auto& major = by_class[1 - minority];
  const std::size_t repeats = major.size() / minor.size();
  const std::size_t remainder = major.size() % minor.size();

  std::mt19937_64 rng(seed);
  std::vector<std::string> out(major.begin(), major.end());
  out.reserve(2 * major.size());
  for (std::size_t r = 0; r < repeats; ++r) out.insert(out.end(), minor.begin(), minor.end());
  if (remainder > 0) {
    std::vector<std::string> extra;
    std::sample(minor.begin(), minor.end(), std::back_inserter(extra), remainder, rng);
    out.insert(out.end(), extra.begin(), extra.end());
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

}  // namespace murmur

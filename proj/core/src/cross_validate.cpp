#include "murmur/cross_validate.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "murmur/error.h"

namespace murmur {

CvResult cross_validate(const FeatureSet& features, const CvConfig& config, const LogSink& log) {
  config.train.validate();
  if (features.size() == 0) throw ArgumentError("cross_validate: no segments");

  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < features.size(); ++i)
    if (!row_of.emplace(features.info(i).segment_id, i).second)
      throw ValidationError("cross_validate: duplicate segment id " + features.info(i).segment_id);

  CvResult result;
  result.plan = make_folds(features.infos(), config.folds, config.train.seed);
  std::mutex log_mu;
  const auto say = [&](const std::string& line) {
    if (!log) return;
    std::lock_guard lock(log_mu);
    log(line);
  };
  for (const auto& w : result.plan.warnings) say("warning: " + w);

  const std::size_t k = config.folds;
  std::vector<std::optional<FoldOutcome>> outcomes(k);
  std::vector<std::optional<Model>> models(k);

  auto run_fold = [&](std::size_t f) {
    const auto& fold = result.plan.folds[f];
    const std::uint64_t fold_seed = config.train.seed + f;

    std::unordered_set<std::string> test_ids(fold.test.begin(), fold.test.end());
    std::vector<Label> labels;
    for (const auto& id : fold.train) {
      if (test_ids.count(id)) throw Error("cross_validate: segment " + id + " is in both train and test");
      labels.push_back(features.info(row_of.at(id)).label);
    }
    const auto balanced = balance_upsample(fold.train, labels, fold_seed);
    std::vector<std::size_t> train_rows, test_rows;
    for (const auto& id : balanced) train_rows.push_back(row_of.at(id));
    for (const auto& id : fold.test) test_rows.push_back(row_of.at(id));

    auto tc = config.train;
    tc.seed = fold_seed;
    const std::string tag = "fold " + std::to_string(f + 1) + "/" + std::to_string(k);
    say(tag + ": " + std::to_string(balanced.size()) + " balanced training segments, " +
        std::to_string(test_rows.size()) + " test segments");
    LogSink fold_log;
    if (log) fold_log = [&](std::string_view line) { say(tag + " " + std::string(line)); };
    auto trained = train_fold(features, train_rows, tc, fold_log);

    FoldOutcome out;
    out.metrics = evaluate(trained.model, features, test_rows, tc.batch_size);
    out.log = std::move(trained.log);
    out.train_size = train_rows.size();
    out.test_size = test_rows.size();
    out.early_stopped = trained.early_stopped;
    outcomes[f] = std::move(out);
    models[f] = std::move(trained.model);
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(config.jobs, static_cast<unsigned>(k)));
  if (workers == 1) {
    for (std::size_t f = 0; f < k; ++f) run_fold(f);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex fail_mu;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t f = next++; f < k; f = next++) {
          try {
            run_fold(f);
          } catch (...) {
            std::lock_guard lock(fail_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<FoldMetrics> metrics;
  for (std::size_t f = 0; f < k; ++f) {
    metrics.push_back(outcomes[f]->metrics);
    result.folds.push_back(std::move(*outcomes[f]));
    result.models.push_back(std::move(*models[f]));
  }
  result.report = MetricsReport::from_folds(config.train.mode, std::move(metrics));
  for (const auto& w : result.report.warnings) say("warning: " + w);
  auto& warnings = result.report.warnings;
  warnings.insert(warnings.begin(), result.plan.warnings.begin(), result.plan.warnings.end());
  return result;
}

}  // namespace murmur

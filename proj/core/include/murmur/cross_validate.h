#pragma once

#include <vector>

#include "murmur/feature_cache.h"
#include "murmur/folds.h"
#include "murmur/metrics.h"
#include "murmur/train.h"

namespace murmur {

struct CvConfig {
  TrainConfig train;  // train.seed is the run seed
  std::size_t folds = 5;
  // Folds trained concurrently. Each fold owns its parameters and uses seed
  // + fold index, so results do not depend on this value.
  unsigned jobs = 1;
};

struct FoldOutcome {
  FoldMetrics metrics;
  std::vector<EpochLog> log;
  std::size_t train_size = 0;  // after upsampling
  std::size_t test_size = 0;
  bool early_stopped = false;
};

struct CvResult {
  FoldPlan plan;
  MetricsReport report;
  std::vector<FoldOutcome> folds;
  std::vector<Model> models;  // one per fold
};

// make_folds -> per fold: balance_upsample, train_fold, evaluate -> aggregate.
// Fold f uses seed + f for upsampling and training.
CvResult cross_validate(const FeatureSet& features, const CvConfig& config, const LogSink& log = {});

}  // namespace murmur

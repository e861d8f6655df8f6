#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "murmur/feature_cache.h"
#include "murmur/metrics.h"
#include "murmur/model.h"
#include "murmur/nn/optim.h"

namespace murmur {

using LogSink = std::function<void(std::string_view)>;

struct TrainConfig {
  ModelMode mode = ModelMode::kFull;
  std::size_t epochs = 30;
  std::size_t batch_size = 128;
  double lr = 1e-3;
  double l2_lambda = 1e-4;
  double keep_prob = 0.8;
  std::uint64_t seed = 0;
  // Early stop once the epoch loss has failed to improve on the best value by
  // at least min_delta for `patience` consecutive epochs. patience 0 disables.
  std::size_t patience = 5;
  double min_delta = 1e-4;
  // Keep every epoch's shuffled index sequences in the result.
  bool record_orders = false;

  ModelConfig model_config() const;
  nlohmann::json to_json() const;
  // Throws ConfigError on a non-positive field.
  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // sample-weighted mean of cross-entropy + L2 over the epoch
  double accuracy = 0.0;  // train-mode predictions during the epoch
  std::size_t steps = 0;

  bool operator==(const EpochLog&) const = default;
};

struct TrainResult {
  Model model;
  std::vector<EpochLog> log;
  std::size_t steps = 0;
  bool early_stopped = false;
  // Populated when TrainConfig::record_orders is set; one entry per epoch.
  std::vector<std::vector<std::size_t>> spec_orders;
  std::vector<std::vector<std::size_t>> ceps_orders;
};

// Deterministic stream seeds derived from one run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Mini-batch trainer over fixed feature rows. Each epoch draws one seeded
// permutation for the spectrogram rows and one, from an identically seeded
// generator, for the cepstrogram rows; a mismatch throws.
class Trainer {
 public:
  Trainer(const FeatureSet& features, std::vector<std::size_t> rows, const TrainConfig& config);

  // One Adam step on the given feature rows; returns the batch loss.
  double step(std::span<const std::size_t> batch);
  EpochLog run_epoch();

  Model& model() { return model_; }
  const Model& model() const { return model_; }
  std::size_t steps() const { return static_cast<std::size_t>(optimizer_.steps()); }
  TrainResult finish() &&;

 private:
  double step_impl(std::span<const std::size_t> batch, std::size_t* correct);

  const FeatureSet& features_;
  std::vector<std::size_t> rows_;
  TrainConfig config_;
  Model model_;
  nn::Adam optimizer_;
  nn::Rng spec_shuffle_, ceps_shuffle_, dropout_rng_;
  std::vector<EpochLog> log_;
  std::vector<std::vector<std::size_t>> spec_orders_, ceps_orders_;
  bool early_stopped_ = false;
};

// Runs up to config.epochs epochs with early stopping.
TrainResult train_fold(const FeatureSet& features, std::span<const std::size_t> rows, const TrainConfig& config,
                       const LogSink& log = {});

// Infer-mode class probabilities [rows x 2], computed in batches.
nn::Tensor predict_proba(Model& model, const FeatureSet& features, std::span<const std::size_t> rows,
                         std::size_t batch_size = 128);
std::vector<Label> predict_labels(Model& model, const FeatureSet& features, std::span<const std::size_t> rows,
                                  std::size_t batch_size = 128);

// Argmax predictions against the stored labels.
FoldMetrics evaluate(Model& model, const FeatureSet& features, std::span<const std::size_t> rows,
                     std::size_t batch_size = 128);

}  // namespace murmur

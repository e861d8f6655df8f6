#include "murmur/train.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "murmur/error.h"

namespace murmur {

namespace {

enum Stream : std::uint64_t { kInitStream = 1, kShuffleStream = 2, kDropoutStream = 3 };

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the pair.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

ModelConfig TrainConfig::model_config() const {
  ModelConfig c;
  c.mode = mode;
  c.keep_prob = keep_prob;
  c.l2_lambda = l2_lambda;
  return c;
}

nlohmann::json TrainConfig::to_json() const {
  return {{"mode", to_string(mode)}, {"epochs", epochs},       {"batch_size", batch_size},
          {"lr", lr},                {"l2_lambda", l2_lambda}, {"keep_prob", keep_prob},
          {"seed", seed},            {"patience", patience},   {"min_delta", min_delta}};
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (!(l2_lambda >= 0.0) || !std::isfinite(l2_lambda)) throw ConfigError("l2_lambda must be nonnegative");
  if (!(keep_prob > 0.0) || keep_prob > 1.0) throw ConfigError("keep_prob must lie in (0, 1]");
  if (!(min_delta >= 0.0)) throw ConfigError("min_delta must be nonnegative");
}

Trainer::Trainer(const FeatureSet& features, std::vector<std::size_t> rows, const TrainConfig& config)
    : features_(features),
      rows_(std::move(rows)),
      config_(config),
      model_(Model::create(config.model_config(), derive_seed(config.seed, kInitStream))),
      optimizer_(model_.parameters(), nn::AdamConfig{.lr = config.lr}),
      spec_shuffle_(derive_seed(config.seed, kShuffleStream)),
      ceps_shuffle_(derive_seed(config.seed, kShuffleStream)),
      dropout_rng_(derive_seed(config.seed, kDropoutStream)) {
  config_.validate();
  if (rows_.empty()) throw ArgumentError("trainer: no training rows");
  for (auto r : rows_)
    if (r >= features_.size()) throw ArgumentError("trainer: row index out of range");
}

double Trainer::step_impl(std::span<const std::size_t> batch, std::size_t* correct) {
  const auto& mc = model_.config();
  std::vector<int> classes;
  classes.reserve(batch.size());
  for (auto r : batch) classes.push_back(static_cast<int>(features_.info(r).label));

  nn::Variable spec, ceps;
  if (mc.uses_cnn()) spec = nn::Variable(features_.spec_batch(batch));
  if (mc.uses_rnn()) ceps = nn::Variable(features_.ceps_batch(batch));

  optimizer_.zero_grad();
  auto logits = model_.logits(spec, ceps, nn::Mode::kTrain, dropout_rng_);
  auto loss = nn::add(nn::cross_entropy(logits, nn::one_hot(classes, kNumClasses)), model_.l2_penalty());
  const double value = loss.value()[0];
  if (!std::isfinite(value))
    throw NumericError(fmt("training loss became non-finite at step %.0f (lr %g); lower the learning rate "
                           "or check the features for overflow",
                           static_cast<double>(optimizer_.steps() + 1), config_.lr));
  loss.backward();
  optimizer_.step();

  if (correct) {
    const auto& z = logits.value();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const int pred = z[2 * i + 1] > z[2 * i] ? 1 : 0;
      *correct += pred == classes[i];
    }
  }
  return value;
}

double Trainer::step(std::span<const std::size_t> batch) { return step_impl(batch, nullptr); }

EpochLog Trainer::run_epoch() {
  std::vector<std::size_t> spec_order(rows_), ceps_order(rows_);
  std::shuffle(spec_order.begin(), spec_order.end(), spec_shuffle_);
  std::shuffle(ceps_order.begin(), ceps_order.end(), ceps_shuffle_);
  if (spec_order != ceps_order) throw Error("trainer: spectrogram and cepstrogram batch orders diverged");
  if (config_.record_orders) {
    spec_orders_.push_back(spec_order);
    ceps_orders_.push_back(ceps_order);
  }

  EpochLog entry;
  entry.epoch = log_.size() + 1;
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t begin = 0; begin < spec_order.size(); begin += config_.batch_size) {
    const std::size_t end = std::min(begin + config_.batch_size, spec_order.size());
    std::span<const std::size_t> batch(spec_order.data() + begin, end - begin);
    loss_sum += step_impl(batch, &correct) * static_cast<double>(batch.size());
    ++entry.steps;
  }
  entry.loss = loss_sum / static_cast<double>(rows_.size());
  entry.accuracy = static_cast<double>(correct) / static_cast<double>(rows_.size());
  log_.push_back(entry);
  return entry;
}

TrainResult Trainer::finish() && {
  TrainResult r{std::move(model_), std::move(log_), steps(), early_stopped_, std::move(spec_orders_),
                std::move(ceps_orders_)};
  return r;
}

TrainResult train_fold(const FeatureSet& features, std::span<const std::size_t> rows, const TrainConfig& config,
                       const LogSink& log) {
  Trainer trainer(features, {rows.begin(), rows.end()}, config);
  double best = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  bool stopped = false;
  for (std::size_t e = 0; e < config.epochs; ++e) {
    const auto entry = trainer.run_epoch();
    if (log)
      log("epoch " + std::to_string(entry.epoch) + fmt(": loss %.6f, train accuracy %.4f", entry.loss, entry.accuracy));
    if (entry.loss < best - config.min_delta) {
      best = entry.loss;
      stale = 0;
    } else if (config.patience > 0 && ++stale >= config.patience) {
      stopped = true;
      if (log) log("early stop after epoch " + std::to_string(entry.epoch));
      break;
    }
  }
  auto result = std::move(trainer).finish();
  result.early_stopped = stopped;
  return result;
}

nn::Tensor predict_proba(Model& model, const FeatureSet& features, std::span<const std::size_t> rows,
                         std::size_t batch_size) {
  if (batch_size == 0) throw ArgumentError("predict: batch_size must be positive");
  nn::Tensor out({rows.size(), static_cast<std::size_t>(kNumClasses)});
  nn::Rng unused(0);
  for (std::size_t begin = 0; begin < rows.size(); begin += batch_size) {
    const std::size_t end = std::min(begin + batch_size, rows.size());
    std::span<const std::size_t> batch = rows.subspan(begin, end - begin);
    nn::Tensor spec, ceps;
    if (model.config().uses_cnn()) spec = features.spec_batch(batch);
    if (model.config().uses_rnn()) ceps = features.ceps_batch(batch);
    const auto p = model.forward(spec, ceps, nn::Mode::kInfer, unused);
    std::copy(p.data(), p.data() + p.size(), out.data() + begin * kNumClasses);
  }
  return out;
}

std::vector<Label> predict_labels(Model& model, const FeatureSet& features, std::span<const std::size_t> rows,
                                  std::size_t batch_size) {
  const auto p = predict_proba(model, features, rows, batch_size);
  std::vector<Label> labels(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = p[2 * i + 1] > p[2 * i] ? Label::kMurmur : Label::kNormal;
  return labels;
}

FoldMetrics evaluate(Model& model, const FeatureSet& features, std::span<const std::size_t> rows,
                     std::size_t batch_size) {
  const auto predicted = predict_labels(model, features, rows, batch_size);
  Confusion c;
  for (std::size_t i = 0; i < rows.size(); ++i) c.add(features.info(rows[i]).label, predicted[i]);
  return FoldMetrics::from_confusion(c);
}

}  // namespace murmur

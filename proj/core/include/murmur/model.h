#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "murmur/nn/checkpoint.h"
#include "murmur/nn/lstm.h"
#include "murmur/nn/ops.h"

namespace murmur {

// Which branches feed the shared head.
enum class ModelMode { kFull, kCnnOnly, kBilstmOnly };

std::string_view to_string(ModelMode mode);
// "full", "cnn-only", "bilstm-only"
std::optional<ModelMode> parse_model_mode(std::string_view text);
// Table row names: "CNN+BiLSTM", "CNN", "BiLSTM".
std::string_view display_name(ModelMode mode);

struct ModelConfig {
  ModelMode mode = ModelMode::kFull;
  std::array<std::size_t, 3> conv_channels{4, 8, 16};
  std::size_t lstm_hidden = 128;
  std::size_t branch_units = 128;
  std::size_t fc1_units = 256;
  std::size_t fc2_units = 128;
  double keep_prob = 0.8;
  double l2_lambda = 1e-4;

  bool uses_cnn() const { return mode != ModelMode::kBilstmOnly; }
  bool uses_rnn() const { return mode != ModelMode::kCnnOnly; }
  std::size_t fusion_width() const { return (uses_cnn() ? branch_units : 0) + (uses_rnn() ? branch_units : 0); }
  std::size_t flatten_width() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// Spectrogram input [B x 1 x 65 x 61]; cepstrogram input [B x 398 x 13]
// (frames first). Output: two-class logits, index 0 = normal, 1 = murmur.
//
// CNN branch:  conv(4) BN ReLU pool | conv(8) BN ReLU pool | conv(16) BN ReLU
//              | flatten 3840 | dense 128 ReLU
// BiLSTM branch: BiLSTM(128) dropout | BiLSTM(128) dropout | summary 256
//              dropout | dense 128 ReLU
// Head: concat 256 | dense 256 ReLU | dense 128 ReLU | dense 2
//
// Parameters are shared handles; copying a Model is disabled, use clone().
class Model {
 public:
  static Model create(const ModelConfig& config, std::uint64_t seed);

  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model clone() const;

  const ModelConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }

  nn::Variable cnn_branch(const nn::Variable& spec, nn::Mode mode);
  nn::Variable bilstm_branch(const nn::Variable& ceps, nn::Mode mode, nn::Rng& rng);
  nn::Variable logits(const nn::Variable& spec, const nn::Variable& ceps, nn::Mode mode, nn::Rng& rng);
  // Row-stochastic class probabilities.
  nn::Tensor forward(const nn::Tensor& spec, const nn::Tensor& ceps, nn::Mode mode, nn::Rng& rng);

  // lambda * sum of squared CNN weights (conv kernels and the CNN dense
  // matrix; no biases, no batch-norm affine, nothing outside the CNN).
  nn::Variable l2_penalty() const;
  std::vector<nn::Variable> cnn_weights() const;

  // Trainable arrays in a fixed order.
  std::vector<nn::Variable> parameters() const;
  std::size_t parameter_count() const;

  // Trainable arrays plus batch-norm running statistics, by stable name.
  std::vector<nn::NamedArray> named_arrays() const;
  // Throws CorruptionError if names or shapes do not match this topology.
  void load_arrays(std::span<const nn::NamedArray> arrays);

  nlohmann::json topology() const;

  // <path> holds the arrays, <path>.json the topology.
  void save(const std::filesystem::path& path) const;
  static Model load(const std::filesystem::path& path);

 private:
  Model() = default;

  struct Entry {
    std::string name;
    nn::Variable var;
  };
  std::vector<Entry> entries() const;

  ModelConfig config_;
  std::uint64_t seed_ = 0;

  // CNN
  nn::Variable conv_k_[3], conv_b_[3];
  nn::BatchNormState bn_[3];
  nn::Variable cnn_fc_w_, cnn_fc_b_;
  // BiLSTM
  nn::LstmParams l1_fwd_, l1_bwd_, l2_fwd_, l2_bwd_;
  nn::Variable rnn_fc_w_, rnn_fc_b_;
  // Head
  nn::Variable fc1_w_, fc1_b_, fc2_w_, fc2_b_, out_w_, out_b_;
};

}  // namespace murmur

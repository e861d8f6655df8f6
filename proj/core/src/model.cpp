#include "murmur/model.h"

#include <map>

#include "binary_io.h"
#include "murmur/error.h"
#include "murmur/features.h"

namespace murmur {

using nn::Mode;
using nn::Tensor;
using nn::Variable;

std::string_view to_string(ModelMode mode) {
  switch (mode) {
    case ModelMode::kFull: return "full";
    case ModelMode::kCnnOnly: return "cnn-only";
    case ModelMode::kBilstmOnly: return "bilstm-only";
  }
  return "full";
}

std::optional<ModelMode> parse_model_mode(std::string_view text) {
  if (text == "full") return ModelMode::kFull;
  if (text == "cnn-only") return ModelMode::kCnnOnly;
  if (text == "bilstm-only") return ModelMode::kBilstmOnly;
  return std::nullopt;
}

std::string_view display_name(ModelMode mode) {
  switch (mode) {
    case ModelMode::kFull: return "CNN+BiLSTM";
    case ModelMode::kCnnOnly: return "CNN";
    case ModelMode::kBilstmOnly: return "BiLSTM";
  }
  return "CNN+BiLSTM";
}

std::size_t ModelConfig::flatten_width() const {
  return conv_channels[2] * (kSpecBins / 2 / 2) * (kSpecFrames / 2 / 2);
}

nlohmann::json ModelConfig::to_json() const {
  return {{"mode", to_string(mode)},
          {"conv_channels", conv_channels},
          {"conv_kernel", 3},
          {"padding", "same"},
          {"pooling", "max2x2 after conv1 and conv2, floor"},
          {"lstm_hidden", lstm_hidden},
          {"lstm_layers", 2},
          {"lstm_gate_order", "i,f,g,o"},
          {"sequence_summary", "concat(last forward step, first backward step)"},
          {"branch_units", branch_units},
          {"fc1_units", fc1_units},
          {"fc2_units", fc2_units},
          {"classes", 2},
          {"keep_prob", keep_prob},
          {"dropout_placement", "after each BiLSTM layer and before the BiLSTM dense layer"},
          {"l2_lambda", l2_lambda},
          {"l2_scope", "CNN conv kernels and CNN dense weights"}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    const auto mode = parse_model_mode(j.at("mode").get<std::string>());
    if (!mode) throw CorruptionError("model topology has an unknown mode");
    c.mode = *mode;
    c.conv_channels = j.at("conv_channels").get<std::array<std::size_t, 3>>();
    c.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
    c.branch_units = j.at("branch_units").get<std::size_t>();
    c.fc1_units = j.at("fc1_units").get<std::size_t>();
    c.fc2_units = j.at("fc2_units").get<std::size_t>();
    c.keep_prob = j.at("keep_prob").get<double>();
    c.l2_lambda = j.at("l2_lambda").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(std::string("model topology: ") + e.what());
  }
  return c;
}

namespace {

Variable param(Tensor t) { return Variable(std::move(t), true); }

Variable dense_weight(std::size_t in, std::size_t out, nn::Rng& rng) {
  return param(nn::xavier_uniform({in, out}, in, out, rng));
}

Variable bias(std::size_t n) { return param(Tensor({n})); }

}  // namespace

Model Model::create(const ModelConfig& config, std::uint64_t seed) {
  if (!(config.keep_prob > 0.0) || config.keep_prob > 1.0) throw ArgumentError("model: keep_prob must lie in (0, 1]");
  if (config.l2_lambda < 0.0) throw ArgumentError("model: l2_lambda must be nonnegative");
  Model m;
  m.config_ = config;
  m.seed_ = seed;
  nn::Rng rng(seed);

  if (config.uses_cnn()) {
    std::size_t in_ch = 1;
    for (int k = 0; k < 3; ++k) {
      const std::size_t out_ch = config.conv_channels[static_cast<std::size_t>(k)];
      m.conv_k_[k] = param(nn::xavier_uniform({out_ch, in_ch, 3, 3}, in_ch * 9, out_ch * 9, rng));
      m.conv_b_[k] = bias(out_ch);
      m.bn_[k] = nn::BatchNormState::create(out_ch);
      in_ch = out_ch;
    }
    m.cnn_fc_w_ = dense_weight(config.flatten_width(), config.branch_units, rng);
    m.cnn_fc_b_ = bias(config.branch_units);
  }
  if (config.uses_rnn()) {
    const std::size_t H = config.lstm_hidden;
    m.l1_fwd_ = nn::LstmParams::create(kCepstralCoefficients, H, rng);
    m.l1_bwd_ = nn::LstmParams::create(kCepstralCoefficients, H, rng);
    m.l2_fwd_ = nn::LstmParams::create(2 * H, H, rng);
    m.l2_bwd_ = nn::LstmParams::create(2 * H, H, rng);
    m.rnn_fc_w_ = dense_weight(2 * H, config.branch_units, rng);
    m.rnn_fc_b_ = bias(config.branch_units);
  }
  m.fc1_w_ = dense_weight(config.fusion_width(), config.fc1_units, rng);
  m.fc1_b_ = bias(config.fc1_units);
  m.fc2_w_ = dense_weight(config.fc1_units, config.fc2_units, rng);
  m.fc2_b_ = bias(config.fc2_units);
  m.out_w_ = dense_weight(config.fc2_units, kNumClasses, rng);
  m.out_b_ = bias(kNumClasses);
  return m;
}

Model Model::clone() const {
  Model copy = create(config_, seed_);
  copy.load_arrays(named_arrays());
  return copy;
}

Variable Model::cnn_branch(const Variable& spec, Mode mode) {
  if (!config_.uses_cnn()) throw ConfigError("cnn_branch: model has no CNN branch");
  const auto& s = spec.shape();
  if (s.size() != 4 || s[1] != 1 || s[2] != kSpecBins || s[3] != kSpecFrames)
    throw ShapeError("cnn_branch: input must be [B x 1 x 65 x 61], got " + nn::shape_string(s));
  Variable x = spec;
  for (int k = 0; k < 3; ++k) {
    x = nn::conv2d(x, conv_k_[k], conv_b_[k]);
    x = nn::batchnorm(x, bn_[k], mode);
    x = nn::relu(x);
    if (k < 2) x = nn::maxpool2(x);
  }
  x = nn::reshape(x, {s[0], config_.flatten_width()});
  return nn::relu(nn::dense(x, cnn_fc_w_, cnn_fc_b_));
}

Variable Model::bilstm_branch(const Variable& ceps, Mode mode, nn::Rng& rng) {
  if (!config_.uses_rnn()) throw ConfigError("bilstm_branch: model has no BiLSTM branch");
  const auto& s = ceps.shape();
  if (s.size() != 3 || s[1] != kMfccFrames || s[2] != kCepstralCoefficients)
    throw ShapeError("bilstm_branch: input must be [B x 398 x 13], got " + nn::shape_string(s));
  const double keep = config_.keep_prob;
  Variable x = nn::bilstm_layer(ceps, l1_fwd_, l1_bwd_);
  x = nn::dropout(x, keep, mode, rng);
  x = nn::bilstm_layer(x, l2_fwd_, l2_bwd_);
  x = nn::dropout(x, keep, mode, rng);
  x = nn::sequence_summary(x);
  x = nn::dropout(x, keep, mode, rng);
  return nn::relu(nn::dense(x, rnn_fc_w_, rnn_fc_b_));
}

Variable Model::logits(const Variable& spec, const Variable& ceps, Mode mode, nn::Rng& rng) {
  Variable fused;
  switch (config_.mode) {
    case ModelMode::kFull:
      if (spec.shape().empty() || ceps.shape().empty() || spec.shape()[0] != ceps.shape()[0])
        throw ArgumentError("forward: spectrogram and cepstrogram batches must have equal length");
      fused = nn::concat_last(cnn_branch(spec, mode), bilstm_branch(ceps, mode, rng));
      break;
    case ModelMode::kCnnOnly: fused = cnn_branch(spec, mode); break;
    case ModelMode::kBilstmOnly: fused = bilstm_branch(ceps, mode, rng); break;
  }
  Variable h = nn::relu(nn::dense(fused, fc1_w_, fc1_b_));
  h = nn::relu(nn::dense(h, fc2_w_, fc2_b_));
  return nn::dense(h, out_w_, out_b_);
}

Tensor Model::forward(const Tensor& spec, const Tensor& ceps, Mode mode, nn::Rng& rng) {
  return nn::softmax(logits(Variable(spec), Variable(ceps), mode, rng).value());
}

std::vector<Variable> Model::cnn_weights() const {
  if (!config_.uses_cnn()) return {};
  return {conv_k_[0], conv_k_[1], conv_k_[2], cnn_fc_w_};
}

Variable Model::l2_penalty() const {
  Variable total(Tensor::scalar(0.0));
  for (const auto& w : cnn_weights()) total = nn::add(total, nn::sum_squares(w));
  return nn::scale(total, config_.l2_lambda);
}

std::vector<Model::Entry> Model::entries() const {
  std::vector<Entry> e;
  if (config_.uses_cnn()) {
    for (int k = 0; k < 3; ++k) {
      const auto n = std::to_string(k + 1);
      e.push_back({"cnn.conv" + n + ".kernel", conv_k_[k]});
      e.push_back({"cnn.conv" + n + ".bias", conv_b_[k]});
      e.push_back({"cnn.bn" + n + ".gamma", bn_[k].gamma});
      e.push_back({"cnn.bn" + n + ".beta", bn_[k].beta});
    }
    e.push_back({"cnn.fc.weight", cnn_fc_w_});
    e.push_back({"cnn.fc.bias", cnn_fc_b_});
  }
  if (config_.uses_rnn()) {
    const std::pair<const char*, const nn::LstmParams*> layers[] = {
        {"rnn.l1.fwd", &l1_fwd_}, {"rnn.l1.bwd", &l1_bwd_}, {"rnn.l2.fwd", &l2_fwd_}, {"rnn.l2.bwd", &l2_bwd_}};
    for (const auto& [name, p] : layers) {
      e.push_back({std::string(name) + ".W", p->W});
      e.push_back({std::string(name) + ".U", p->U});
      e.push_back({std::string(name) + ".b", p->b});
    }
    e.push_back({"rnn.fc.weight", rnn_fc_w_});
    e.push_back({"rnn.fc.bias", rnn_fc_b_});
  }
  e.push_back({"head.fc1.weight", fc1_w_});
  e.push_back({"head.fc1.bias", fc1_b_});
  e.push_back({"head.fc2.weight", fc2_w_});
  e.push_back({"head.fc2.bias", fc2_b_});
  e.push_back({"head.out.weight", out_w_});
  e.push_back({"head.out.bias", out_b_});
  return e;
}

std::vector<Variable> Model::parameters() const {
  std::vector<Variable> params;
  for (auto& e : entries()) params.push_back(e.var);
  return params;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries()) n += nn::numel(e.var.shape());
  return n;
}

std::vector<nn::NamedArray> Model::named_arrays() const {
  std::vector<nn::NamedArray> arrays;
  for (const auto& e : entries()) arrays.push_back({e.name, e.var.value()});
  if (config_.uses_cnn()) {
    for (int k = 0; k < 3; ++k) {
      const auto n = std::to_string(k + 1);
      const auto c = bn_[k].channels();
      arrays.push_back({"cnn.bn" + n + ".running_mean", Tensor({c}, bn_[k].running_mean)});
      arrays.push_back({"cnn.bn" + n + ".running_var", Tensor({c}, bn_[k].running_var)});
    }
  }
  return arrays;
}

void Model::load_arrays(std::span<const nn::NamedArray> arrays) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& a : arrays) by_name[a.name] = &a.tensor;
  auto fetch = [&](const std::string& name, const nn::Shape& shape) -> const Tensor& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw CorruptionError("checkpoint lacks array " + name);
    if (it->second->shape() != shape)
      throw CorruptionError("checkpoint array " + name + " has shape " + nn::shape_string(it->second->shape()) +
                            ", expected " + nn::shape_string(shape));
    return *it->second;
  };
  for (auto& e : entries()) e.var.value() = fetch(e.name, e.var.shape());
  if (config_.uses_cnn()) {
    for (int k = 0; k < 3; ++k) {
      const auto n = std::to_string(k + 1);
      const nn::Shape shape{bn_[k].channels()};
      bn_[k].running_mean = fetch("cnn.bn" + n + ".running_mean", shape).to_vector();
      bn_[k].running_var = fetch("cnn.bn" + n + ".running_var", shape).to_vector();
    }
  }
  if (arrays.size() != named_arrays().size()) throw CorruptionError("checkpoint has unexpected extra arrays");
}

nlohmann::json Model::topology() const {
  return {{"format", "murmur-model"},
          {"version", nn::kCheckpointVersion},
          {"seed", seed_},
          {"parameter_count", parameter_count()},
          {"config", config_.to_json()}};
}

void Model::save(const std::filesystem::path& path) const {
  nn::save_checkpoint(path, named_arrays());
  auto sidecar = path;
  sidecar += ".json";
  detail::write_text(sidecar, topology().dump(2) + "\n");
}

Model Model::load(const std::filesystem::path& path) {
  auto sidecar = path;
  sidecar += ".json";
  nlohmann::json topo;
  try {
    topo = nlohmann::json::parse(detail::read_text(sidecar));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError("model topology " + sidecar.string() + ": " + e.what());
  }
  if (topo.value("format", "") != "murmur-model") throw CorruptionError("not a murmur model topology");
  Model m = create(ModelConfig::from_json(topo.at("config")), topo.value("seed", std::uint64_t{0}));
  m.load_arrays(nn::load_checkpoint(path));
  return m;
}

}  // namespace murmur

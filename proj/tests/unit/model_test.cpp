#include <cmath>
#include <cstring>
#include <fstream>

#include <gtest/gtest.h>

#include "murmur/error.h"
#include "murmur/model.h"
#include "oracles.h"

using namespace murmur;
using namespace murmur::nn;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  const auto n = numel(shape);
  return Tensor(std::move(shape), oracle::random_vector(n, rng, lo, hi));
}

Tensor spec_input(std::size_t batch, std::mt19937_64& rng) { return random_tensor({batch, 1, 65, 61}, rng, -4, 2); }
Tensor ceps_input(std::size_t batch, std::mt19937_64& rng) { return random_tensor({batch, 398, 13}, rng, -2, 2); }

ModelConfig config_for(ModelMode mode) {
  ModelConfig c;
  c.mode = mode;
  return c;
}

void zero_all(Model& m) {
  for (auto p : m.parameters()) p.value().fill(0.0);
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST(ModelConfig, NamesAndJson) {
  EXPECT_EQ(parse_model_mode("cnn-only"), ModelMode::kCnnOnly);
  EXPECT_EQ(parse_model_mode("bilstm-only"), ModelMode::kBilstmOnly);
  EXPECT_EQ(parse_model_mode("full"), ModelMode::kFull);
  EXPECT_FALSE(parse_model_mode("rnn"));
  EXPECT_EQ(display_name(ModelMode::kFull), "CNN+BiLSTM");
  EXPECT_EQ(display_name(ModelMode::kCnnOnly), "CNN");
  EXPECT_EQ(display_name(ModelMode::kBilstmOnly), "BiLSTM");

  ModelConfig c;
  c.mode = ModelMode::kBilstmOnly;
  c.l2_lambda = 0.25;
  const auto back = ModelConfig::from_json(c.to_json());
  EXPECT_EQ(back.mode, c.mode);
  EXPECT_EQ(back.l2_lambda, 0.25);
  EXPECT_EQ(back.conv_channels, c.conv_channels);
  EXPECT_THROW(ModelConfig::from_json({{"mode", "full"}}), CorruptionError);
}

TEST(Model, CnnShapeTrace) {
  const ModelConfig c;
  // Same trace through the primitive ops: same-padded convs keep H x W, pools floor-halve.
  Shape s{2, 1, 65, 61};
  const std::vector<Shape> expected{{2, 4, 65, 61}, {2, 4, 32, 30}, {2, 8, 32, 30},
                                    {2, 8, 16, 15}, {2, 16, 16, 15}};
  Variable x{Tensor(s)};
  std::size_t in_ch = 1, step = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    x = conv2d(x, Variable(Tensor({c.conv_channels[k], in_ch, 3, 3})), Variable(Tensor({c.conv_channels[k]})));
    EXPECT_EQ(x.shape(), expected[step++]);
    if (k < 2) {
      x = maxpool2(x);
      EXPECT_EQ(x.shape(), expected[step++]);
    }
    in_ch = c.conv_channels[k];
  }
  EXPECT_EQ(c.flatten_width(), 3840u);

  auto m = Model::create(c, 1);
  std::mt19937_64 rng(1);
  EXPECT_EQ(m.cnn_branch(Variable(spec_input(2, rng)), Mode::kInfer).shape(), (Shape{2, 128}));
}

TEST(Model, BilstmShapeTraceAndLogits) {
  auto m = Model::create({}, 2);
  std::mt19937_64 data(2);
  Rng rng(3);
  const auto ceps = Variable(ceps_input(2, data));
  EXPECT_EQ(bilstm_layer(ceps, LstmParams::zeros(13, 128), LstmParams::zeros(13, 128)).shape(),
            (Shape{2, 398, 256}));
  EXPECT_EQ(m.bilstm_branch(ceps, Mode::kInfer, rng).shape(), (Shape{2, 128}));
  EXPECT_EQ(m.logits(Variable(spec_input(2, data)), ceps, Mode::kInfer, rng).shape(), (Shape{2, 2}));
}

TEST(Model, ZeroCases) {
  std::mt19937_64 data(4);
  Rng rng(5);
  auto m = Model::create({}, 4);
  const auto zero_cnn = m.cnn_branch(Variable(Tensor({2, 1, 65, 61})), Mode::kTrain);
  for (double v : zero_cnn.value().to_vector()) EXPECT_EQ(v, 0.0);

  zero_all(m);
  const auto zero_rnn = m.bilstm_branch(Variable(Tensor({2, 398, 13})), Mode::kInfer, rng);
  for (double v : zero_rnn.value().to_vector()) EXPECT_EQ(v, 0.0);
  const auto p = m.forward(spec_input(3, data), ceps_input(3, data), Mode::kInfer, rng);
  for (double v : p.to_vector()) EXPECT_EQ(v, 0.5);
}

TEST(Model, ProbabilitiesAreRowStochasticAndInferIsDeterministic) {
  std::mt19937_64 data(6);
  auto m = Model::create({}, 6);
  const auto spec = spec_input(3, data), ceps = ceps_input(3, data);
  Rng r1(1), r2(2);
  const auto p = m.forward(spec, ceps, Mode::kInfer, r1);
  for (std::size_t b = 0; b < 3; ++b) {
    EXPECT_GE(p[2 * b], 0.0);
    EXPECT_LE(p[2 * b], 1.0);
    EXPECT_NEAR(p[2 * b] + p[2 * b + 1], 1.0, 1e-12);
  }
  EXPECT_TRUE(bitwise_equal(p, m.forward(spec, ceps, Mode::kInfer, r2)));
  EXPECT_TRUE(bitwise_equal(m.cnn_branch(Variable(spec), Mode::kInfer).value(),
                            m.cnn_branch(Variable(spec), Mode::kInfer).value()));
}

TEST(Model, FusedGradientMatchesFiniteDifferences) {
  std::mt19937_64 data(7);
  auto m = Model::create({}, 7);
  const auto spec = spec_input(3, data), ceps = ceps_input(3, data);
  const auto labels = one_hot(std::vector<int>{0, 1, 1}, 2);
  // Same dropout mask on every evaluation.
  auto loss = [&] {
    Rng rng(11);
    return add(cross_entropy(m.logits(Variable(spec), Variable(ceps), Mode::kTrain, rng), labels), m.l2_penalty());
  };
  for (auto p : m.parameters()) p.zero_grad();
  loss().backward();

  const auto params = m.parameters();
  const auto names = m.named_arrays();
  // 20 coordinates spread over every stage of the graph.
  const std::vector<std::pair<std::string, std::size_t>> picks{
      {"cnn.conv1.kernel", 4},  {"cnn.conv2.kernel", 9},  {"cnn.bn1.gamma", 1},   {"cnn.conv2.kernel", 100},
      {"cnn.bn2.beta", 5},      {"cnn.conv3.kernel", 7}, {"cnn.bn3.gamma", 12},  {"cnn.fc.weight", 123457},
      {"cnn.fc.bias", 9},       {"rnn.l1.fwd.W", 11},    {"rnn.l1.bwd.U", 4000}, {"rnn.l1.fwd.b", 130},
      {"rnn.l2.fwd.W", 20000},  {"rnn.l2.bwd.b", 300},   {"rnn.l2.bwd.U", 999},  {"rnn.fc.weight", 512},
      {"head.fc1.weight", 777}, {"head.fc2.bias", 3},    {"head.out.weight", 5}, {"head.out.bias", 1}};
  double worst = 0.0;
  std::size_t checked = 0;
  for (const auto& [name, coord] : picks) {
    std::size_t k = 0;
    while (names[k].name != name) ++k;
    ASSERT_LT(k, params.size()) << name;
    // A 1e-4 nudge to an early weight moves thousands of activations, some of
    // them across ReLU or max-pool kinks; 1e-6 keeps the difference on one piece.
    const auto r = oracle::check_gradient(params[k], [&] { return loss().value()[0]; }, {coord}, 1e-6);
    EXPECT_LE(r.max_rel_error, 1e-4) << name << "[" << coord << "]";
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
  }
  EXPECT_EQ(checked, 20u);
  // Train-mode batch norm subtracts the batch mean, so conv biases cannot move the loss.
  for (const std::string name : {"cnn.conv1.bias", "cnn.conv2.bias", "cnn.conv3.bias"}) {
    std::size_t k = 0;
    while (names[k].name != name) ++k;
    for (double g : params[k].grad().to_vector()) EXPECT_NEAR(g, 0.0, 1e-12) << name;
  }
  RecordProperty("max_rel_error", std::to_string(worst));
}

TEST(Model, L2PenaltyCoversCnnWeightsOnly) {
  ModelConfig c;
  c.l2_lambda = 0.0;
  EXPECT_EQ(Model::create(c, 1).l2_penalty().value()[0], 0.0);

  c.l2_lambda = 0.5;
  auto m = Model::create(c, 1);
  zero_all(m);
  for (auto p : m.parameters()) p.value().fill(3.0);  // everything nonzero
  for (auto w : m.cnn_weights()) w.value().fill(0.0);
  EXPECT_EQ(m.l2_penalty().value()[0], 0.0);

  auto w = m.cnn_weights()[1];
  w.value()[0] = 2.0;
  auto pen = m.l2_penalty();
  EXPECT_DOUBLE_EQ(pen.value()[0], 2.0);
  for (auto p : m.parameters()) p.zero_grad();
  pen.backward();
  EXPECT_DOUBLE_EQ(w.grad()[0], 2.0);

  w.value()[0] = 1.5;
  EXPECT_LT(m.l2_penalty().value()[0], 2.0);
  EXPECT_EQ(m.cnn_weights().size(), 4u);
  EXPECT_TRUE(Model::create(config_for(ModelMode::kBilstmOnly), 1).cnn_weights().empty());
}

TEST(Model, BranchIsolation) {
  std::mt19937_64 data(8);
  auto m = Model::create({}, 8);
  const auto spec = spec_input(2, data);
  Rng rng(1);
  const auto before = m.cnn_branch(Variable(spec), Mode::kInfer).value();
  const auto with_ceps = m.logits(Variable(spec), Variable(ceps_input(2, data)), Mode::kInfer, rng).value();
  const auto zero_ceps = m.logits(Variable(spec), Variable(Tensor({2, 398, 13})), Mode::kInfer, rng).value();
  EXPECT_NE(with_ceps.to_vector(), zero_ceps.to_vector());
  EXPECT_TRUE(bitwise_equal(before, m.cnn_branch(Variable(spec), Mode::kInfer).value()));
}

TEST(Model, BranchOnlyModes) {
  std::mt19937_64 data(9);
  Rng rng(1);
  auto cnn = Model::create(config_for(ModelMode::kCnnOnly), 1);
  EXPECT_EQ(cnn.config().fusion_width(), 128u);
  EXPECT_THROW(cnn.bilstm_branch(Variable(ceps_input(1, data)), Mode::kInfer, rng), ConfigError);
  // The cepstrogram is ignored entirely.
  const auto spec = spec_input(2, data);
  EXPECT_TRUE(bitwise_equal(cnn.forward(spec, Tensor(), Mode::kInfer, rng), cnn.forward(spec, ceps_input(2, data), Mode::kInfer, rng)));

  auto rnn = Model::create(config_for(ModelMode::kBilstmOnly), 1);
  EXPECT_THROW(rnn.cnn_branch(Variable(spec), Mode::kInfer), ConfigError);
  EXPECT_EQ(rnn.forward(Tensor(), ceps_input(2, data), Mode::kInfer, rng).shape(), (Shape{2, 2}));
}

TEST(Model, InputErrors) {
  std::mt19937_64 data(10);
  Rng rng(1);
  auto m = Model::create({}, 1);
  EXPECT_THROW(m.cnn_branch(Variable(Tensor({2, 1, 64, 61})), Mode::kInfer), ShapeError);
  EXPECT_THROW(m.bilstm_branch(Variable(Tensor({2, 13, 398})), Mode::kInfer, rng), ShapeError);
  EXPECT_THROW(m.forward(spec_input(2, data), ceps_input(3, data), Mode::kInfer, rng), ArgumentError);
  ModelConfig bad;
  bad.keep_prob = 0.0;
  EXPECT_THROW(Model::create(bad, 1), ArgumentError);
}

TEST(Model, ParameterCountFollowsFromShapes) {
  const std::size_t conv = (4 * 1 * 9 + 4) + (8 * 4 * 9 + 8) + (16 * 8 * 9 + 16);
  const std::size_t bn = 2 * (4 + 8 + 16);
  const std::size_t cnn_fc = 3840 * 128 + 128;
  const std::size_t lstm1 = 4 * 128 * 13 + 4 * 128 * 128 + 4 * 128;
  const std::size_t lstm2 = 4 * 128 * 256 + 4 * 128 * 128 + 4 * 128;
  const std::size_t rnn_fc = 256 * 128 + 128;
  const std::size_t head_full = (256 * 256 + 256) + (256 * 128 + 128) + (128 * 2 + 2);
  const std::size_t head_branch = (128 * 256 + 256) + (256 * 128 + 128) + (128 * 2 + 2);
  const std::size_t cnn = conv + bn + cnn_fc;
  const std::size_t rnn = 2 * lstm1 + 2 * lstm2 + rnn_fc;
  EXPECT_EQ(Model::create({}, 1).parameter_count(), cnn + rnn + head_full);
  EXPECT_EQ(Model::create({}, 1).parameter_count(), 1164698u);
  EXPECT_EQ(Model::create(config_for(ModelMode::kCnnOnly), 1).parameter_count(), cnn + head_branch);
  EXPECT_EQ(Model::create(config_for(ModelMode::kBilstmOnly), 1).parameter_count(), rnn + head_branch);
}

TEST(Model, SameSeedSameInitialisation) {
  const auto a = Model::create({}, 42).named_arrays();
  const auto b = Model::create({}, 42).named_arrays();
  const auto c = Model::create({}, 43).named_arrays();
  ASSERT_EQ(a.size(), b.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(bitwise_equal(a[i].tensor, b[i].tensor)) << a[i].name;
    differs |= !bitwise_equal(a[i].tensor, c[i].tensor);
  }
  EXPECT_TRUE(differs);
}

TEST(Model, CheckpointRoundTripIsBitwise) {
  std::mt19937_64 data(12);
  auto m = Model::create({}, 12);
  const auto spec = spec_input(4, data), ceps = ceps_input(4, data);
  Rng rng(3);
  m.forward(spec, ceps, Mode::kTrain, rng);  // moves the batch-norm running statistics

  oracle::TempDir dir("model");
  const auto path = dir.path() / "m.ckpt";
  m.save(path);
  auto back = Model::load(path);
  EXPECT_EQ(back.parameter_count(), m.parameter_count());
  Rng r1(1), r2(1);
  EXPECT_TRUE(bitwise_equal(m.forward(spec, ceps, Mode::kInfer, r1), back.forward(spec, ceps, Mode::kInfer, r2)));
  Rng r3(1);
  EXPECT_TRUE(bitwise_equal(m.forward(spec, ceps, Mode::kInfer, r1), m.clone().forward(spec, ceps, Mode::kInfer, r3)));
}

TEST(Model, MismatchedOrCorruptCheckpointsAreRejected) {
  auto full = Model::create({}, 1);
  auto cnn = Model::create(config_for(ModelMode::kCnnOnly), 1);
  EXPECT_THROW(cnn.load_arrays(full.named_arrays()), CorruptionError);
  EXPECT_THROW(full.load_arrays(cnn.named_arrays()), CorruptionError);

  oracle::TempDir dir("bad_model");
  const auto path = dir.path() / "m.ckpt";
  cnn.save(path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(200);
    const auto byte = static_cast<char>(f.get() ^ 0x10);
    f.seekp(200);
    f.put(byte);
  }
  EXPECT_THROW(Model::load(path), CorruptionError);
  std::ofstream(dir.path() / "m.ckpt.json") << "{}";
  EXPECT_THROW(Model::load(path), CorruptionError);
}

TEST(Model, TopologyDescribesTheArchitecture) {
  const auto topo = Model::create({}, 5).topology();
  EXPECT_EQ(topo.at("format"), "murmur-model");
  EXPECT_EQ(topo.at("seed"), 5u);
  EXPECT_EQ(topo.at("parameter_count"), 1164698u);
  const auto& cfg = topo.at("config");
  EXPECT_EQ(cfg.at("conv_channels"), nlohmann::json({4, 8, 16}));
  EXPECT_EQ(cfg.at("lstm_hidden"), 128);
  EXPECT_EQ(cfg.at("l2_lambda"), 1e-4);
  EXPECT_TRUE(cfg.contains("sequence_summary"));
}

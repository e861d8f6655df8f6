#include <benchmark/benchmark.h>

#include "murmur/model.h"
#include "murmur/nn/lstm.h"
#include "murmur/nn/ops.h"

using namespace murmur;
using namespace murmur::nn;

namespace {

// One BiLSTM layer over the 398-frame cepstrogram sequence; range(0) is the batch.
void BM_BilstmForward(benchmark::State& state) {
  const auto B = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const auto fwd = LstmParams::create(13, 128, rng), bwd = LstmParams::create(13, 128, rng);
  const Variable x(xavier_uniform({B, 398, 13}, 1, 1, rng));
  for (auto _ : state) benchmark::DoNotOptimize(bilstm_layer(x, fwd, bwd).value().data());
}
BENCHMARK(BM_BilstmForward)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_BilstmForwardBackward(benchmark::State& state) {
  const auto B = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const auto fwd = LstmParams::create(13, 128, rng), bwd = LstmParams::create(13, 128, rng);
  const Variable x(xavier_uniform({B, 398, 13}, 1, 1, rng));
  for (auto _ : state) sum(bilstm_layer(x, fwd, bwd)).backward();
}
BENCHMARK(BM_BilstmForwardBackward)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_ModelInfer(benchmark::State& state) {
  const auto B = static_cast<std::size_t>(state.range(0));
  auto model = Model::create({}, 3);
  Rng rng(3);
  const auto spec = xavier_uniform({B, 1, 65, 61}, 1, 1, rng);
  const auto ceps = xavier_uniform({B, 398, 13}, 1, 1, rng);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(spec, ceps, Mode::kInfer, rng).data());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(B));
}
BENCHMARK(BM_ModelInfer)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

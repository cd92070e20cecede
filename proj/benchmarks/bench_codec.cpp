#include <benchmark/benchmark.h>

#include "nlad/codec.hpp"
#include "nlad/corpus.hpp"
#include "nlad/experiment.hpp"

namespace {

using namespace nlad;

const Signal& speech() {
  static const Signal s = desk_corpus(2024, 1, 1.0).front().signal;
  return s;
}

std::vector<PredictionSample> frame_data() {
  const auto& x = speech().samples;
  return make_dataset(std::span<const double>(x).subspan(2000, 200));
}

void BM_Jacobian(benchmark::State& state) {
  const auto data = frame_data();
  const MlpWeights w = init_random(1, 0, 0);
  for (auto _ : state) benchmark::DoNotOptimize(jacobian(w, data));
}
BENCHMARK(BM_Jacobian);

void BM_TrainLm(benchmark::State& state) {
  const auto data = frame_data();
  TrainConfig cfg;
  cfg.epochs = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(train_lm(data, init_random(1, 0, 0), cfg));
}
BENCHMARK(BM_TrainLm)->Arg(6)->Arg(50);

void BM_TrainBayes(benchmark::State& state) {
  const auto data = frame_data();
  TrainConfig cfg;
  cfg.epochs = 50;
  for (auto _ : state) benchmark::DoNotOptimize(train_bayes(data, init_random(1, 0, 0), cfg));
}
BENCHMARK(BM_TrainBayes);

// One second of speech through the codec for a few table rows.
void BM_Encode(benchmark::State& state, const char* row) {
  const CodecConfig cfg = make_cell_config(*find_row(row), 4, 1);
  for (auto _ : state) benchmark::DoNotOptimize(encode(speech(), cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(speech().size()));
}
BENCHMARK_CAPTURE(BM_Encode, lpc10, "LPC-10");
BENCHMARK_CAPTURE(BM_Encode, lm_mse_6, "L-M mse 6")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Encode, br_cmedian_50, "B-R Cmedian msereg 50")->Unit(benchmark::kMillisecond);

void BM_Decode(benchmark::State& state) {
  const CodecConfig cfg = make_cell_config(*find_row("L-M mse 6"), 4, 1);
  const auto bytes = serialize(encode(speech(), cfg).bitstream);
  for (auto _ : state) benchmark::DoNotOptimize(decode(bytes));
}
BENCHMARK(BM_Decode)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

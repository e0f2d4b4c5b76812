#include <benchmark/benchmark.h>
#include <torch/torch.h>

#include <random>
#include <vector>

#include "jicd/codec.hpp"
#include "jicd/entropy_models.hpp"
#include "jicd/noise_lab.hpp"
#include "jicd/range_coder.hpp"
#include "jicd/synthetic.hpp"

using namespace jicd;

namespace {

std::vector<std::int32_t> gaussian_symbols(std::size_t n, double sigma) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d(0.0, sigma);
  std::vector<std::int32_t> out(n);
  for (auto& s : out) s = static_cast<std::int32_t>(std::lround(d(rng)));
  return out;
}

void BM_GaussianSymbolModel(benchmark::State& state) {
  const double sigma = static_cast<double>(state.range(0)) / 10.0;
  for (auto _ : state) benchmark::DoNotOptimize(entropy::gaussian_symbol_model(sigma));
}
BENCHMARK(BM_GaussianSymbolModel)->Arg(2)->Arg(10)->Arg(100)->Arg(1000);

void BM_RangeEncode(benchmark::State& state) {
  const auto model = entropy::gaussian_symbol_model(3.0);
  const auto symbols = gaussian_symbols(static_cast<std::size_t>(state.range(0)), 3.0);
  for (auto _ : state) {
    entropy::RangeEncoder enc;
    for (auto s : symbols) model.encode(enc, s);
    benchmark::DoNotOptimize(enc.finish());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RangeEncode)->Arg(1 << 16);

void BM_RangeDecode(benchmark::State& state) {
  const auto model = entropy::gaussian_symbol_model(3.0);
  const auto symbols = gaussian_symbols(static_cast<std::size_t>(state.range(0)), 3.0);
  entropy::RangeEncoder enc;
  for (auto s : symbols) model.encode(enc, s);
  const auto bytes = enc.finish();
  for (auto _ : state) {
    entropy::RangeDecoder dec(bytes);
    for (std::size_t k = 0; k < symbols.size(); ++k) benchmark::DoNotOptimize(model.decode(dec));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RangeDecode)->Arg(1 << 16);

void BM_SynthAwgn(benchmark::State& state) {
  const ImageBuffer clean(256, 256, 0.5f);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(noise::synth_awgn(clean, 25.0, seed++));
}
BENCHMARK(BM_SynthAwgn);

void BM_ToyCompress(benchmark::State& state) {
  torch::NoGradGuard guard;
  net::JicdModel model(net::ModelConfig::toy(), 1);
  model->eval();
  const auto img = data::synthetic_image(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)), 1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(codec::compress(img, *model));
}
BENCHMARK(BM_ToyCompress)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_ToyDecodeBase(benchmark::State& state) {
  torch::NoGradGuard guard;
  net::JicdModel model(net::ModelConfig::toy(), 1);
  model->eval();
  const auto img = data::synthetic_image(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)), 1, 0);
  const auto bs = codec::compress(img, *model).bitstream;
  for (auto _ : state) benchmark::DoNotOptimize(codec::decode_base(bs, *model));
}
BENCHMARK(BM_ToyDecodeBase)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include <random>

#include "pixembed/adam.hpp"
#include "pixembed/experiment.hpp"
#include "pixembed/layers.hpp"
#include "pixembed/noise.hpp"

using namespace pixembed;

namespace {

// Digit-like synthetic images: mostly background with a bright blob.
LabeledDataset synthetic(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> px(0, 255), label(0, 9), pos(6, 21);
  LabeledDataset d{"synthetic", {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    Image img;
    const int cy = pos(rng), cx = pos(rng);
    for (int y = cy - 4; y <= cy + 4; ++y) {
      for (int x = cx - 4; x <= cx + 4; ++x) img.pixels[y * kImageSide + x] = static_cast<std::uint8_t>(px(rng));
    }
    d.images.push_back(img);
    d.labels.push_back(static_cast<std::uint8_t>(label(rng)));
  }
  return d;
}

const DatasetStats kStats{33.3, 78.6};

}  // namespace

static void BM_Conv2dForward(benchmark::State& state) {
  const auto cin = static_cast<std::size_t>(state.range(0));
  const auto side = static_cast<std::size_t>(state.range(1));
  const Tensor input({side, side, cin}, init::Uniform{-1, 1, 1});
  const Tensor weights({3, 3, cin, 64}, init::Uniform{-0.1, 0.1, 2});
  const Tensor bias({64});
  Tensor out;
  ConvWorkspace ws;
  for (auto _ : state) {
    conv2d_forward(input, weights, bias, out, ws);
    benchmark::DoNotOptimize(out.values().data());
  }
}
BENCHMARK(BM_Conv2dForward)->Args({1, 28})->Args({64, 28})->Args({64, 14});

static void BM_Conv2dBackward(benchmark::State& state) {
  const auto cin = static_cast<std::size_t>(state.range(0));
  const auto side = static_cast<std::size_t>(state.range(1));
  Tensor input({side, side, cin}, init::Uniform{-1, 1, 1});
  Tensor weights({3, 3, cin, 64}, init::Uniform{-0.1, 0.1, 2});
  Tensor bias({64});
  Tensor out;
  ConvWorkspace ws;
  conv2d_forward(input, weights, bias, out, ws);
  for (std::size_t i = 0; i < out.size(); ++i) out.grad()[i] = 1e-3 * static_cast<real>(i % 7);
  for (auto _ : state) {
    conv2d_backward(input, weights, bias, out, ws, true, true);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_Conv2dBackward)->Args({1, 28})->Args({64, 28})->Args({64, 14});

// First layer of the embedded variant, fused against lookup followed by conv.
static void BM_EmbeddingConv(benchmark::State& state) {
  const bool fused = state.range(0) != 0;
  const auto q = build_quantizer(kStats);
  const auto table = init_table(q.vocab_size, 64, 3);
  const IndexGrid grid = encode_indices(synthetic(1, 4).images[0], q);
  const Tensor weights({3, 3, 64, 64}, init::Uniform{-0.1, 0.1, 5});
  const Tensor bias({64});
  Tensor embedded, out;
  ConvWorkspace ws;
  EmbeddingConvCache cache;
  for (auto _ : state) {
    if (fused) {
      embedding_conv2d_forward(grid, table, weights, bias, out, cache);
    } else {
      embedding_forward(grid, table, embedded);
      conv2d_forward(embedded, weights, bias, out, ws);
    }
    benchmark::DoNotOptimize(out.values().data());
  }
  state.SetLabel(fused ? "fused" : "lookup+conv");
}
BENCHMARK(BM_EmbeddingConv)->Arg(1)->Arg(0);

static void BM_TrainStep(benchmark::State& state) {
  const auto variant = static_cast<Variant>(state.range(0));
  const auto data = synthetic(64, 6);
  ExperimentConfig cfg;
  Classifier model(variant, cfg, kStats);
  Adam opt(model.network().parameters(), cfg.adam);
  std::vector<std::size_t> batch(64);
  for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = i;
  for (auto _ : state) {
    model.network().zero_grad();
    benchmark::DoNotOptimize(model.accumulate_batch(data, batch));
    opt.step();
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch.size()));
  state.SetLabel(std::string(to_string(variant)));
}
BENCHMARK(BM_TrainStep)
    ->Arg(static_cast<int>(Variant::WithPe))
    ->Arg(static_cast<int>(Variant::WithoutPe))
    ->Unit(benchmark::kMillisecond);

static void BM_SaltPepper(benchmark::State& state) {
  const auto data = synthetic(256, 7);
  const NoiseSpec spec{noise::SaltPepper{0.5, 100}};
  for (auto _ : state) benchmark::DoNotOptimize(corrupt_dataset(data, spec, 3));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * data.size()));
}
BENCHMARK(BM_SaltPepper);

BENCHMARK_MAIN();

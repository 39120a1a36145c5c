#include <benchmark/benchmark.h>

#include "oracles.hpp"
#include "spikeline/isi_etfi.hpp"
#include "spikeline/metrics.hpp"
#include "spikeline/spike_core.hpp"
#include "spikeline/stream_io.hpp"

using namespace spikeline;

namespace {

SensorConfig sensor(std::uint32_t n, std::uint32_t frames, bool noisy) {
  SensorConfig cfg;
  cfg.width = cfg.height = n;
  cfg.steps_per_frame = frames;
  cfg.noise.shot_noise_enabled = noisy;
  cfg.noise.seed = 1;
  return cfg;
}

LuminanceVideo scene(const SensorConfig& cfg) {
  const GrayImage img = oracle::natural_scene(cfg.width, cfg.height, 7);
  std::vector<double> currents(img.size());
  for (std::size_t i = 0; i < currents.size(); ++i)
    currents[i] = img.values[i] / 255.0 * 0.5 / cfg.sample_period;
  return LuminanceVideo::still(cfg.width, cfg.height, std::move(currents));
}

void set_pixel_frames(benchmark::State& state, const SensorConfig& cfg) {
  state.SetItemsProcessed(state.iterations() * std::int64_t{cfg.width} * cfg.height *
                          cfg.steps_per_frame);
}

void BM_Simulate(benchmark::State& state) {
  const auto cfg = sensor(static_cast<std::uint32_t>(state.range(0)), 500, state.range(1) != 0);
  const LuminanceVideo video = scene(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_stream(video, cfg, 1));
  set_pixel_frames(state, cfg);
}
BENCHMARK(BM_Simulate)->Args({128, 0})->Args({256, 0})->Args({64, 1})->Unit(benchmark::kMillisecond);

void BM_IsiSearch(benchmark::State& state) {
  const auto cfg = sensor(static_cast<std::uint32_t>(state.range(0)), 500, false);
  const SpikeStream stream = simulate_stream(scene(cfg), cfg, 1);
  for (auto _ : state) benchmark::DoNotOptimize(isi_search(stream, 250, 1));
  set_pixel_frames(state, cfg);
}
BENCHMARK(BM_IsiSearch)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Codec(benchmark::State& state) {
  const auto cfg = sensor(128, 500, false);
  const SpikeStream stream = simulate_stream(scene(cfg), cfg, 1);
  for (auto _ : state) {
    const auto bytes = encode_stream(stream);
    benchmark::DoNotOptimize(decode_stream(bytes));
  }
  set_pixel_frames(state, cfg);
}
BENCHMARK(BM_Codec)->Unit(benchmark::kMillisecond);

void BM_Ssim(benchmark::State& state) {
  const auto n = static_cast<std::uint32_t>(state.range(0));
  const GrayImage a = oracle::natural_scene(n, n, 1);
  const GrayImage b = oracle::natural_scene(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
  state.SetItemsProcessed(state.iterations() * std::int64_t{n} * n);
}
BENCHMARK(BM_Ssim)->Arg(256)->Arg(512);

}  // namespace

BENCHMARK_MAIN();

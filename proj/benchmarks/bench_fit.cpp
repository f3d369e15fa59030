#include <benchmark/benchmark.h>

#include "sqscene/optimizer.hpp"
#include "sqscene/scenegen.hpp"

namespace {

using namespace sqs;

void BM_FitStep(benchmark::State& state) {
  const Preset preset = preset_scene("box-grid", 0);
  const OccupancyGrid scene =
      generate_scene(preset.shapes, preset.spec, preset.class_count);
  FitConfig config;
  config.primitive_count = static_cast<int>(state.range(0));
  config.iterations = 1 << 20;
  config.batch_points = 2048;
  Fitter fitter(scene, config);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fitter.step());
  }
}
BENCHMARK(BM_FitStep)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

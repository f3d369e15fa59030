#include <benchmark/benchmark.h>

#include <random>

#include "sqscene/rasterizer.hpp"

namespace {

using namespace sqs;

std::vector<Primitive> scene_primitives(int n) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> up(-40.0, 40.0);
  std::uniform_real_distribution<double> uz(-4.0, 2.0);
  std::uniform_real_distribution<double> us(0.5, 3.0);
  std::vector<Primitive> prims(n);
  for (Primitive& p : prims) {
    p.position = Vec3(up(rng), up(rng), uz(rng));
    p.scale = Vec3(us(rng), us(rng), us(rng));
    p.opacity = 0.8;
    p.eps1 = 0.5;
    p.eps2 = 0.5;
    p.semantics = Eigen::VectorXd::Constant(16, 1.0 / 16.0);
  }
  return prims;
}

void BM_RasterizeFullGrid(benchmark::State& state) {
  const auto prims = scene_primitives(static_cast<int>(state.range(0)));
  const GridSpec spec = GridSpec::full_scale_default();
  RasterOptions opts;
  opts.cutoff_f = 12.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        rasterize(prims, PrimitiveKind::Superquadric, spec, opts));
  }
}
BENCHMARK(BM_RasterizeFullGrid)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

}  // namespace

#include <benchmark/benchmark.h>

#include <random>

#include "sqscene/field.hpp"

namespace {

using namespace sqs;

std::vector<Primitive> make_primitives(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> up(-10.0, 10.0);
  std::uniform_real_distribution<double> us(0.5, 2.0);
  std::uniform_real_distribution<double> ue(0.15, 1.9);
  std::normal_distribution<double> n01;
  std::vector<Primitive> prims(n);
  for (Primitive& p : prims) {
    p.position = Vec3(up(rng), up(rng), up(rng));
    p.scale = Vec3(us(rng), us(rng), us(rng));
    p.rotation = {n01(rng), n01(rng), n01(rng), n01(rng)};
    p.opacity = 0.7;
    p.eps1 = ue(rng);
    p.eps2 = ue(rng);
    p.semantics = Eigen::VectorXd::Constant(16, 1.0 / 16.0);
  }
  return prims;
}

void BM_MixtureOccupancy(benchmark::State& state) {
  const auto prims = make_primitives(static_cast<int>(state.range(0)), 1);
  const Vec3 x(0.5, -0.5, 0.2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mixture_occupancy(x, prims, PrimitiveKind::Superquadric));
  }
}
BENCHMARK(BM_MixtureOccupancy)->Arg(64)->Arg(256)->Arg(1024);

void BM_FieldGradients(benchmark::State& state) {
  const auto prims = make_primitives(static_cast<int>(state.range(0)), 2);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> up(-10.0, 10.0);
  std::vector<Vec3> points;
  std::vector<PointTarget> targets;
  for (int i = 0; i < 256; ++i) {
    points.emplace_back(up(rng), up(rng), up(rng));
    PointTarget t;
    t.d_p_occ = 1.0;
    t.d_p_sem = Eigen::VectorXd::Constant(16, 0.1);
    targets.push_back(t);
  }
  FieldOptions opts;
  opts.support_cutoff = 12.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        field_gradients(points, targets, prims, PrimitiveKind::Superquadric, opts));
  }
}
BENCHMARK(BM_FieldGradients)->Arg(64)->Arg(256);

}  // namespace

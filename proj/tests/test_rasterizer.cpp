#include <doctest.h>

#include <cmath>
#include <random>

#include "sqscene/field.hpp"
#include "sqscene/rasterizer.hpp"

using namespace sqs;

namespace {

std::vector<Primitive> random_scene(std::mt19937_64& rng, int n, double extent,
                                    int classes = 4) {
  std::uniform_real_distribution<double> up(-extent, extent);
  std::uniform_real_distribution<double> us(0.3, 1.5);
  std::uniform_real_distribution<double> ue(0.15, 1.9);
  std::uniform_real_distribution<double> ua(0.3, 1.0);
  std::normal_distribution<double> n01;
  std::vector<Primitive> prims(n);
  for (Primitive& p : prims) {
    p.position = Vec3(up(rng), up(rng), up(rng));
    p.scale = Vec3(us(rng), us(rng), us(rng));
    p.rotation = {n01(rng), n01(rng), n01(rng), n01(rng)};
    if (p.rotation.norm() < 0.1) p.rotation = UnitQuaternion::identity();
    p.opacity = ua(rng);
    p.eps1 = ue(rng);
    p.eps2 = ue(rng);
    Eigen::VectorXd logits(classes);
    for (int k = 0; k < classes; ++k) logits[k] = n01(rng);
    const Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
    p.semantics = e / e.sum();
  }
  return prims;
}

GridSpec cube_spec(int n, double half) {
  GridSpec spec;
  spec.dims = {n, n, n};
  spec.origin = Vec3::Constant(-half);
  spec.voxel_size = Vec3::Constant(2 * half / n);
  return spec;
}

}  // namespace

TEST_CASE("voxel_centers") {
  GridSpec one;
  one.dims = {1, 1, 1};
  one.origin = Vec3::Zero();
  one.voxel_size = Vec3::Ones();
  auto range = voxel_centers(one);
  auto it = range.begin();
  CHECK((*it).isApprox(Vec3(0.5, 0.5, 0.5)));

  const GridSpec full = GridSpec::full_scale_default();
  CHECK((*voxel_centers(full).begin()).isApprox(Vec3(-49.75, -49.75, -4.75), 1e-12));
  std::size_t count = 0;
  for ([[maybe_unused]] const Vec3 c : voxel_centers(cube_spec(8, 2.0))) ++count;
  CHECK(count == 8u * 8 * 8);
  CHECK(full.voxel_count() == 200u * 200 * 16);
}

TEST_CASE("rasterize exhaustive path bitwise equals field brute force") {
  std::mt19937_64 rng(31);
  const GridSpec spec = cube_spec(32, 4.0);
  for (const PrimitiveKind kind :
       {PrimitiveKind::Superquadric, PrimitiveKind::Gaussian}) {
    const auto prims = random_scene(rng, 20, 3.5);
    RasterOptions opts;
    opts.cutoff_f = std::numeric_limits<double>::infinity();
    opts.threads = 3;
    const ProbabilityGrid grid = rasterize(prims, kind, spec, opts);
    std::size_t v = 0;
    for (const Vec3 c : voxel_centers(spec)) {
      const double occ = mixture_occupancy(c, prims, kind);
      const Eigen::VectorXd sem = mixture_semantics(c, prims, kind);
      CHECK(grid.p_occ[v] == occ);  // bitwise
      for (int k = 0; k < grid.class_count; ++k) {
        CHECK(grid.sem_row(v)[k] == sem[k]);
      }
      ++v;
    }
  }
}

TEST_CASE("culling error bound") {
  std::mt19937_64 rng(37);
  const GridSpec spec = cube_spec(32, 4.0);
  const auto prims = random_scene(rng, 50, 3.5);
  RasterOptions exhaustive;
  exhaustive.cutoff_f = std::numeric_limits<double>::infinity();
  const ProbabilityGrid full = rasterize(prims, PrimitiveKind::Superquadric, spec, exhaustive);

  for (const double cutoff : {6.0, 12.0, 20.0}) {
    RasterOptions culled;
    culled.cutoff_f = cutoff;
    const ProbabilityGrid part = rasterize(prims, PrimitiveKind::Superquadric, spec, culled);
    double max_dev = 0.0;
    for (std::size_t v = 0; v < full.p_occ.size(); ++v) {
      max_dev = std::max(max_dev, std::abs(full.p_occ[v] - part.p_occ[v]));
    }
    CHECK(max_dev <= std::exp(-cutoff) * prims.size());
  }
}

TEST_CASE("single primitive at a voxel center") {
  const GridSpec spec = cube_spec(8, 2.0);
  Primitive p;
  p.position = spec.voxel_center(4, 4, 4);
  p.scale = Vec3(1, 1, 1);
  p.opacity = 1.0;
  p.semantics = Eigen::VectorXd::Constant(2, 0.5);
  const ProbabilityGrid grid = rasterize({&p, 1}, PrimitiveKind::Superquadric, spec);
  CHECK(grid.p_occ[spec.linear_index(4, 4, 4)] == doctest::Approx(1.0).epsilon(1e-12));

  // far corners decay to (numerically) nothing
  RasterOptions wide;
  wide.cutoff_f = std::numeric_limits<double>::infinity();
  const ProbabilityGrid grid2 = rasterize({&p, 1}, PrimitiveKind::Superquadric, spec, wide);
  CHECK(grid2.p_occ[spec.linear_index(0, 0, 0)] < 1e-5);
}

TEST_CASE("rasterize rejects empty primitive lists") {
  CHECK_THROWS_AS(rasterize({}, PrimitiveKind::Superquadric, cube_spec(4, 1.0)),
                  std::invalid_argument);
}

TEST_CASE("thread count does not change the result") {
  std::mt19937_64 rng(41);
  const GridSpec spec = cube_spec(16, 4.0);
  const auto prims = random_scene(rng, 30, 3.5);
  RasterOptions opts1, opts4;
  opts1.threads = 1;
  opts4.threads = 4;
  const ProbabilityGrid a = rasterize(prims, PrimitiveKind::Superquadric, spec, opts1);
  const ProbabilityGrid b = rasterize(prims, PrimitiveKind::Superquadric, spec, opts4);
  CHECK(a.p_occ == b.p_occ);
  CHECK(a.p_sem == b.p_sem);
}

TEST_CASE("discretize") {
  ProbabilityGrid grid;
  grid.spec = cube_spec(1, 0.5);
  grid.class_count = 2;
  grid.p_occ = {0.9};
  grid.p_sem = {0.7, 0.3};
  CHECK(discretize(grid, 0.5).labels[0] == 1);

  grid.p_occ = {0.4};
  CHECK(discretize(grid, 0.5).labels[0] == 0);

  grid.p_occ = {0.9};
  grid.p_sem = {0.5, 0.5};  // tie -> lowest class index
  CHECK(discretize(grid, 0.5).labels[0] == 1);

  CHECK_THROWS_AS(discretize(grid, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(discretize(grid, 1.0), std::invalid_argument);

  // idempotent under re-thresholding
  const OccupancyGrid once = discretize(grid, 0.5);
  ProbabilityGrid again = grid;
  const OccupancyGrid twice = discretize(again, 0.5);
  CHECK(once.labels == twice.labels);
}

TEST_CASE("visit count scales with support volume, not grid volume") {
  const GridSpec spec = cube_spec(32, 8.0);
  std::vector<Primitive> prims(10);
  for (std::size_t i = 0; i < prims.size(); ++i) {
    Primitive& p = prims[i];
    p.position = Vec3(-6.0 + 1.3 * static_cast<double>(i), 0, 0);
    p.scale = Vec3(0.3, 0.3, 0.3);
    p.opacity = 1.0;
    p.semantics = Eigen::VectorXd::Constant(2, 0.5);
  }
  RasterStats stats;
  RasterOptions opts;
  opts.cutoff_f = 4.0;
  rasterize(prims, PrimitiveKind::Superquadric, spec, opts, &stats);
  // tiny supports: far fewer visits than primitives x voxels
  CHECK(stats.primitive_voxel_visits <
        prims.size() * spec.voxel_count() / 20);
  CHECK(stats.primitive_voxel_visits > 0);
}

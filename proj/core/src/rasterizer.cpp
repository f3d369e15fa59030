#include "sqscene/rasterizer.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

namespace sqs {

namespace {

constexpr double kSemanticFloor = 1e-12;

struct BoxRange {
  int lo[3];
  int hi[3];  // inclusive
  bool empty = false;
};

// Voxel-index range whose centers fall inside the world box [m-hw, m+hw].
BoxRange voxel_range(const GridSpec& spec, const Vec3& center, const Vec3& half) {
  BoxRange r;
  for (int j = 0; j < 3; ++j) {
    if (!std::isfinite(half[j])) {
      r.lo[j] = 0;
      r.hi[j] = spec.dims[j] - 1;
      continue;
    }
    const double lo_f = (center[j] - half[j] - spec.origin[j]) / spec.voxel_size[j] - 0.5;
    const double hi_f = (center[j] + half[j] - spec.origin[j]) / spec.voxel_size[j] - 0.5;
    r.lo[j] = std::max(0, static_cast<int>(std::ceil(lo_f - 1e-12)));
    r.hi[j] = std::min(spec.dims[j] - 1, static_cast<int>(std::floor(hi_f + 1e-12)));
    if (r.lo[j] > r.hi[j]) r.empty = true;
  }
  return r;
}

}  // namespace

int resolve_threads(int requested) {
  const char* env = std::getenv("SQSCENE_SINGLE_THREAD");
  if (env && env[0] == '1') return 1;
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

ProbabilityGrid rasterize(std::span<const Primitive> primitives, PrimitiveKind kind,
                          const GridSpec& spec, const RasterOptions& opts,
                          RasterStats* stats) {
  if (primitives.empty()) {
    throw std::invalid_argument("rasterize: empty primitive list");
  }
  spec.validate();
  const int cc = static_cast<int>(primitives.front().semantics.size());
  const std::size_t n = spec.voxel_count();

  ProbabilityGrid out;
  out.spec = spec;
  out.class_count = cc;
  out.p_occ.assign(n, 0.0);
  out.p_sem.assign(n * cc, 0.0);

  std::vector<double> log1m(n, 0.0);
  std::vector<double> den(n, 0.0);
  std::vector<double> num(n * cc, 0.0);

  struct PrimData {
    Eigen::Matrix3d rot;
    Vec3 world_half;
    BoxRange range;
  };
  std::vector<PrimData> pd(primitives.size());
  for (std::size_t i = 0; i < primitives.size(); ++i) {
    const Primitive& p = primitives[i];
    pd[i].rot = quat_to_rotmat(p.rotation);
    const Vec3 h = primitive_support_radii(p, kind, opts.cutoff_f, opts.field.implicit);
    for (int j = 0; j < 3; ++j) {
      pd[i].world_half[j] = h.x() * std::abs(pd[i].rot(0, j)) +
                            h.y() * std::abs(pd[i].rot(1, j)) +
                            h.z() * std::abs(pd[i].rot(2, j));
    }
    pd[i].range = voxel_range(spec, p.position, pd[i].world_half);
  }

  std::atomic<std::uint64_t> visits{0};

  // Threads own disjoint z-slabs; within a slab the primitive loop is outer,
  // so each voxel accumulates contributions in primitive-index order and the
  // result is independent of the thread count.
  const int threads = std::min(resolve_threads(opts.threads), spec.dims.z());
  auto work = [&](int z_begin, int z_end) {
    std::uint64_t local_visits = 0;
    for (std::size_t i = 0; i < primitives.size(); ++i) {
      const Primitive& p = primitives[i];
      const BoxRange& r = pd[i].range;
      if (r.empty) continue;
      const int z0 = std::max(r.lo[2], z_begin);
      const int z1 = std::min(r.hi[2], z_end - 1);
      for (int z = z0; z <= z1; ++z) {
        for (int y = r.lo[1]; y <= r.hi[1]; ++y) {
          for (int x = r.lo[0]; x <= r.hi[0]; ++x) {
            const std::size_t v = spec.linear_index(x, y, z);
            const Vec3 c = spec.voxel_center(x, y, z);
            const Vec3 xl = pd[i].rot * (c - p.position);
            double f;
            if (kind == PrimitiveKind::Gaussian) {
              const Vec3& s = p.scale;
              const double ux = xl.x() / s.x(), uy = xl.y() / s.y(), uz = xl.z() / s.z();
              f = 0.5 * (ux * ux + uy * uy + uz * uz);
            } else {
              f = canonical_implicit(xl, p.scale, p.eps1, p.eps2, opts.field.implicit);
            }
            const double e = std::exp(-f);
            const double alpha =
                std::min(opts.field.opacity_scaled_geometry ? p.opacity * e : e,
                         1.0 - 1e-12);
            log1m[v] += std::log1p(-alpha);
            const double w = e * p.opacity;
            den[v] += w;
            double* nrow = num.data() + v * cc;
            for (int k = 0; k < cc; ++k) nrow[k] += w * p.semantics[k];
            ++local_visits;
          }
        }
      }
    }
    visits += local_visits;
  };

  if (threads <= 1) {
    work(0, spec.dims.z());
  } else {
    std::vector<std::thread> pool;
    const int per = (spec.dims.z() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int z0 = t * per;
      const int z1 = std::min(spec.dims.z(), z0 + per);
      if (z0 >= z1) break;
      pool.emplace_back(work, z0, z1);
    }
    for (auto& th : pool) th.join();
  }

  for (std::size_t v = 0; v < n; ++v) {
    out.p_occ[v] = -std::expm1(log1m[v]);
    double* row = out.sem_row(v);
    if (den[v] < kSemanticFloor) {
      const double u = 1.0 / static_cast<double>(cc);
      for (int k = 0; k < cc; ++k) row[k] = u;
    } else {
      const double* nrow = num.data() + v * cc;
      for (int k = 0; k < cc; ++k) row[k] = nrow[k] / den[v];
    }
  }

  if (stats) stats->primitive_voxel_visits = visits.load();
  return out;
}

OccupancyGrid discretize(const ProbabilityGrid& grid, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw std::invalid_argument("discretize: tau must be in (0,1)");
  }
  OccupancyGrid out = OccupancyGrid::empty(grid.spec, grid.class_count);
  const std::size_t n = grid.spec.voxel_count();
  for (std::size_t v = 0; v < n; ++v) {
    if (grid.p_occ[v] < tau) continue;
    const double* row = grid.sem_row(v);
    int best = 0;
    for (int k = 1; k < grid.class_count; ++k) {
      if (row[k] > row[best]) best = k;  // ties keep the lowest index
    }
    out.labels[v] = static_cast<std::uint8_t>(best + 1);
  }
  return out;
}

}  // namespace sqs

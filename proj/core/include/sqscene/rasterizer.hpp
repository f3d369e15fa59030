#pragma once

#include <cstdint>
#include <span>

#include "sqscene/field.hpp"
#include "sqscene/grid.hpp"

namespace sqs {

struct RasterStats {
  /// Number of (primitive, voxel) accumulation visits. Proportional to the
  /// sum of support-box volumes, not primitive_count * voxel_count.
  std::uint64_t primitive_voxel_visits = 0;
};

struct RasterOptions {
  /// Implicit-value cutoff for the per-primitive support box.
  /// exp(-12) ~ 6e-6; infinity disables culling (exhaustive evaluation).
  double cutoff_f = 12.0;
  /// 0 = hardware concurrency; overridden to 1 by SQSCENE_SINGLE_THREAD=1.
  int threads = 0;
  FieldOptions field;
};

/// Evaluates the occupancy/semantic mixture at every voxel center.
/// Per-voxel accumulation is in primitive-index order regardless of the
/// thread count, so results are deterministic and, with an infinite cutoff,
/// bitwise equal to per-voxel evaluation through the field module.
/// Throws std::invalid_argument on an empty primitive list.
ProbabilityGrid rasterize(std::span<const Primitive> primitives, PrimitiveKind kind,
                          const GridSpec& spec, const RasterOptions& opts = {},
                          RasterStats* stats = nullptr);

/// label = 0 where p_occ < tau, else 1 + argmax(p_sem); ties break toward
/// the lowest class index. Throws std::invalid_argument unless tau in (0,1).
OccupancyGrid discretize(const ProbabilityGrid& grid, double tau);

/// Resolved thread count honoring the SQSCENE_SINGLE_THREAD environment flag.
int resolve_threads(int requested);

}  // namespace sqs

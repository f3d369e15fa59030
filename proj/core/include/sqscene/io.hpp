#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqscene/grid.hpp"
#include "sqscene/optimizer.hpp"

namespace sqs {

/// Malformed file contents (bad magic, version, truncation, missing or
/// out-of-range fields). The message names the offending field or offset.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary grid format: "OCCG" magic, u32 version, u32 dims X/Y/Z, f32x3
/// origin, f32x3 voxel_size, u32 class_count, then X*Y*Z u8 labels in
/// x-fastest order. Little-endian throughout.
void save_grid(const std::string& path, const OccupancyGrid& grid);
OccupancyGrid load_grid(const std::string& path);

struct PrimitiveSetFile {
  PrimitiveKind kind = PrimitiveKind::Superquadric;
  int class_count = 0;
  EpsBounds eps_bounds;
  std::vector<Primitive> primitives;
  /// Optional fit configuration snapshot carried alongside the set.
  std::optional<FitConfig> fit_config;
};

/// Human-readable JSON with explicit field names; round-trips values to
/// better than 1e-9 relative.
void save_primitives(const std::string& path, const PrimitiveSetFile& set);
PrimitiveSetFile load_primitives(const std::string& path);

}  // namespace sqs

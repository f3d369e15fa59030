#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sqscene/grid.hpp"

namespace sqs {

struct ShapeSpec {
  enum class Kind { Box, Cylinder, Ellipsoid, Superquadric, GroundPlane };

  Kind kind = Kind::Box;
  Vec3 position = Vec3::Zero();
  UnitQuaternion rotation;
  /// Full extents for Box; (radius, radius, height) for Cylinder; full
  /// extents for Ellipsoid; semi-axes for Superquadric; (ignored, ignored,
  /// thickness) for GroundPlane.
  Vec3 size = Vec3::Ones();
  double eps1 = 1.0;  // Superquadric kind only
  double eps2 = 1.0;
  int class_id = 1;   // 1..C
};

/// Exact containment test in the shape's local frame.
bool analytic_inside(const ShapeSpec& shape, const Vec3& point);

/// Labels each voxel by the last shape (list order) containing its center.
/// Throws std::invalid_argument on an empty shape list.
OccupancyGrid generate_scene(std::span<const ShapeSpec> shapes, const GridSpec& spec,
                             int class_count = 16);

struct Preset {
  std::vector<ShapeSpec> shapes;
  GridSpec spec;
  int class_count = 16;
};

/// Named scene corpora: "single-box", "box-grid", "street", "random-<k>".
/// Deterministic per seed. Throws std::invalid_argument on unknown names.
Preset preset_scene(const std::string& name, std::uint64_t seed);

}  // namespace sqs

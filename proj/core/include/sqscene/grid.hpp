#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "sqscene/primitives.hpp"

namespace sqs {

/// Dense voxel volume geometry. Voxel order is x-fastest:
/// index = x + X*(y + Y*z).
struct GridSpec {
  Eigen::Vector3i dims{1, 1, 1};
  Vec3 origin = Vec3::Zero();     // minimum corner, meters
  Vec3 voxel_size = Vec3::Ones(); // meters

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims.x()) * dims.y() * dims.z();
  }
  std::size_t linear_index(int ix, int iy, int iz) const {
    return static_cast<std::size_t>(ix) +
           static_cast<std::size_t>(dims.x()) *
               (static_cast<std::size_t>(iy) +
                static_cast<std::size_t>(dims.y()) * iz);
  }
  Vec3 voxel_center(int ix, int iy, int iz) const {
    return origin + Vec3((ix + 0.5) * voxel_size.x(), (iy + 0.5) * voxel_size.y(),
                         (iz + 0.5) * voxel_size.z());
  }
  Vec3 voxel_center(std::size_t linear) const {
    const int x = static_cast<int>(linear % dims.x());
    const int y = static_cast<int>((linear / dims.x()) % dims.y());
    const int z = static_cast<int>(linear / (static_cast<std::size_t>(dims.x()) * dims.y()));
    return voxel_center(x, y, z);
  }
  Vec3 extent() const { return voxel_size.cwiseProduct(dims.cast<double>()); }
  Vec3 max_corner() const { return origin + extent(); }

  bool operator==(const GridSpec& o) const {
    return dims == o.dims && origin == o.origin && voxel_size == o.voxel_size;
  }

  /// Throws std::invalid_argument on non-positive dims or voxel size.
  void validate() const;

  /// x,y in [-50, 50] m, z in [-5, 3] m at 200x200x16 (0.5 m voxels).
  static GridSpec full_scale_default();
};

/// Iterates voxel centers in storage (x-fastest) order.
class VoxelCenterRange {
 public:
  explicit VoxelCenterRange(const GridSpec& spec) : spec_(spec) {}

  class iterator {
   public:
    iterator(const GridSpec* spec, std::size_t i) : spec_(spec), i_(i) {}
    Vec3 operator*() const { return spec_->voxel_center(i_); }
    iterator& operator++() { ++i_; return *this; }
    bool operator!=(const iterator& o) const { return i_ != o.i_; }
   private:
    const GridSpec* spec_;
    std::size_t i_;
  };

  iterator begin() const { return {&spec_, 0}; }
  iterator end() const { return {&spec_, spec_.voxel_count()}; }

 private:
  GridSpec spec_;
};

inline VoxelCenterRange voxel_centers(const GridSpec& spec) {
  return VoxelCenterRange(spec);
}

/// Per-voxel class labels: 0 = empty, 1..class_count = semantic classes.
struct OccupancyGrid {
  GridSpec spec;
  int class_count = 16;
  std::vector<std::uint8_t> labels;

  static OccupancyGrid empty(const GridSpec& spec, int class_count) {
    OccupancyGrid g;
    g.spec = spec;
    g.class_count = class_count;
    g.labels.assign(spec.voxel_count(), 0);
    return g;
  }
};

/// Pre-discretization occupancy/semantic probabilities per voxel.
/// p_sem is voxel-major: row v occupies [v*class_count, (v+1)*class_count).
struct ProbabilityGrid {
  GridSpec spec;
  int class_count = 16;
  std::vector<double> p_occ;
  std::vector<double> p_sem;

  const double* sem_row(std::size_t v) const { return p_sem.data() + v * class_count; }
  double* sem_row(std::size_t v) { return p_sem.data() + v * class_count; }
};

}  // namespace sqs

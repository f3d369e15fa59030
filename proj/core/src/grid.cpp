#include "sqscene/grid.hpp"

#include <stdexcept>

namespace sqs {

void GridSpec::validate() const {
  if (dims.x() < 1 || dims.y() < 1 || dims.z() < 1) {
    throw std::invalid_argument("grid: dims must be >= 1");
  }
  if (!(voxel_size.x() > 0.0 && voxel_size.y() > 0.0 && voxel_size.z() > 0.0)) {
    throw std::invalid_argument("grid: voxel_size must be positive");
  }
}

GridSpec GridSpec::full_scale_default() {
  GridSpec spec;
  spec.dims = {200, 200, 16};
  spec.origin = {-50.0, -50.0, -5.0};
  spec.voxel_size = {0.5, 0.5, 0.5};
  return spec;
}

}  // namespace sqs

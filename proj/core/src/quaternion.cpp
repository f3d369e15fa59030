#include "sqscene/quaternion.hpp"

#include <cmath>
#include <stdexcept>

namespace sqs {

double UnitQuaternion::norm() const {
  return std::sqrt(w * w + x * x + y * y + z * z);
}

UnitQuaternion UnitQuaternion::normalized() const {
  const double n = norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("quaternion: cannot normalize zero or non-finite quaternion");
  }
  return {w / n, x / n, y / n, z / n};
}

Eigen::Matrix3d quat_to_rotmat(const UnitQuaternion& q) {
  const UnitQuaternion u = q.normalized();
  const double w = u.w, x = u.x, y = u.y, z = u.z;
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

std::array<Eigen::Matrix3d, 4> rotmat_unit_jacobian(const UnitQuaternion& u) {
  const double w = u.w, x = u.x, y = u.y, z = u.z;
  std::array<Eigen::Matrix3d, 4> j;
  j[0] << 0, -2 * z, 2 * y,
          2 * z, 0, -2 * x,
          -2 * y, 2 * x, 0;
  j[1] << 0, 2 * y, 2 * z,
          2 * y, -4 * x, -2 * w,
          2 * z, 2 * w, -4 * x;
  j[2] << -4 * y, 2 * x, 2 * w,
          2 * x, 0, 2 * z,
          -2 * w, 2 * z, -4 * y;
  j[3] << -4 * z, -2 * w, 2 * x,
          2 * w, -4 * z, 2 * y,
          2 * x, 2 * y, 0;
  return j;
}

Eigen::Vector4d normalize_pullback(const UnitQuaternion& raw,
                                   const Eigen::Vector4d& d_unit) {
  const double n = raw.norm();
  if (!(n > 0.0)) {
    throw std::invalid_argument("quaternion: pullback through zero quaternion");
  }
  const Eigen::Vector4d u = raw.coeffs() / n;
  return (d_unit - u * u.dot(d_unit)) / n;
}

}  // namespace sqs

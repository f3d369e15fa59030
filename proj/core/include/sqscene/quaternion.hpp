#pragma once

#include <Eigen/Dense>
#include <array>

namespace sqs {

/// Rotation stored as (w, x, y, z). The stored components may be
/// unnormalized; every evaluation normalizes first.
struct UnitQuaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const;
  UnitQuaternion normalized() const;  // throws std::invalid_argument if all-zero

  Eigen::Vector4d coeffs() const { return {w, x, y, z}; }
  static UnitQuaternion identity() { return {1.0, 0.0, 0.0, 0.0}; }
};

/// Proper rotation matrix from a (possibly unnormalized) quaternion.
Eigen::Matrix3d quat_to_rotmat(const UnitQuaternion& q);

/// Partial derivatives of the rotation matrix w.r.t. the four components of
/// an already-normalized quaternion, in (w, x, y, z) order.
std::array<Eigen::Matrix3d, 4> rotmat_unit_jacobian(const UnitQuaternion& unit);

/// Pulls a gradient w.r.t. the normalized components back to the raw
/// (unnormalized) quaternion through the normalization map.
Eigen::Vector4d normalize_pullback(const UnitQuaternion& raw,
                                   const Eigen::Vector4d& d_unit);

}  // namespace sqs

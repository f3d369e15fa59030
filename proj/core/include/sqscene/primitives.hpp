#pragma once

#include <Eigen/Dense>

#include "sqscene/quaternion.hpp"

namespace sqs {

using Vec3 = Eigen::Vector3d;

struct EpsBounds {
  double lo = 0.1;
  double hi = 2.0;
};

/// Clips a shape exponent into [bounds.lo, bounds.hi].
/// Throws std::invalid_argument on lo <= 0 or hi <= lo.
double clamp_exponent(double eps, const EpsBounds& bounds);

struct ImplicitOptions {
  /// When set, evaluates the z-term with exponent 2/eps2 instead of the
  /// standard 2/eps1.
  bool literal_z_exponent = false;
  double f_clamp = 80.0;
};

/// Canonical superquadric implicit value
///   f(x) = (|x/s_x|^{2/e2} + |y/s_y|^{2/e2})^{e2/e1} + |z/s_z|^{2/e1},
/// clamped to [0, f_clamp]. Zero at the origin, one on the surface.
/// Throws std::invalid_argument on non-positive scale.
double canonical_implicit(const Vec3& x_local, const Vec3& scale,
                          double eps1, double eps2,
                          const ImplicitOptions& opts = {});

struct ImplicitGrad {
  double f = 0.0;
  Vec3 d_xlocal = Vec3::Zero();
  Vec3 d_scale = Vec3::Zero();
  double d_eps1 = 0.0;
  double d_eps2 = 0.0;
};

/// Implicit value plus partial derivatives. Gradients are zero where the
/// clamp saturates; the symmetric subgradient 0 is used on coordinate planes.
ImplicitGrad canonical_implicit_grad(const Vec3& x_local, const Vec3& scale,
                                     double eps1, double eps2,
                                     const ImplicitOptions& opts = {});

/// Per-local-axis half-extents H such that f(x) <= f_max implies
/// |x_i| <= H_i, inflated by a 5% safety factor.
Vec3 support_radii(const Vec3& scale, double eps1, double eps2, double f_max,
                   const ImplicitOptions& opts = {});

enum class PrimitiveKind { Superquadric, Gaussian };

/// One scene primitive. Gaussian primitives ignore eps1/eps2.
struct Primitive {
  Vec3 position = Vec3::Zero();        // meters
  Vec3 scale = Vec3::Ones();           // meters, > 0
  UnitQuaternion rotation;             // may be unnormalized
  double opacity = 1.0;                // in [0, 1]
  double eps1 = 1.0;
  double eps2 = 1.0;
  Eigen::VectorXd semantics;           // probability vector over C classes
};

using Superquadric = Primitive;
using GaussianPrimitive = Primitive;

/// Checks positivity/simplex/bounds invariants.
/// Throws std::invalid_argument naming the violated field.
void validate_primitive(const Primitive& p, PrimitiveKind kind,
                        const EpsBounds& bounds);

/// Support half-extents for either kind at occupancy cutoff exp(-f_max).
Vec3 primitive_support_radii(const Primitive& p, PrimitiveKind kind,
                             double f_max, const ImplicitOptions& opts = {});

}  // namespace sqs

#pragma once

#include <Eigen/Dense>
#include <limits>
#include <span>
#include <vector>

#include "sqscene/primitives.hpp"

namespace sqs {

struct FieldOptions {
  /// Substitute alpha_i = a_i * exp(-f_i) in the occupancy product
  /// (GaussianFormer-2 convention). Off by default: geometry uses the raw
  /// per-primitive probability, opacity enters only the semantic weights.
  bool opacity_scaled_geometry = false;
  ImplicitOptions implicit;
  /// Primitives whose support box (at this implicit-value cutoff) does not
  /// contain the query point are skipped. Infinity disables culling.
  double support_cutoff = std::numeric_limits<double>::infinity();
};

struct FieldSample {
  double p_occ = 0.0;
  Eigen::VectorXd p_sem;
};

/// Eq-style local transform: R(x - m).
Vec3 local_coords(const Vec3& x, const Vec3& position, const UnitQuaternion& rotation);

/// exp(-f) of the superquadric implicit at x.
double quadric_occupancy(const Vec3& x, const Primitive& q,
                         const ImplicitOptions& opts = {});

/// exp(-1/2 (x-m)^T Sigma^{-1} (x-m)) with Sigma = R S S^T R^T, evaluated
/// in local coordinates.
double gaussian_occupancy(const Vec3& x, const Primitive& g);

double primitive_occupancy(const Vec3& x, const Primitive& p, PrimitiveKind kind,
                           const ImplicitOptions& opts = {});

/// 1 - prod_i (1 - alpha_i), accumulated in log space.
/// Throws std::invalid_argument on an empty primitive list.
double mixture_occupancy(const Vec3& x, std::span<const Primitive> primitives,
                         PrimitiveKind kind, const FieldOptions& opts = {});

/// sum_i alpha_i a_i c_i / sum_j alpha_j a_j; uniform when the denominator
/// vanishes. Throws std::invalid_argument on an empty list.
Eigen::VectorXd mixture_semantics(const Vec3& x, std::span<const Primitive> primitives,
                                  PrimitiveKind kind, const FieldOptions& opts = {});

FieldSample sample_field(const Vec3& x, std::span<const Primitive> primitives,
                         PrimitiveKind kind, const FieldOptions& opts = {});

/// Per-point gradient of a scalar objective w.r.t. the field outputs.
struct PointTarget {
  double d_p_occ = 0.0;
  Eigen::VectorXd d_p_sem;
};

/// Per-primitive partial derivatives of the objective. Quaternion entries are
/// w.r.t. the stored (unnormalized) components, semantic entries are in logit
/// space.
struct ParamGradient {
  std::vector<Vec3> d_position;
  std::vector<Vec3> d_scale;
  std::vector<Eigen::Vector4d> d_quaternion;
  std::vector<double> d_opacity;
  std::vector<double> d_eps1;
  std::vector<double> d_eps2;
  std::vector<Eigen::VectorXd> d_sem_logits;

  void resize(std::size_t n, int class_count);
  bool all_finite() const;
  std::vector<std::size_t> nonfinite_primitives() const;
};

/// Batched forward evaluation with per-point primitive contact lists, reused
/// by the backward pass. Contact order is primitive-index order, so results
/// with an infinite cutoff match the single-point mixture functions bitwise.
class FieldEvaluator {
 public:
  FieldEvaluator(std::span<const Vec3> points, std::span<const Primitive> primitives,
                 PrimitiveKind kind, const FieldOptions& opts = {});

  const std::vector<double>& p_occ() const { return p_occ_; }
  const std::vector<Eigen::VectorXd>& p_sem() const { return p_sem_; }

  ParamGradient backward(std::span<const PointTarget> targets) const;

 private:
  struct Contact {
    std::uint32_t prim;
    double e;   // exp(-f)
    Vec3 xl;    // local coordinates
  };
  struct PrimCache {
    Eigen::Matrix3d rot;
    std::array<Eigen::Matrix3d, 4> rot_jac;
    UnitQuaternion raw;
  };

  std::vector<Vec3> points_;
  std::vector<const Primitive*> prims_;
  PrimitiveKind kind_;
  FieldOptions opts_;
  int class_count_ = 0;

  std::vector<std::vector<Contact>> contacts_;
  std::vector<double> log1m_sum_;
  std::vector<double> sem_den_;
  std::vector<double> p_occ_;
  std::vector<Eigen::VectorXd> p_sem_;
  std::vector<PrimCache> cache_;
};

/// Analytic chain-rule gradients of the objective described by `targets`
/// through the mixture, per-primitive occupancy, implicit function, and local
/// transform. Throws std::invalid_argument on non-finite targets.
ParamGradient field_gradients(std::span<const Vec3> points,
                              std::span<const PointTarget> targets,
                              std::span<const Primitive> primitives,
                              PrimitiveKind kind, const FieldOptions& opts = {});

}  // namespace sqs

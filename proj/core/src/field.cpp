#include "sqscene/field.hpp"

#include <cmath>
#include <stdexcept>

namespace sqs {

namespace {

constexpr double kAlphaCeil = 1.0 - 1e-12;
constexpr double kSemanticFloor = 1e-12;

double gaussian_implicit(const Vec3& xl, const Vec3& s) {
  const double ux = xl.x() / s.x();
  const double uy = xl.y() / s.y();
  const double uz = xl.z() / s.z();
  return 0.5 * (ux * ux + uy * uy + uz * uz);
}

double primitive_alpha(double e, double opacity, bool opacity_scaled) {
  const double a = opacity_scaled ? opacity * e : e;
  return std::min(a, kAlphaCeil);
}

}  // namespace

Vec3 local_coords(const Vec3& x, const Vec3& position, const UnitQuaternion& rotation) {
  return quat_to_rotmat(rotation) * (x - position);
}

double quadric_occupancy(const Vec3& x, const Primitive& q, const ImplicitOptions& opts) {
  const Vec3 xl = local_coords(x, q.position, q.rotation);
  return std::exp(-canonical_implicit(xl, q.scale, q.eps1, q.eps2, opts));
}

double gaussian_occupancy(const Vec3& x, const Primitive& g) {
  const Vec3 xl = local_coords(x, g.position, g.rotation);
  return std::exp(-gaussian_implicit(xl, g.scale));
}

double primitive_occupancy(const Vec3& x, const Primitive& p, PrimitiveKind kind,
                           const ImplicitOptions& opts) {
  return kind == PrimitiveKind::Gaussian ? gaussian_occupancy(x, p)
                                         : quadric_occupancy(x, p, opts);
}

double mixture_occupancy(const Vec3& x, std::span<const Primitive> primitives,
                         PrimitiveKind kind, const FieldOptions& opts) {
  if (primitives.empty()) {
    throw std::invalid_argument("mixture_occupancy: empty primitive list");
  }
  double log1m = 0.0;
  for (const Primitive& p : primitives) {
    const double e = primitive_occupancy(x, p, kind, opts.implicit);
    log1m += std::log1p(-primitive_alpha(e, p.opacity, opts.opacity_scaled_geometry));
  }
  return -std::expm1(log1m);
}

Eigen::VectorXd mixture_semantics(const Vec3& x, std::span<const Primitive> primitives,
                                  PrimitiveKind kind, const FieldOptions& opts) {
  if (primitives.empty()) {
    throw std::invalid_argument("mixture_semantics: empty primitive list");
  }
  const Eigen::Index c = primitives.front().semantics.size();
  Eigen::VectorXd num = Eigen::VectorXd::Zero(c);
  double den = 0.0;
  for (const Primitive& p : primitives) {
    const double w = primitive_occupancy(x, p, kind, opts.implicit) * p.opacity;
    num += w * p.semantics;
    den += w;
  }
  if (den < kSemanticFloor) {
    return Eigen::VectorXd::Constant(c, 1.0 / static_cast<double>(c));
  }
  return num / den;
}

FieldSample sample_field(const Vec3& x, std::span<const Primitive> primitives,
                         PrimitiveKind kind, const FieldOptions& opts) {
  FieldSample s;
  s.p_occ = mixture_occupancy(x, primitives, kind, opts);
  s.p_sem = mixture_semantics(x, primitives, kind, opts);
  return s;
}

void ParamGradient::resize(std::size_t n, int class_count) {
  d_position.assign(n, Vec3::Zero());
  d_scale.assign(n, Vec3::Zero());
  d_quaternion.assign(n, Eigen::Vector4d::Zero());
  d_opacity.assign(n, 0.0);
  d_eps1.assign(n, 0.0);
  d_eps2.assign(n, 0.0);
  d_sem_logits.assign(n, Eigen::VectorXd::Zero(class_count));
}

bool ParamGradient::all_finite() const {
  return nonfinite_primitives().empty();
}

std::vector<std::size_t> ParamGradient::nonfinite_primitives() const {
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < d_position.size(); ++i) {
    const bool ok = d_position[i].allFinite() && d_scale[i].allFinite() &&
                    d_quaternion[i].allFinite() && std::isfinite(d_opacity[i]) &&
                    std::isfinite(d_eps1[i]) && std::isfinite(d_eps2[i]) &&
                    d_sem_logits[i].allFinite();
    if (!ok) bad.push_back(i);
  }
  return bad;
}

FieldEvaluator::FieldEvaluator(std::span<const Vec3> points,
                               std::span<const Primitive> primitives,
                               PrimitiveKind kind, const FieldOptions& opts)
    : points_(points.begin(), points.end()), kind_(kind), opts_(opts) {
  if (primitives.empty()) {
    throw std::invalid_argument("field: empty primitive list");
  }
  prims_.reserve(primitives.size());
  for (const Primitive& p : primitives) prims_.push_back(&p);
  class_count_ = static_cast<int>(primitives.front().semantics.size());

  const std::size_t np = points_.size();
  contacts_.assign(np, {});
  log1m_sum_.assign(np, 0.0);
  sem_den_.assign(np, 0.0);
  p_occ_.assign(np, 0.0);
  p_sem_.assign(np, Eigen::VectorXd::Zero(class_count_));
  std::vector<Eigen::VectorXd> num(np, Eigen::VectorXd::Zero(class_count_));

  cache_.resize(prims_.size());
  const bool cull = std::isfinite(opts_.support_cutoff);

  for (std::size_t pi = 0; pi < prims_.size(); ++pi) {
    const Primitive& p = *prims_[pi];
    const UnitQuaternion unit = p.rotation.normalized();
    cache_[pi].raw = p.rotation;
    cache_[pi].rot = quat_to_rotmat(p.rotation);
    cache_[pi].rot_jac = rotmat_unit_jacobian(unit);
    const Eigen::Matrix3d& rot = cache_[pi].rot;

    Vec3 world_half = Vec3::Zero();
    if (cull) {
      const Vec3 h = primitive_support_radii(p, kind_, opts_.support_cutoff,
                                             opts_.implicit);
      // |R(x-m)| <= H componentwise implies |x-m| inside this world box
      for (int j = 0; j < 3; ++j) {
        world_half[j] = h.x() * std::abs(rot(0, j)) + h.y() * std::abs(rot(1, j)) +
                        h.z() * std::abs(rot(2, j));
      }
    }

    for (std::size_t k = 0; k < np; ++k) {
      const Vec3 d = points_[k] - p.position;
      if (cull && (std::abs(d.x()) > world_half.x() ||
                   std::abs(d.y()) > world_half.y() ||
                   std::abs(d.z()) > world_half.z())) {
        continue;
      }
      const Vec3 xl = rot * d;
      const double f = kind_ == PrimitiveKind::Gaussian
                           ? gaussian_implicit(xl, p.scale)
                           : canonical_implicit(xl, p.scale, p.eps1, p.eps2,
                                                opts_.implicit);
      const double e = std::exp(-f);
      contacts_[k].push_back({static_cast<std::uint32_t>(pi), e, xl});
      log1m_sum_[k] +=
          std::log1p(-primitive_alpha(e, p.opacity, opts_.opacity_scaled_geometry));
      const double w = e * p.opacity;
      num[k] += w * p.semantics;
      sem_den_[k] += w;
    }
  }

  for (std::size_t k = 0; k < np; ++k) {
    p_occ_[k] = -std::expm1(log1m_sum_[k]);
    if (sem_den_[k] < kSemanticFloor) {
      p_sem_[k].setConstant(1.0 / static_cast<double>(class_count_));
    } else {
      p_sem_[k] = num[k] / sem_den_[k];
    }
  }
}

ParamGradient FieldEvaluator::backward(std::span<const PointTarget> targets) const {
  if (targets.size() != points_.size()) {
    throw std::invalid_argument("field_gradients: point/target count mismatch");
  }
  for (const PointTarget& t : targets) {
    if (!std::isfinite(t.d_p_occ) || (t.d_p_sem.size() > 0 && !t.d_p_sem.allFinite())) {
      throw std::invalid_argument("field_gradients: non-finite target gradients");
    }
  }

  ParamGradient g;
  g.resize(prims_.size(), class_count_);
  std::vector<Eigen::Vector4d> d_unit(prims_.size(), Eigen::Vector4d::Zero());
  std::vector<Eigen::VectorXd> d_sem(prims_.size(),
                                     Eigen::VectorXd::Zero(class_count_));
  const bool scaled = opts_.opacity_scaled_geometry;

  for (std::size_t k = 0; k < points_.size(); ++k) {
    const PointTarget& t = targets[k];
    const double docc = t.d_p_occ;
    const bool has_sem = t.d_p_sem.size() == class_count_ && sem_den_[k] >= kSemanticFloor;
    const double surv = std::exp(log1m_sum_[k]);  // prod (1 - alpha_i)

    for (const Contact& c : contacts_[k]) {
      const Primitive& p = *prims_[c.prim];
      const double a = p.opacity;
      const double alpha = primitive_alpha(c.e, a, scaled);
      // d p_occ / d alpha_i = prod_{j != i} (1 - alpha_j)
      const double docc_dalpha = surv / (1.0 - alpha);
      const bool clamped = (scaled ? a * c.e : c.e) > kAlphaCeil;

      double dL_de = 0.0;
      double dL_da = 0.0;
      if (!clamped) {
        dL_de += docc * docc_dalpha * (scaled ? a : 1.0);
        if (scaled) dL_da += docc * docc_dalpha * c.e;
      }
      if (has_sem) {
        const double w = c.e * a;
        double gw = 0.0;
        for (int j = 0; j < class_count_; ++j) {
          gw += t.d_p_sem[j] * (p.semantics[j] - p_sem_[k][j]);
        }
        gw /= sem_den_[k];
        dL_de += gw * a;
        dL_da += gw * c.e;
        d_sem[c.prim] += (w / sem_den_[k]) * t.d_p_sem;
      }
      g.d_opacity[c.prim] += dL_da;

      if (dL_de == 0.0) continue;
      const double dL_df = -c.e * dL_de;

      Vec3 df_dxl, df_ds;
      if (kind_ == PrimitiveKind::Gaussian) {
        const Vec3& s = p.scale;
        df_dxl = Vec3(c.xl.x() / (s.x() * s.x()), c.xl.y() / (s.y() * s.y()),
                      c.xl.z() / (s.z() * s.z()));
        df_ds = Vec3(-c.xl.x() * c.xl.x() / (s.x() * s.x() * s.x()),
                     -c.xl.y() * c.xl.y() / (s.y() * s.y() * s.y()),
                     -c.xl.z() * c.xl.z() / (s.z() * s.z() * s.z()));
      } else {
        const ImplicitGrad ig = canonical_implicit_grad(c.xl, p.scale, p.eps1,
                                                        p.eps2, opts_.implicit);
        df_dxl = ig.d_xlocal;
        df_ds = ig.d_scale;
        g.d_eps1[c.prim] += dL_df * ig.d_eps1;
        g.d_eps2[c.prim] += dL_df * ig.d_eps2;
      }

      const Vec3 dL_dxl = dL_df * df_dxl;
      g.d_scale[c.prim] += dL_df * df_ds;
      g.d_position[c.prim] -= cache_[c.prim].rot.transpose() * dL_dxl;

      const Vec3 d = points_[k] - p.position;
      const Eigen::Matrix3d dL_dR = dL_dxl * d.transpose();
      for (int q = 0; q < 4; ++q) {
        d_unit[c.prim][q] += dL_dR.cwiseProduct(cache_[c.prim].rot_jac[q]).sum();
      }
    }
  }

  for (std::size_t pi = 0; pi < prims_.size(); ++pi) {
    g.d_quaternion[pi] = normalize_pullback(cache_[pi].raw, d_unit[pi]);
    // softmax pullback: d logit_k = c_k (d c_k - sum_j c_j d c_j)
    const Eigen::VectorXd& c = prims_[pi]->semantics;
    const double dot = c.dot(d_sem[pi]);
    g.d_sem_logits[pi] = c.cwiseProduct(d_sem[pi] - Eigen::VectorXd::Constant(class_count_, dot));
  }
  return g;
}

ParamGradient field_gradients(std::span<const Vec3> points,
                              std::span<const PointTarget> targets,
                              std::span<const Primitive> primitives,
                              PrimitiveKind kind, const FieldOptions& opts) {
  FieldEvaluator eval(points, primitives, kind, opts);
  return eval.backward(targets);
}

}  // namespace sqs

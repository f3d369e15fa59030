#include "sqscene/primitives.hpp"

#include <cmath>
#include <stdexcept>

namespace sqs {

namespace {

// |u|^p with the convention 0^p = 0, computed as exp(p ln|u|).
double pow_abs(double u, double p) {
  u = std::abs(u);
  if (u == 0.0) return 0.0;
  return std::exp(p * std::log(u));
}

void check_scale(const Vec3& s) {
  if (!(s.x() > 0.0 && s.y() > 0.0 && s.z() > 0.0)) {
    throw std::invalid_argument("primitive: scale must be strictly positive");
  }
}

}  // namespace

double clamp_exponent(double eps, const EpsBounds& b) {
  if (!(b.lo > 0.0) || !(b.hi > b.lo)) {
    throw std::invalid_argument("eps bounds: require 0 < lo < hi");
  }
  return std::min(std::max(eps, b.lo), b.hi);
}

double canonical_implicit(const Vec3& xl, const Vec3& s, double eps1, double eps2,
                          const ImplicitOptions& opts) {
  check_scale(s);
  const double ux = std::abs(xl.x()) / s.x();
  const double uy = std::abs(xl.y()) / s.y();
  const double uz = std::abs(xl.z()) / s.z();
  const double g = pow_abs(ux, 2.0 / eps2) + pow_abs(uy, 2.0 / eps2);
  const double zp = opts.literal_z_exponent ? 2.0 / eps2 : 2.0 / eps1;
  double f = pow_abs(g, eps2 / eps1) + pow_abs(uz, zp);
  if (!(f > 0.0)) f = 0.0;  // also maps NaN from inf*0 corners to 0
  return std::min(f, opts.f_clamp);
}

ImplicitGrad canonical_implicit_grad(const Vec3& xl, const Vec3& s, double eps1,
                                     double eps2, const ImplicitOptions& opts) {
  check_scale(s);
  ImplicitGrad out;
  const double p2 = 2.0 / eps2;
  const double zp = opts.literal_z_exponent ? 2.0 / eps2 : 2.0 / eps1;
  const double ux = std::abs(xl.x()) / s.x();
  const double uy = std::abs(xl.y()) / s.y();
  const double uz = std::abs(xl.z()) / s.z();
  const double tx = pow_abs(ux, p2);
  const double ty = pow_abs(uy, p2);
  const double g = tx + ty;
  const double big_g = pow_abs(g, eps2 / eps1);
  const double tz = pow_abs(uz, zp);
  double f = big_g + tz;
  if (!(f > 0.0)) f = 0.0;

  if (f >= opts.f_clamp || !std::isfinite(f)) {
    out.f = opts.f_clamp;
    return out;  // saturated: zero gradients
  }
  out.f = f;

  // d f / d u_i, symmetric subgradient 0 on coordinate planes
  const double dG_dg = (g > 0.0) ? (eps2 / eps1) * pow_abs(g, eps2 / eps1 - 1.0) : 0.0;
  const double df_dux = (ux > 0.0) ? dG_dg * p2 * pow_abs(ux, p2 - 1.0) : 0.0;
  const double df_duy = (uy > 0.0) ? dG_dg * p2 * pow_abs(uy, p2 - 1.0) : 0.0;
  const double df_duz = (uz > 0.0) ? zp * pow_abs(uz, zp - 1.0) : 0.0;

  const double sgn_x = (xl.x() > 0.0) ? 1.0 : (xl.x() < 0.0 ? -1.0 : 0.0);
  const double sgn_y = (xl.y() > 0.0) ? 1.0 : (xl.y() < 0.0 ? -1.0 : 0.0);
  const double sgn_z = (xl.z() > 0.0) ? 1.0 : (xl.z() < 0.0 ? -1.0 : 0.0);

  out.d_xlocal = Vec3(df_dux * sgn_x / s.x(), df_duy * sgn_y / s.y(),
                      df_duz * sgn_z / s.z());
  out.d_scale = Vec3(-df_dux * ux / s.x(), -df_duy * uy / s.y(),
                     -df_duz * uz / s.z());

  // exponent derivatives; terms with a zero base contribute nothing
  double d_e1 = 0.0, d_e2 = 0.0;
  if (g > 0.0 && big_g > 0.0) {
    const double ln_g = std::log(g);
    d_e1 += big_g * ln_g * (-eps2 / (eps1 * eps1));
    double dg_de2 = 0.0;
    if (ux > 0.0) dg_de2 += tx * std::log(ux) * (-2.0 / (eps2 * eps2));
    if (uy > 0.0) dg_de2 += ty * std::log(uy) * (-2.0 / (eps2 * eps2));
    d_e2 += big_g * (ln_g / eps1 + (eps2 / eps1) * dg_de2 / g);
  }
  if (uz > 0.0 && tz > 0.0) {
    const double ln_uz = std::log(uz);
    if (opts.literal_z_exponent) {
      d_e2 += tz * ln_uz * (-2.0 / (eps2 * eps2));
    } else {
      d_e1 += tz * ln_uz * (-2.0 / (eps1 * eps1));
    }
  }
  out.d_eps1 = d_e1;
  out.d_eps2 = d_e2;
  return out;
}

Vec3 support_radii(const Vec3& s, double eps1, double eps2, double f_max,
                   const ImplicitOptions& opts) {
  if (!(f_max > 0.0)) {
    throw std::invalid_argument("support_radii: f_max must be positive");
  }
  check_scale(s);
  const double r1 = std::pow(f_max, eps1 / 2.0);
  const double rz = opts.literal_z_exponent ? std::pow(f_max, eps2 / 2.0) : r1;
  return 1.05 * Vec3(s.x() * r1, s.y() * r1, s.z() * rz);
}

Vec3 primitive_support_radii(const Primitive& p, PrimitiveKind kind, double f_max,
                             const ImplicitOptions& opts) {
  if (kind == PrimitiveKind::Gaussian) {
    if (!(f_max > 0.0)) {
      throw std::invalid_argument("support_radii: f_max must be positive");
    }
    return 1.05 * std::sqrt(2.0 * f_max) * p.scale;
  }
  return support_radii(p.scale, p.eps1, p.eps2, f_max, opts);
}

void validate_primitive(const Primitive& p, PrimitiveKind kind,
                        const EpsBounds& bounds) {
  if (!(p.scale.x() > 0.0 && p.scale.y() > 0.0 && p.scale.z() > 0.0)) {
    throw std::invalid_argument("primitive: scale must be strictly positive");
  }
  if (!(p.opacity >= 0.0 && p.opacity <= 1.0)) {
    throw std::invalid_argument("primitive: opacity outside [0,1]");
  }
  if (kind == PrimitiveKind::Superquadric) {
    if (p.eps1 < bounds.lo - 1e-12 || p.eps1 > bounds.hi + 1e-12 ||
        p.eps2 < bounds.lo - 1e-12 || p.eps2 > bounds.hi + 1e-12) {
      throw std::invalid_argument("primitive: eps outside configured bounds");
    }
  }
  if (p.semantics.size() == 0) {
    throw std::invalid_argument("primitive: semantics must be non-empty");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.semantics.size(); ++i) {
    if (p.semantics[i] < 0.0) {
      throw std::invalid_argument("primitive: semantics entries must be >= 0");
    }
    sum += p.semantics[i];
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw std::invalid_argument("primitive: semantics must sum to 1");
  }
}

}  // namespace sqs

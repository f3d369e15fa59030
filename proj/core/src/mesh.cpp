#include "sqscene/mesh.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "sqscene/quaternion.hpp"

namespace sqs {

namespace {

// sgn(u) |u|^p
double sgnpow(double u, double p) {
  if (u == 0.0) return 0.0;
  const double m = std::exp(p * std::log(std::abs(u)));
  return u < 0.0 ? -m : m;
}

}  // namespace

Vec3 superquadric_surface_point(const Vec3& scale, double eps1, double eps2,
                                double eta, double omega) {
  const double ce = std::cos(eta), se = std::sin(eta);
  const double co = std::cos(omega), so = std::sin(omega);
  return {scale.x() * sgnpow(ce, eps1) * sgnpow(co, eps2),
          scale.y() * sgnpow(ce, eps1) * sgnpow(so, eps2),
          scale.z() * sgnpow(se, eps1)};
}

void export_mesh(std::span<const Primitive> primitives, PrimitiveKind kind,
                 const std::string& path, int resolution) {
  if (resolution < 4) {
    throw std::invalid_argument("export_mesh: resolution must be >= 4");
  }
  resolution = std::min(resolution, 128);

  std::ofstream os(path);
  if (!os) throw std::invalid_argument("export_mesh: cannot open '" + path + "'");
  os.precision(17);
  os << "# superquadric primitive set, " << primitives.size() << " primitives\n";

  long vertex_base = 1;
  for (std::size_t pi = 0; pi < primitives.size(); ++pi) {
    const Primitive& p = primitives[pi];
    const double e1 = kind == PrimitiveKind::Gaussian ? 1.0 : p.eps1;
    const double e2 = kind == PrimitiveKind::Gaussian ? 1.0 : p.eps2;
    // local -> world: x = m + R^T x_local
    const Eigen::Matrix3d rot_t = quat_to_rotmat(p.rotation).transpose();

    int cls = 0;
    for (Eigen::Index k = 1; k < p.semantics.size(); ++k) {
      if (p.semantics[k] > p.semantics[cls]) cls = static_cast<int>(k);
    }
    os << "g primitive_" << pi << "\n";
    os << "usemtl class_" << (cls + 1) << "\n";

    const int rows = resolution + 1;  // eta in [-pi/2, pi/2]
    const int cols = resolution;      // omega wraps
    for (int i = 0; i < rows; ++i) {
      const double eta = -M_PI / 2 + M_PI * i / resolution;
      for (int j = 0; j < cols; ++j) {
        const double omega = -M_PI + 2 * M_PI * j / resolution;
        const Vec3 local = superquadric_surface_point(p.scale, e1, e2, eta, omega);
        const Vec3 world = p.position + rot_t * local;
        os << "v " << world.x() << ' ' << world.y() << ' ' << world.z() << '\n';
      }
    }
    for (int i = 0; i < resolution; ++i) {
      for (int j = 0; j < cols; ++j) {
        const long a = vertex_base + static_cast<long>(i) * cols + j;
        const long b = vertex_base + static_cast<long>(i) * cols + (j + 1) % cols;
        const long c = vertex_base + static_cast<long>(i + 1) * cols + j;
        const long d = vertex_base + static_cast<long>(i + 1) * cols + (j + 1) % cols;
        os << "f " << a << ' ' << b << ' ' << d << '\n';
        os << "f " << a << ' ' << d << ' ' << c << '\n';
      }
    }
    vertex_base += static_cast<long>(rows) * cols;
  }
  if (!os) throw std::invalid_argument("export_mesh: write failed for '" + path + "'");
}

}  // namespace sqs

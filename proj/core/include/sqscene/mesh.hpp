#pragma once

#include <span>
#include <string>

#include "sqscene/primitives.hpp"

namespace sqs {

/// Writes an OBJ file with one tessellated superquadric surface per
/// primitive, using the signed-power trigonometric parametric form. Each
/// primitive becomes a group with a material named after its argmax semantic
/// class. resolution is the number of subdivisions per parameter (clamped to
/// 128 above; below 4 throws std::invalid_argument).
void export_mesh(std::span<const Primitive> primitives, PrimitiveKind kind,
                 const std::string& path, int resolution);

/// Parametric surface point for exponents (eps1, eps2); eta in
/// [-pi/2, pi/2], omega in [-pi, pi). Satisfies f = 1 exactly.
Vec3 superquadric_surface_point(const Vec3& scale, double eps1, double eps2,
                                double eta, double omega);

}  // namespace sqs

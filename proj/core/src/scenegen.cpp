#include "sqscene/scenegen.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "sqscene/quaternion.hpp"

namespace sqs {

bool analytic_inside(const ShapeSpec& shape, const Vec3& point) {
  const Vec3 xl = quat_to_rotmat(shape.rotation) * (point - shape.position);
  switch (shape.kind) {
    case ShapeSpec::Kind::Box:
      return std::abs(xl.x()) <= shape.size.x() * 0.5 &&
             std::abs(xl.y()) <= shape.size.y() * 0.5 &&
             std::abs(xl.z()) <= shape.size.z() * 0.5;
    case ShapeSpec::Kind::Cylinder: {
      const double r = shape.size.x();
      return xl.x() * xl.x() + xl.y() * xl.y() <= r * r &&
             std::abs(xl.z()) <= shape.size.z() * 0.5;
    }
    case ShapeSpec::Kind::Ellipsoid: {
      const Vec3 semi = shape.size * 0.5;
      const double ux = xl.x() / semi.x();
      const double uy = xl.y() / semi.y();
      const double uz = xl.z() / semi.z();
      return ux * ux + uy * uy + uz * uz <= 1.0;
    }
    case ShapeSpec::Kind::Superquadric:
      return canonical_implicit(xl, shape.size, shape.eps1, shape.eps2) <= 1.0;
    case ShapeSpec::Kind::GroundPlane:
      return std::abs(xl.z()) <= shape.size.z() * 0.5;
  }
  return false;
}

OccupancyGrid generate_scene(std::span<const ShapeSpec> shapes, const GridSpec& spec,
                             int class_count) {
  if (shapes.empty()) {
    throw std::invalid_argument("generate_scene: empty shape list");
  }
  spec.validate();
  for (const ShapeSpec& s : shapes) {
    if (s.class_id < 1 || s.class_id > class_count) {
      throw std::invalid_argument("generate_scene: class_id out of range");
    }
    if (!(s.size.x() > 0.0 && s.size.y() > 0.0 && s.size.z() > 0.0)) {
      throw std::invalid_argument("generate_scene: shape sizes must be positive");
    }
  }
  OccupancyGrid grid = OccupancyGrid::empty(spec, class_count);
  std::size_t v = 0;
  for (int z = 0; z < spec.dims.z(); ++z) {
    for (int y = 0; y < spec.dims.y(); ++y) {
      for (int x = 0; x < spec.dims.x(); ++x, ++v) {
        const Vec3 c = spec.voxel_center(x, y, z);
        // last writer wins
        for (const ShapeSpec& s : shapes) {
          if (analytic_inside(s, c)) {
            grid.labels[v] = static_cast<std::uint8_t>(s.class_id);
          }
        }
      }
    }
  }
  return grid;
}

namespace {

GridSpec desk_spec(int xy, int z, double half_xy, double half_z) {
  GridSpec spec;
  spec.dims = {xy, xy, z};
  spec.origin = {-half_xy, -half_xy, -half_z};
  spec.voxel_size = {2.0 * half_xy / xy, 2.0 * half_xy / xy, 2.0 * half_z / z};
  return spec;
}

Preset make_single_box(std::uint64_t seed) {
  Preset p;
  p.spec = desk_spec(32, 16, 8.0, 4.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  ShapeSpec box;
  box.kind = ShapeSpec::Kind::Box;
  box.position = Vec3(jitter(rng), jitter(rng), 0.25 * jitter(rng));
  box.size = Vec3(8.0, 6.0, 4.0);
  box.class_id = 1;
  p.shapes.push_back(box);
  return p;
}

Preset make_box_grid(std::uint64_t seed) {
  Preset p;
  p.spec = desk_spec(64, 16, 16.0, 4.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.6, 0.6);
  std::uniform_real_distribution<double> size_x(2.0, 5.0);
  std::uniform_real_distribution<double> size_z(1.5, 3.5);
  int cls = 1;
  for (int i = -1; i <= 1; ++i) {
    for (int j = -1; j <= 1; ++j) {
      ShapeSpec box;
      box.kind = ShapeSpec::Kind::Box;
      box.position = Vec3(9.0 * i + jitter(rng), 9.0 * j + jitter(rng), -0.5);
      box.size = Vec3(size_x(rng), size_x(rng), size_z(rng));
      box.class_id = cls;
      cls = cls % 16 + 1;
      p.shapes.push_back(box);
    }
  }
  return p;
}

Preset make_street(std::uint64_t seed) {
  Preset p;
  p.spec = GridSpec::full_scale_default();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  // driveable surface, one voxel layer thick
  ShapeSpec ground;
  ground.kind = ShapeSpec::Kind::GroundPlane;
  ground.position = Vec3(0.0, 0.0, -2.25);
  ground.size = Vec3(1.0, 1.0, 0.5);
  ground.class_id = 11;
  p.shapes.push_back(ground);

  // cuboid vehicles dominate the occupied volume above ground
  const int n_vehicles = 60;
  for (int i = 0; i < n_vehicles; ++i) {
    ShapeSpec car;
    car.kind = ShapeSpec::Kind::Box;
    car.position = Vec3(-45.0 + 90.0 * u01(rng), -45.0 + 90.0 * u01(rng), -0.8);
    car.size = Vec3(5.5 + 3.0 * u01(rng), 2.2 + 0.8 * u01(rng), 1.7 + 0.7 * u01(rng));
    const double yaw = u01(rng) * M_PI;
    car.rotation = {std::cos(yaw / 2), 0.0, 0.0, std::sin(yaw / 2)};
    car.class_id = 4;
    p.shapes.push_back(car);
  }

  // cylindrical poles
  const int n_poles = 24;
  for (int i = 0; i < n_poles; ++i) {
    ShapeSpec pole;
    pole.kind = ShapeSpec::Kind::Cylinder;
    pole.position = Vec3(-42.0 + 84.0 * u01(rng), -42.0 + 84.0 * u01(rng), 0.0);
    const double radius = 0.6 + 0.4 * u01(rng);
    pole.size = Vec3(radius, radius, 5.0);
    pole.class_id = 15;
    p.shapes.push_back(pole);
  }

  // vegetation blobs
  const int n_veg = 10;
  for (int i = 0; i < n_veg; ++i) {
    ShapeSpec veg;
    veg.kind = ShapeSpec::Kind::Ellipsoid;
    veg.position = Vec3(-40.0 + 80.0 * u01(rng), -40.0 + 80.0 * u01(rng),
                        0.4 + 0.8 * u01(rng));
    veg.size = Vec3(4.0 + 4.0 * u01(rng), 4.0 + 4.0 * u01(rng), 2.5 + 1.5 * u01(rng));
    veg.class_id = 16;
    p.shapes.push_back(veg);
  }
  return p;
}

Preset make_random(int k, std::uint64_t seed) {
  Preset p;
  p.spec = desk_spec(64, 16, 16.0, 4.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> kind_pick(0, 3);
  std::uniform_int_distribution<int> cls_pick(1, 16);
  for (int i = 0; i < k; ++i) {
    ShapeSpec s;
    s.kind = static_cast<ShapeSpec::Kind>(kind_pick(rng));
    s.position = Vec3(-12.0 + 24.0 * u01(rng), -12.0 + 24.0 * u01(rng),
                      -2.0 + 4.0 * u01(rng));
    s.size = Vec3(1.5 + 4.0 * u01(rng), 1.5 + 4.0 * u01(rng), 1.0 + 2.5 * u01(rng));
    if (s.kind == ShapeSpec::Kind::Superquadric) {
      s.size *= 0.5;  // semi-axes
      s.eps1 = 0.2 + 1.6 * u01(rng);
      s.eps2 = 0.2 + 1.6 * u01(rng);
    }
    const double yaw = u01(rng) * M_PI;
    s.rotation = {std::cos(yaw / 2), 0.0, 0.0, std::sin(yaw / 2)};
    s.class_id = cls_pick(rng);
    p.shapes.push_back(s);
  }
  return p;
}

}  // namespace

Preset preset_scene(const std::string& name, std::uint64_t seed) {
  if (name == "single-box") return make_single_box(seed);
  if (name == "box-grid") return make_box_grid(seed);
  if (name == "street") return make_street(seed);
  if (name.rfind("random-", 0) == 0) {
    const int k = std::stoi(name.substr(7));
    if (k < 1) throw std::invalid_argument("preset: random-k needs k >= 1");
    return make_random(k, seed);
  }
  throw std::invalid_argument("preset: unknown name '" + name + "'");
}

}  // namespace sqs

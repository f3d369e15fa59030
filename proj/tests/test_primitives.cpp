#include <doctest.h>

#include <cmath>
#include <random>

#include "sqscene/primitives.hpp"
#include "sqscene/quaternion.hpp"

using namespace sqs;

TEST_CASE("quat_to_rotmat basics") {
  CHECK(quat_to_rotmat({1, 0, 0, 0}).isApprox(Eigen::Matrix3d::Identity(), 1e-12));

  // 90 degrees about z
  const double h = std::sqrt(0.5);
  const Eigen::Matrix3d r = quat_to_rotmat({h, 0, 0, h});
  const Vec3 v = r * Vec3(1, 0, 0);
  CHECK(v.isApprox(Vec3(0, 1, 0), 1e-12));

  // scaling invariance
  CHECK(quat_to_rotmat({2, 0, 0, 0}).isApprox(Eigen::Matrix3d::Identity(), 1e-12));

  CHECK_THROWS_AS(quat_to_rotmat({0, 0, 0, 0}), std::invalid_argument);
}

TEST_CASE("quat_to_rotmat is orthonormal with unit determinant") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n01;
  for (int i = 0; i < 200; ++i) {
    const UnitQuaternion q{n01(rng), n01(rng), n01(rng), n01(rng)};
    if (q.norm() < 1e-6) continue;
    const Eigen::Matrix3d r = quat_to_rotmat(q);
    CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("quaternion sign symmetry") {
  const UnitQuaternion q{0.3, -0.4, 0.5, 0.7};
  const UnitQuaternion nq{-0.3, 0.4, -0.5, -0.7};
  CHECK(quat_to_rotmat(q).isApprox(quat_to_rotmat(nq), 1e-12));
}

TEST_CASE("canonical_implicit values") {
  CHECK(canonical_implicit(Vec3(0, 0, 0), Vec3(1, 2, 3), 0.3, 1.7) == 0.0);
  CHECK(canonical_implicit(Vec3(1, 0, 0), Vec3(1, 1, 1), 1.0, 1.0) ==
        doctest::Approx(1.0).epsilon(1e-12));
  // high-precision scalar oracle: 3 * 0.9^20
  const double expected = 3.0 * std::pow(0.9, 20.0);
  CHECK(canonical_implicit(Vec3(0.9, 0.9, 0.9), Vec3(1, 1, 1), 0.1, 0.1) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS_AS(canonical_implicit(Vec3(1, 1, 1), Vec3(1, 0, 1), 1, 1),
                  std::invalid_argument);
}

TEST_CASE("canonical_implicit ellipsoid specialization") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_real_distribution<double> us(0.5, 2.0);
  for (int i = 0; i < 100; ++i) {
    const Vec3 x(u(rng), u(rng), u(rng));
    const Vec3 s(us(rng), us(rng), us(rng));
    const double f = canonical_implicit(x, s, 1.0, 1.0);
    double quad = 0;
    for (int j = 0; j < 3; ++j) quad += (x[j] / s[j]) * (x[j] / s[j]);
    CHECK(f == doctest::Approx(std::min(quad, 80.0)).epsilon(1e-12));
  }
}

TEST_CASE("canonical_implicit even and radially monotone") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::uniform_real_distribution<double> ue(0.1, 2.0);
  for (int i = 0; i < 200; ++i) {
    const Vec3 x(u(rng), u(rng), u(rng));
    const Vec3 s(1.0, 0.7, 1.3);
    const double e1 = ue(rng), e2 = ue(rng);
    const double f = canonical_implicit(x, s, e1, e2);
    for (const Vec3& flip :
         {Vec3(-x.x(), x.y(), x.z()), Vec3(x.x(), -x.y(), x.z()),
          Vec3(-x.x(), -x.y(), -x.z())}) {
      CHECK(canonical_implicit(flip, s, e1, e2) == doctest::Approx(f).epsilon(1e-12));
    }
    // non-decreasing along the ray
    const double f_half = canonical_implicit(0.5 * x, s, e1, e2);
    CHECK(f_half <= f + 1e-12);
  }
}

TEST_CASE("literal z-exponent compatibility flag") {
  ImplicitOptions literal;
  literal.literal_z_exponent = true;
  const Vec3 x(0, 0, 0.5), s(1, 1, 1);
  // standard form: |z|^{2/e1}; literal form: |z|^{2/e2}
  CHECK(canonical_implicit(x, s, 0.5, 2.0) ==
        doctest::Approx(std::pow(0.5, 4.0)).epsilon(1e-12));
  CHECK(canonical_implicit(x, s, 0.5, 2.0, literal) ==
        doctest::Approx(std::pow(0.5, 1.0)).epsilon(1e-12));
}

TEST_CASE("clamp_exponent") {
  const EpsBounds b{0.1, 2.0};
  CHECK(clamp_exponent(0.05, b) == 0.1);
  CHECK(clamp_exponent(1.0, b) == 1.0);
  CHECK(clamp_exponent(5.0, b) == 2.0);
  CHECK_THROWS_AS(clamp_exponent(1.0, {0.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(clamp_exponent(1.0, {1.0, 0.5}), std::invalid_argument);
}

TEST_CASE("support_radii soundness by dense sampling") {
  std::mt19937_64 rng(17);
  struct Case {
    Vec3 s;
    double e1, e2, f_max;
  };
  for (const Case& c : {Case{{1, 1, 1}, 1.0, 1.0, 9.0}, Case{{2, 1, 1}, 1.0, 1.0, 9.0},
                        Case{{0.5, 1.5, 1.0}, 0.3, 1.8, 12.0},
                        Case{{1.0, 1.0, 2.0}, 1.9, 0.2, 6.0}}) {
    const Vec3 h = support_radii(c.s, c.e1, c.e2, c.f_max);
    if (c.s == Vec3(1, 1, 1) && c.e1 == 1.0) {
      CHECK(h.x() >= 3.0);
    }
    if (c.s == Vec3(2, 1, 1) && c.e1 == 1.0) {
      CHECK(h.x() >= 6.0);
    }
    // samples outside the box must all have f > f_max
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    int tested = 0;
    while (tested < 100000) {
      const Vec3 p(u(rng) * h.x(), u(rng) * h.y(), u(rng) * h.z());
      if (std::abs(p.x()) <= h.x() && std::abs(p.y()) <= h.y() &&
          std::abs(p.z()) <= h.z()) {
        continue;
      }
      ++tested;
      CHECK(canonical_implicit(p, c.s, c.e1, c.e2, {false, 1e18}) > c.f_max);
    }
  }
}

TEST_CASE("support_radii shrinks to zero with f_max") {
  const Vec3 h = support_radii(Vec3(1, 1, 1), 1.0, 1.0, 1e-12);
  CHECK(h.maxCoeff() < 1e-5);
}

TEST_CASE("implicit gradient matches finite differences") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::uniform_real_distribution<double> us(0.5, 2.0);
  std::uniform_real_distribution<double> ue(0.15, 1.9);
  const double h = 1e-6;
  int checked = 0;
  for (int i = 0; i < 200 && checked < 100; ++i) {
    Vec3 x(u(rng), u(rng), u(rng));
    // keep away from coordinate-plane singularities
    bool ok = true;
    for (int j = 0; j < 3; ++j) ok = ok && std::abs(x[j]) > 0.05;
    if (!ok) continue;
    const Vec3 s(us(rng), us(rng), us(rng));
    const double e1 = ue(rng), e2 = ue(rng);
    const ImplicitGrad g = canonical_implicit_grad(x, s, e1, e2);
    if (g.f >= 79.0) continue;
    ++checked;

    auto fd = [&](auto setter) {
      auto lo = setter(-h), hi = setter(h);
      return (hi - lo) / (2 * h);
    };
    for (int j = 0; j < 3; ++j) {
      const double d = fd([&](double dd) {
        Vec3 xx = x;
        xx[j] += dd;
        return canonical_implicit(xx, s, e1, e2);
      });
      CHECK(g.d_xlocal[j] == doctest::Approx(d).epsilon(1e-4));
      const double ds = fd([&](double dd) {
        Vec3 ss = s;
        ss[j] += dd;
        return canonical_implicit(x, ss, e1, e2);
      });
      CHECK(g.d_scale[j] == doctest::Approx(ds).epsilon(1e-4));
    }
    CHECK(g.d_eps1 == doctest::Approx(fd([&](double dd) {
            return canonical_implicit(x, s, e1 + dd, e2);
          })).epsilon(1e-4));
    CHECK(g.d_eps2 == doctest::Approx(fd([&](double dd) {
            return canonical_implicit(x, s, e1, e2 + dd);
          })).epsilon(1e-4));
  }
  CHECK(checked >= 50);
}

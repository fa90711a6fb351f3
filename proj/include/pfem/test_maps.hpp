#pragma once

// Analytic reference maps with closed-form world gradients.

#include <cmath>
#include <numbers>
#include <string>

#include "pfem/interpolation.hpp"
#include "pfem/manifolds.hpp"
#include "pfem/norms_errors.hpp"

namespace pfem {

/// Inverse stereographic projection R^2 -> S^2.
[[nodiscard]] inline Sphere::Ambient stereographic(const Point2& x) {
  const double s = x.squaredNorm();
  return {2.0 * x.x() / (s + 1.0), 2.0 * x.y() / (s + 1.0), (s - 1.0) / (s + 1.0)};
}

[[nodiscard]] inline WorldGradient<Sphere> stereographic_gradient(const Point2& x) {
  const double s = x.squaredNorm();
  const double d = 1.0 / (s + 1.0);
  const double d2 = d * d;
  WorldGradient<Sphere> g;
  g(0, 0) = 2.0 * d - 4.0 * x.x() * x.x() * d2;
  g(1, 0) = -4.0 * x.x() * x.y() * d2;
  g(2, 0) = 4.0 * x.x() * d2;
  g(0, 1) = -4.0 * x.x() * x.y() * d2;
  g(1, 1) = 2.0 * d - 4.0 * x.y() * x.y() * d2;
  g(2, 1) = 4.0 * x.y() * d2;
  return g;
}

namespace detail {

inline Eigen::Matrix3d rotation_x(double a) {
  Eigen::Matrix3d m;
  m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return m;
}

inline Eigen::Matrix3d rotation_x_derivative(double a) {
  Eigen::Matrix3d m;
  m << 0, 0, 0, 0, -std::sin(a), -std::cos(a), 0, std::cos(a), -std::sin(a);
  return m;
}

// Second factor of the SO(3) test map: [[c,0,-s],[0,1,0],[s,0,c]].
inline Eigen::Matrix3d rotation_y_neg(double b) {
  Eigen::Matrix3d m;
  m << std::cos(b), 0, -std::sin(b), 0, 1, 0, std::sin(b), 0, std::cos(b);
  return m;
}

inline Eigen::Matrix3d rotation_y_neg_derivative(double b) {
  Eigen::Matrix3d m;
  m << -std::sin(b), 0, -std::cos(b), 0, 0, 0, std::cos(b), 0, -std::sin(b);
  return m;
}

inline constexpr double kRotationRate = std::numbers::pi / 5.0;

}  // namespace detail

/// SO(3)-valued test map with rotation angles pi x_0 / 5 and pi x_1 / 5.
[[nodiscard]] inline Eigen::Matrix3d rotation_field_matrix(const Point2& x) {
  return detail::rotation_x(detail::kRotationRate * x.x()) * detail::rotation_y_neg(detail::kRotationRate * x.y());
}

[[nodiscard]] inline SO3::Ambient rotation_field(const Point2& x) {
  return SO3::from_matrix(rotation_field_matrix(x));
}

[[nodiscard]] inline WorldGradient<SO3> rotation_field_gradient(const Point2& x) {
  const double a = detail::kRotationRate * x.x();
  const double b = detail::kRotationRate * x.y();
  WorldGradient<SO3> g;
  g.col(0) = SO3::from_matrix(detail::kRotationRate * detail::rotation_x_derivative(a) * detail::rotation_y_neg(b));
  g.col(1) = SO3::from_matrix(detail::kRotationRate * detail::rotation_x(a) * detail::rotation_y_neg_derivative(b));
  return g;
}

template <EmbeddedManifold M>
struct TestMap {
  std::string name;
  ReferenceValue<M> value;
  ReferenceGradient<M> gradient;
};

/// The catalog entry for a manifold: `p_st` for the sphere, `R_so3` for SO(3).
template <EmbeddedManifold M>
[[nodiscard]] TestMap<M> catalog_map();

template <>
[[nodiscard]] inline TestMap<Sphere> catalog_map<Sphere>() {
  return {"p_st", &stereographic, &stereographic_gradient};
}

template <>
[[nodiscard]] inline TestMap<SO3> catalog_map<SO3>() {
  return {"R_so3", &rotation_field, &rotation_field_gradient};
}

}  // namespace pfem

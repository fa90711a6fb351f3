#pragma once

// Embedded manifolds M in R^n with closest-point projection P, its
// differential, tangent projector, geodesic distance and exp/log.
//
// Two models are provided: the unit sphere S^2 in R^3 and the rotation group
// SO(3) in R^{3x3}. Rotations are exchanged as 3x3 matrices; inside the
// generic machinery they travel as column-major vectors in R^9.

#include <array>
#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "pfem/errors.hpp"

namespace pfem {

/// Closest-point projection, its differentials, and the intrinsic geometry
/// of an embedded manifold, all as static functions on ambient vectors.
template <class M>
concept EmbeddedManifold =
    requires { typename M::Ambient; } &&
    requires(const typename M::Ambient& a, const typename M::Ambient& b) {
      { M::ambient_dim } -> std::convertible_to<int>;
      { M::intrinsic_dim } -> std::convertible_to<int>;
      { M::project(a) } -> std::same_as<typename M::Ambient>;
      { M::project_differential(a, b) } -> std::same_as<typename M::Ambient>;
      { M::project_tangent(a, b) } -> std::same_as<typename M::Ambient>;
      { M::distance(a, b) } -> std::convertible_to<double>;
      { M::exp(a, b) } -> std::same_as<typename M::Ambient>;
      { M::log(a, b) } -> std::same_as<typename M::Ambient>;
      { M::membership_residual(a) } -> std::convertible_to<double>;
      { M::tangent_residual(a, b) } -> std::convertible_to<double>;
    };

inline constexpr double kMembershipTolerance = 1e-10;

// ---------------------------------------------------------------------------

/// Unit sphere S^2 in R^3. P(q) = q/|q|.
struct Sphere {
  static constexpr int ambient_dim = 3;
  static constexpr int intrinsic_dim = 2;
  static constexpr const char* name = "sphere";
  using Ambient = Eigen::Vector3d;
  using ProjectorMatrix = Eigen::Matrix3d;

  /// Maximal pairwise nodal distance inside one element for which a discrete
  /// map is considered well posed.
  static constexpr double closeness_radius = std::numbers::pi / 2;
  static constexpr double injectivity_radius = std::numbers::pi;
  static constexpr double min_norm = 1e-8;

  [[nodiscard]] static double membership_residual(const Ambient& q) { return std::abs(q.norm() - 1.0); }

  [[nodiscard]] static Ambient project(const Ambient& q) {
    const double n = q.norm();
    if (!(n >= min_norm)) throw OutsideProjectionDomain("sphere projection of a near-zero vector");
    return q / n;
  }

  /// dP(y)[xi] = (I - y^ y^T) xi / |y|.
  [[nodiscard]] static Ambient project_differential(const Ambient& y, const Ambient& xi) {
    const double n = y.norm();
    if (!(n >= min_norm)) throw OutsideProjectionDomain("sphere projection of a near-zero vector");
    const Ambient u = y / n;
    return (xi - u * u.dot(xi)) / n;
  }

  [[nodiscard]] static ProjectorMatrix tangent_projector(const Ambient& p) {
    if (membership_residual(p) > kMembershipTolerance) {
      throw std::invalid_argument("tangent_projector: point is not on the sphere");
    }
    return ProjectorMatrix::Identity() - p * p.transpose();
  }

  /// Tangent projection without the membership check.
  [[nodiscard]] static Ambient project_tangent(const Ambient& p, const Ambient& v) { return v - p * p.dot(v); }

  [[nodiscard]] static double tangent_residual(const Ambient& p, const Ambient& v) { return std::abs(p.dot(v)); }

  [[nodiscard]] static double distance(const Ambient& p, const Ambient& q) {
    return std::atan2(p.cross(q).norm(), p.dot(q));
  }

  [[nodiscard]] static Ambient exp(const Ambient& p, const Ambient& v) {
    const double theta = v.norm();
    if (theta == 0.0) return p;
    const Ambient q = std::cos(theta) * p + (std::sin(theta) / theta) * v;
    return q / q.norm();
  }

  [[nodiscard]] static Ambient log(const Ambient& p, const Ambient& q) {
    const double c = p.dot(q);
    const Ambient w = q - c * p;
    const double s = w.norm();
    const double theta = std::atan2(s, c);
    if (theta > injectivity_radius - 1e-8) throw CutLocus("sphere log at antipodal point");
    if (s == 0.0) return Ambient::Zero();
    return (theta / s) * w;
  }

  /// Dirichlet density 1/2 sum_j |dP(y)[g_j]|^2 and its partial derivatives
  /// with respect to y and the columns g_j.
  static double dirichlet_density(const Ambient& y, const std::array<Ambient, 2>& g, Ambient& d_y,
                                  std::array<Ambient, 2>& d_g) {
    const double r2 = y.squaredNorm();
    if (!(r2 >= min_norm * min_norm)) throw OutsideProjectionDomain("sphere projection of a near-zero vector");
    const double inv_r2 = 1.0 / r2;
    double density = 0.0;
    d_y.setZero();
    for (int j = 0; j < 2; ++j) {
      const double yg = y.dot(g[j]);
      const double gg = g[j].squaredNorm();
      density += 0.5 * (gg - yg * yg * inv_r2) * inv_r2;
      d_g[j] = (g[j] - y * (yg * inv_r2)) * inv_r2;
      d_y += (-gg * inv_r2 * inv_r2 + 2.0 * yg * yg * inv_r2 * inv_r2 * inv_r2) * y - (yg * inv_r2 * inv_r2) * g[j];
    }
    return density;
  }
};

// ---------------------------------------------------------------------------

/// Rotation group SO(3) embedded in R^{3x3} with the Frobenius inner product.
/// P(A) is the orthogonal polar factor of A. Geodesic distances follow the
/// embedding metric: d(I, rotation by angle t) = sqrt(2) * t.
struct SpecialOrthogonal3 {
  static constexpr int ambient_dim = 9;
  static constexpr int intrinsic_dim = 3;
  static constexpr const char* name = "so3";
  using Ambient = Eigen::Matrix<double, 9, 1>;
  using Matrix = Eigen::Matrix3d;
  using ProjectorMatrix = Eigen::Matrix<double, 9, 9>;

  static constexpr double closeness_radius = std::numbers::pi / std::numbers::sqrt2;
  static constexpr double injectivity_radius = std::numbers::pi * std::numbers::sqrt2;
  static constexpr double polar_tolerance = 1e-14;
  static constexpr int polar_max_iterations = 100;

  [[nodiscard]] static Matrix as_matrix(const Ambient& a) { return Eigen::Map<const Matrix>(a.data()); }

  [[nodiscard]] static Ambient from_matrix(const Matrix& m) {
    Ambient a;
    Eigen::Map<Matrix>(a.data()) = m;
    return a;
  }

  [[nodiscard]] static Eigen::Vector3d vee(const Matrix& skew) { return {skew(2, 1), skew(0, 2), skew(1, 0)}; }

  [[nodiscard]] static Matrix hat(const Eigen::Vector3d& w) {
    Matrix m;
    m << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
    return m;
  }

  [[nodiscard]] static double membership_residual(const Matrix& q) {
    if (!(q.determinant() > 0.0)) return std::numeric_limits<double>::infinity();
    return (q.transpose() * q - Matrix::Identity()).norm();
  }
  [[nodiscard]] static double membership_residual(const Ambient& q) { return membership_residual(as_matrix(q)); }

  /// Polar factor by the iteration Q <- (Q + Q^{-T})/2, Q_0 = A, optionally
  /// carrying directional derivatives E <- (E - Q^{-T} E^T Q^{-T})/2 along.
  /// Stops once successive iterates differ by at most 1e-14 (Frobenius).
  static Matrix polar(const Matrix& a, std::span<Matrix> tangents = {}, std::vector<Matrix>* iterates = nullptr) {
    if (!(a.determinant() > 0.0)) throw OutsideProjectionDomain("SO(3) projection requires det > 0");
    Matrix q = a;
    if (iterates) iterates->push_back(q);
    for (int k = 0; k < polar_max_iterations; ++k) {
      const Matrix w = q.inverse().transpose();
      for (Matrix& e : tangents) e = 0.5 * (e - w * e.transpose() * w);
      const Matrix next = 0.5 * (q + w);
      const double step = (next - q).norm();
      q = next;
      if (iterates) iterates->push_back(q);
      if (step <= polar_tolerance) return q;
      if (!std::isfinite(step)) break;
    }
    throw OutsideProjectionDomain("SO(3) polar iteration did not converge");
  }

  [[nodiscard]] static Matrix project(const Matrix& a) { return polar(a); }
  [[nodiscard]] static Ambient project(const Ambient& a) { return from_matrix(polar(as_matrix(a))); }

  [[nodiscard]] static Matrix project_differential(const Matrix& y, const Matrix& xi) {
    std::array<Matrix, 1> e{xi};
    polar(y, e);
    return e[0];
  }
  [[nodiscard]] static Ambient project_differential(const Ambient& y, const Ambient& xi) {
    return from_matrix(project_differential(as_matrix(y), as_matrix(xi)));
  }

  /// Pi(V) = p skew(p^T V) as a 9x9 matrix acting on column-major vectors.
  [[nodiscard]] static ProjectorMatrix tangent_projector(const Ambient& p) {
    if (membership_residual(p) > kMembershipTolerance) {
      throw std::invalid_argument("tangent_projector: matrix is not a rotation");
    }
    ProjectorMatrix pi;
    for (int k = 0; k < 9; ++k) pi.col(k) = project_tangent(p, Ambient::Unit(k));
    return pi;
  }

  [[nodiscard]] static Matrix project_tangent(const Matrix& p, const Matrix& v) {
    const Matrix x = p.transpose() * v;
    return p * (0.5 * (x - x.transpose()));
  }
  [[nodiscard]] static Ambient project_tangent(const Ambient& p, const Ambient& v) {
    return from_matrix(project_tangent(as_matrix(p), as_matrix(v)));
  }

  [[nodiscard]] static double tangent_residual(const Ambient& p, const Ambient& v) {
    const Matrix x = as_matrix(p).transpose() * as_matrix(v);
    return (0.5 * (x + x.transpose())).norm();
  }

  /// Rotation angle in [0, pi] and a unit axis.
  [[nodiscard]] static Eigen::AngleAxisd angle_axis(const Matrix& r) {
    return Eigen::AngleAxisd(Eigen::Quaterniond(r).normalized());
  }

  [[nodiscard]] static double distance(const Matrix& p, const Matrix& q) {
    return std::numbers::sqrt2 * angle_axis(p.transpose() * q).angle();
  }
  [[nodiscard]] static double distance(const Ambient& p, const Ambient& q) {
    return distance(as_matrix(p), as_matrix(q));
  }

  [[nodiscard]] static Matrix exp(const Matrix& p, const Matrix& v) {
    const Matrix x = p.transpose() * v;
    const Eigen::Vector3d w = vee(0.5 * (x - x.transpose()));
    const double theta = w.norm();
    if (theta == 0.0) return p;
    return p * Eigen::AngleAxisd(theta, w / theta).toRotationMatrix();
  }
  [[nodiscard]] static Ambient exp(const Ambient& p, const Ambient& v) {
    return from_matrix(exp(as_matrix(p), as_matrix(v)));
  }

  [[nodiscard]] static Matrix log(const Matrix& p, const Matrix& q) {
    const Eigen::AngleAxisd aa = angle_axis(p.transpose() * q);
    if (aa.angle() > std::numbers::pi - 1e-8) throw CutLocus("SO(3) log at a half-turn");
    return p * hat(aa.angle() * aa.axis());
  }
  [[nodiscard]] static Ambient log(const Ambient& p, const Ambient& q) {
    return from_matrix(log(as_matrix(p), as_matrix(q)));
  }

  /// Dirichlet density 1/2 sum_j |dP(y)[g_j]|^2 and its partial derivatives,
  /// from the polar decomposition y = Q S: dP(y)[g] = Q hat(w) with
  /// (tr(S) I - S) w = vee(Q^T g - g^T Q).
  static double dirichlet_density(const Ambient& y_vec, const std::array<Ambient, 2>& g_vec, Ambient& d_y,
                                  std::array<Ambient, 2>& d_g) {
    const Matrix y = as_matrix(y_vec);
    const Matrix q = polar(y);
    Matrix s = q.transpose() * y;
    s = 0.5 * (s + s.transpose());
    const Matrix m = (s.trace() * Matrix::Identity() - s).inverse();

    double density = 0.0;
    Matrix b = Matrix::Zero();
    Matrix k = Matrix::Zero();
    for (int j = 0; j < 2; ++j) {
      const Matrix x = q.transpose() * as_matrix(g_vec[j]);
      const Eigen::Vector3d w = m * vee(x - x.transpose());
      const Eigen::Vector3d alpha = m * w;
      density += w.squaredNorm();
      d_g[j] = from_matrix(2.0 * q * hat(alpha));
      b += -2.0 * alpha.dot(w) * Matrix::Identity() + alpha * w.transpose() + w * alpha.transpose();
      const Matrix ha = hat(alpha);
      k += ha * x.transpose() + x * ha;
    }
    const Eigen::Vector3d tau = -vee(k - k.transpose()) - vee(b * s - s * b);
    d_y = from_matrix(q * b + q * hat(m * tau));
    return density;
  }
};

using SO3 = SpecialOrthogonal3;

static_assert(EmbeddedManifold<Sphere>);
static_assert(EmbeddedManifold<SO3>);

}  // namespace pfem

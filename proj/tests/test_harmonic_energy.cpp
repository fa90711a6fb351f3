#include <cmath>
#include <memory>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace pfem {
namespace {

using testing::normal;
using testing::random_rotation;
using testing::uniform;

SpacePtr space_on_level(int level, int order) { return make_lagrange_space(build_hierarchy(level).back(), order); }

template <EmbeddedManifold M>
typename M::Ambient random_ambient() {
  typename M::Ambient a;
  for (int i = 0; i < M::ambient_dim; ++i) a[i] = normal();
  return a;
}

template <EmbeddedManifold M>
std::vector<typename M::Ambient> random_tangent(const std::vector<typename M::Ambient>& base) {
  std::vector<typename M::Ambient> v;
  for (const auto& c : base) v.push_back(M::project_tangent(c, random_ambient<M>()));
  return v;
}

/// A perturbed sample of the catalog map, so gradients are generic.
template <EmbeddedManifold M>
DiscreteMap<M> perturbed_sample(const SpacePtr& space, double amplitude) {
  const auto u = nodal_sample<M>(catalog_map<M>().value, space);
  std::vector<typename M::Ambient> c;
  for (const auto& x : u.coefficients()) c.push_back(M::project(typename M::Ambient(x + amplitude * random_ambient<M>())));
  return u.with_coefficients(c);
}

template <EmbeddedManifold M>
double dot(const std::vector<typename M::Ambient>& a, const std::vector<typename M::Ambient>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].dot(b[i]);
  return s;
}

// ---------------------------------------------------------------------------
// energy

TEST(Energy, ConstantMapHasZeroEnergy) {
  const auto space = space_on_level(1, 2);
  const auto u = nodal_sample<Sphere>([](const Point2&) { return Sphere::Ambient(0.0, 0.6, -0.8); }, space);
  const auto report = energy(u);
  EXPECT_LE(report.value, 1e-20);
  const auto w = nodal_sample<SO3>([](const Point2&) { return rotation_field(Point2(1.0, 2.0)); }, space);
  EXPECT_LE(energy(w).value, 1e-20);
}

TEST(Energy, ValueIsSumOfNonnegativeElementContributions) {
  const auto u = nodal_sample<SO3>(&rotation_field, space_on_level(1, 2));
  const auto report = energy(u);
  ASSERT_EQ(report.per_element.size(), u.space().mesh().num_elements());
  double sum = 0.0;
  for (double v : report.per_element) {
    EXPECT_GE(v, 0.0);
    sum += v;
  }
  EXPECT_NEAR(report.value, sum, 1e-12 * sum);
  EXPECT_GE(report.wall_time, 0.0);
}

TEST(Energy, InvariantUnderOrthogonalMapsOfTheSphere) {
  const auto u = nodal_sample<Sphere>(&stereographic, space_on_level(1, 2));
  const double e0 = energy(u).value;
  for (int trial = 0; trial < 4; ++trial) {
    Eigen::Matrix3d q = random_rotation();
    if (trial % 2 == 1) q.col(2) *= -1.0;
    std::vector<Sphere::Ambient> c;
    for (const auto& x : u.coefficients()) c.push_back(q * x);
    EXPECT_NEAR(energy(u.with_coefficients(c)).value, e0, 1e-10 * e0);
  }
}

TEST(Energy, InvariantUnderRotationsOfSO3) {
  const auto u = nodal_sample<SO3>(&rotation_field, space_on_level(1, 1));
  const double e0 = energy(u).value;
  for (int trial = 0; trial < 3; ++trial) {
    const Eigen::Matrix3d a = random_rotation();
    const Eigen::Matrix3d b = random_rotation();
    std::vector<SO3::Ambient> left;
    std::vector<SO3::Ambient> right;
    for (const auto& x : u.coefficients()) {
      left.push_back(SO3::from_matrix(a * SO3::as_matrix(x)));
      right.push_back(SO3::from_matrix(SO3::as_matrix(x) * b));
    }
    EXPECT_NEAR(energy(u.with_coefficients(left)).value, e0, 1e-10 * e0);
    EXPECT_NEAR(energy(u.with_coefficients(right)).value, e0, 1e-10 * e0);
  }
}

TEST(Energy, InterpolantApproximatesAnalyticEnergy) {
  // 1/2 |grad p_st|^2 = 4 / (1 + |x|^2)^2, integrated by a composite Gauss
  // rule on the square.
  const double exact = testing::integrate_rectangle(
      [](double x, double y) {
        const double s = 1.0 + x * x + y * y;
        return 4.0 / (s * s);
      },
      -5.0, 5.0, -5.0, 5.0);
  EXPECT_NEAR(exact, 12.168513753480156, 1e-9);
  const auto u = nodal_sample<Sphere>(&stereographic, space_on_level(3, 2));
  EXPECT_NEAR(energy(u, 8).value, exact, 0.01 * exact);
}

TEST(Energy, GeodesicSchemeIsSupported) {
  // p_st violates the closeness guard on levels 0-2.
  const auto space = space_on_level(3, 1);
  const auto p = nodal_sample<Sphere>(&stereographic, space);
  const auto g = p.with_scheme(Scheme::geodesic);
  const double ep = energy(p).value;
  const double eg = energy(g).value;
  EXPECT_GT(eg, 0.0);
  EXPECT_NEAR(eg, ep, 0.05 * ep);
}

TEST(Energy, ProjectionFailureReportsElement) {
  // Three coefficients at 120 degrees average to zero at the centroid, the
  // only point of the degree-1 triangle rule.
  Element e{ElementKind::triangle, {0, 1, 2, -1}, 0};
  const auto mesh = std::make_shared<const Mesh>(std::vector<Point2>{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}},
                                                 std::vector<Element>{e});
  const auto space = make_lagrange_space(mesh, 1);
  std::vector<Sphere::Ambient> c;
  for (int k = 0; k < 3; ++k) {
    const double a = 2.0 * std::numbers::pi * k / 3.0;
    c.emplace_back(std::cos(a), std::sin(a), 0.0);
  }
  const DiscreteMap<Sphere> u(space, Scheme::projection, c);
  try {
    (void)energy(u, 1);
    FAIL() << "expected OutsideProjectionDomain";
  } catch (const OutsideProjectionDomain& ex) {
    EXPECT_NE(std::string(ex.what()).find("element 0"), std::string::npos) << ex.what();
  }
}

// ---------------------------------------------------------------------------
// euclidean_gradient

template <EmbeddedManifold M>
void expect_gradient_matches_energy_differences(const DiscreteMap<M>& u) {
  const QuadratureTable table(u.space_ptr(), 6);
  const auto grad = euclidean_gradient(u, table);
  ASSERT_EQ(grad.size(), u.coefficients().size());
  const auto base = u.coefficients();
  for (int trial = 0; trial < 10; ++trial) {
    const auto i = static_cast<std::size_t>(uniform(0.0, static_cast<double>(base.size()) - 1e-9));
    const double h = 1e-6 * (1.0 + base[i].norm());
    for (int k = 0; k < M::ambient_dim; ++k) {
      auto plus = base;
      auto minus = base;
      plus[i][k] += h;
      minus[i][k] -= h;
      const double fd = (detail::energy_and_gradient<M>(table, plus, nullptr) -
                         detail::energy_and_gradient<M>(table, minus, nullptr)) /
                        (2.0 * h);
      EXPECT_NEAR(grad[i][k], fd, 1e-5 * (std::abs(fd) + grad[i].norm() + 1e-3)) << "node " << i << " comp " << k;
    }
  }
}

TEST(EuclideanGradient, MatchesFiniteDifferencesOfEnergy) {
  for (int r = 1; r <= 3; ++r) {
    expect_gradient_matches_energy_differences(perturbed_sample<Sphere>(space_on_level(0, r), 0.1));
    expect_gradient_matches_energy_differences(perturbed_sample<SO3>(space_on_level(0, r), 0.1));
  }
}

TEST(EuclideanGradient, ConstantMapHasZeroGradient) {
  const auto u = nodal_sample<SO3>([](const Point2&) { return rotation_field(Point2(0.5, -1.0)); }, space_on_level(0, 2));
  for (const auto& g : euclidean_gradient(u)) EXPECT_LE(g.norm(), 1e-14);
}

TEST(EuclideanGradient, DilationOfTheDomainLeavesEnergyAndGradientUnchanged) {
  const auto mesh = build_coarse_grid();
  std::vector<Point2> scaled;
  for (const auto& v : mesh->vertices()) scaled.push_back(2.0 * v);
  const auto big = std::make_shared<const Mesh>(scaled, mesh->elements());
  const auto u = perturbed_sample<Sphere>(make_lagrange_space(mesh, 2), 0.2);
  const DiscreteMap<Sphere> v(make_lagrange_space(big, 2), Scheme::projection, u.coefficients());
  EXPECT_NEAR(energy(v).value, energy(u).value, 1e-12 * energy(u).value);
  const auto gu = euclidean_gradient(u);
  const auto gv = euclidean_gradient(v);
  for (std::size_t i = 0; i < gu.size(); ++i) EXPECT_NEAR((gu[i] - gv[i]).norm(), 0.0, 1e-12 * (1.0 + gu[i].norm()));
}

TEST(EuclideanGradient, GeodesicSchemeIsRejected) {
  const auto u = nodal_sample<Sphere>(&stereographic, space_on_level(0, 1), Scheme::geodesic);
  EXPECT_THROW((void)euclidean_gradient(u), std::invalid_argument);
  EXPECT_THROW((void)riemannian_gradient(u), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// riemannian_gradient

TEST(RiemannianGradient, IsTangentialProjectionOfEuclideanGradient) {
  for (int r = 1; r <= 2; ++r) {
    const auto u = perturbed_sample<SO3>(space_on_level(0, r), 0.1);
    const auto eg = euclidean_gradient(u);
    const auto rg = riemannian_gradient(u);
    for (std::size_t i = 0; i < eg.size(); ++i) {
      EXPECT_LE(SO3::tangent_residual(u.coefficient(i), rg.vectors()[i]), 1e-12 * (1.0 + eg[i].norm()));
      EXPECT_NEAR((rg.vectors()[i] - SO3::tangent_projector(u.coefficient(i)) * eg[i]).norm(), 0.0, 1e-12);
    }
  }
}

TEST(RiemannianGradient, ConstantMapHasZeroGradient) {
  const auto u = nodal_sample<Sphere>([](const Point2&) { return Sphere::Ambient::UnitY(); }, space_on_level(1, 1));
  for (const auto& g : riemannian_gradient(u).vectors()) EXPECT_EQ(g.norm(), 0.0);
}

template <EmbeddedManifold M>
void expect_descent(const DiscreteMap<M>& u) {
  constexpr double kStep = 1e-5;
  const auto g = riemannian_gradient(u).vectors();
  std::vector<typename M::Ambient> c;
  for (std::size_t i = 0; i < g.size(); ++i) {
    c.push_back(M::project(typename M::Ambient(u.coefficient(i) - kStep * g[i])));
  }
  const double before = energy(u).value;
  const double after = energy(u.with_coefficients(c)).value;
  EXPECT_LT(after, before);
  // first-order prediction of the decrease
  EXPECT_NEAR(before - after, kStep * dot<M>(g, g), 0.05 * kStep * dot<M>(g, g));
}

TEST(RiemannianGradient, SmallStepAgainstGradientDecreasesEnergy) {
  for (int trial = 0; trial < 5; ++trial) {
    expect_descent(perturbed_sample<Sphere>(space_on_level(0, 1 + trial % 3), 0.05));
    expect_descent(perturbed_sample<SO3>(space_on_level(0, 1 + trial % 2), 0.05));
  }
}

// ---------------------------------------------------------------------------
// hessian_vec

TEST(HessianVec, ZeroDirectionGivesZero) {
  const auto u = perturbed_sample<Sphere>(space_on_level(0, 2), 0.1);
  const TangentField<Sphere> eta(u, std::vector<Sphere::Ambient>(u.coefficients().size(), Sphere::Ambient::Zero()));
  for (const auto& v : hessian_vec(u, eta).vectors()) EXPECT_EQ(v.norm(), 0.0);
}

TEST(HessianVec, IsLinearInTheDirection) {
  const auto u = perturbed_sample<Sphere>(space_on_level(0, 2), 0.1);
  const TangentField<Sphere> eta(u, random_tangent<Sphere>(u.coefficients()));
  std::vector<Sphere::Ambient> scaled;
  for (const auto& v : eta.vectors()) scaled.push_back(1e-3 * v);
  const auto h1 = hessian_vec(u, eta).vectors();
  const auto h2 = hessian_vec(u, TangentField<Sphere>(u, scaled)).vectors();
  double worst = 0.0;
  double size = 0.0;
  for (std::size_t i = 0; i < h1.size(); ++i) {
    worst = std::max(worst, (1e3 * h2[i] - h1[i]).norm());
    size = std::max(size, h1[i].norm());
  }
  EXPECT_LE(worst, 1e-6 * size);
}

template <EmbeddedManifold M>
void expect_symmetric(const DiscreteMap<M>& u) {
  for (int trial = 0; trial < 5; ++trial) {
    const TangentField<M> eta(u, random_tangent<M>(u.coefficients()));
    const TangentField<M> zeta(u, random_tangent<M>(u.coefficients()));
    const double a = dot<M>(hessian_vec(u, eta).vectors(), zeta.vectors());
    const double b = dot<M>(hessian_vec(u, zeta).vectors(), eta.vectors());
    const double scale = std::sqrt(std::abs(dot<M>(hessian_vec(u, eta).vectors(), eta.vectors())) *
                                   std::abs(dot<M>(hessian_vec(u, zeta).vectors(), zeta.vectors())));
    EXPECT_NEAR(a, b, 1e-4 * scale);
  }
}

TEST(HessianVec, SymmetricAtACriticalPoint) {
  // Away from critical points the projected-difference Hessian carries a
  // non-symmetric Weingarten term; at a minimizer it is the Riemannian Hessian.
  const auto space = space_on_level(1, 1);
  const auto result = minimize(nodal_sample<Sphere>(&stereographic, space), space->boundary_nodes());
  ASSERT_TRUE(result.converged);
  expect_symmetric(result.solution);
}

TEST(HessianVec, PositiveCurvatureAtTheDiscreteMinimizer) {
  const auto space = space_on_level(1, 1);
  const auto result = minimize(nodal_sample<Sphere>(&stereographic, space), space->boundary_nodes());
  ASSERT_TRUE(result.converged);
  const auto& u = result.solution;
  for (int trial = 0; trial < 20; ++trial) {
    auto v = random_tangent<Sphere>(u.coefficients());
    for (std::size_t i : space->boundary_nodes()) v[i].setZero();
    const TangentField<Sphere> eta(u, v);
    EXPECT_GT(dot<Sphere>(hessian_vec(u, eta).vectors(), v), 0.0);
  }
}

TEST(HessianVec, MatchesSecondDerivativeAlongRetractionAtMinimizer) {
  const auto space = space_on_level(1, 1);
  const auto result = minimize(nodal_sample<Sphere>(&stereographic, space), space->boundary_nodes());
  ASSERT_TRUE(result.converged);
  const auto& u = result.solution;
  auto v = random_tangent<Sphere>(u.coefficients());
  for (std::size_t i : space->boundary_nodes()) v[i].setZero();
  const double quad = dot<Sphere>(hessian_vec(u, TangentField<Sphere>(u, v)).vectors(), v);
  auto along = [&](double t) {
    std::vector<Sphere::Ambient> c;
    for (std::size_t i = 0; i < v.size(); ++i) c.push_back(Sphere::project(Sphere::Ambient(u.coefficient(i) + t * v[i])));
    return energy(u.with_coefficients(c)).value;
  };
  const double t = 1e-3;
  const double second = (along(t) - 2.0 * along(0.0) + along(-t)) / (t * t);
  EXPECT_NEAR(second, quad, 1e-3 * std::abs(quad));
}

TEST(HessianVec, SizeMismatchThrows) {
  const auto u = perturbed_sample<Sphere>(space_on_level(0, 1), 0.1);
  const auto w = perturbed_sample<Sphere>(space_on_level(0, 2), 0.1);
  const TangentField<Sphere> eta(w, random_tangent<Sphere>(w.coefficients()));
  EXPECT_THROW((void)hessian_vec(u, eta), std::invalid_argument);
}

}  // namespace
}  // namespace pfem

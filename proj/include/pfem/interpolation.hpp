#pragma once

// Euclidean, projection-based and geodesic interpolation of nodal values,
// pointwise evaluation of values and first derivatives, and interpolated
// tangent fields.

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pfem/errors.hpp"
#include "pfem/fe_basis.hpp"
#include "pfem/manifolds.hpp"
#include "pfem/mesh.hpp"

namespace pfem {

enum class Scheme { projection, geodesic };

[[nodiscard]] inline std::string_view to_string(Scheme s) {
  return s == Scheme::projection ? "projection" : "geodesic";
}

[[nodiscard]] inline Scheme parse_scheme(std::string_view s) {
  if (s == "projection") return Scheme::projection;
  if (s == "geodesic") return Scheme::geodesic;
  throw ConfigError("unknown scheme '" + std::string(s) + "'");
}

template <EmbeddedManifold M>
using WorldGradient = Eigen::Matrix<double, M::ambient_dim, 2>;

template <EmbeddedManifold M>
struct TangentVector {
  typename M::Ambient base;
  typename M::Ambient vector;
};

/// Manifold-valued finite element function: one coefficient on M per global
/// Lagrange node, combined either by projection (P(sum c_i phi_i)) or as a
/// weighted Riemannian center of mass.
template <EmbeddedManifold M>
class DiscreteMap {
 public:
  using Manifold = M;
  using Ambient = typename M::Ambient;

  DiscreteMap(SpacePtr space, Scheme scheme, std::vector<Ambient> coefficients)
      : space_(std::move(space)), scheme_(scheme), coefficients_(std::move(coefficients)) {
    if (coefficients_.size() != space_->num_nodes()) {
      throw std::invalid_argument("DiscreteMap: coefficient count does not match node count");
    }
    for (std::size_t i = 0; i < coefficients_.size(); ++i) {
      if (!(M::membership_residual(coefficients_[i]) <= kMembershipTolerance)) {
        throw std::invalid_argument("DiscreteMap: coefficient " + std::to_string(i) + " is not on the manifold");
      }
    }
  }

  [[nodiscard]] const LagrangeSpace& space() const { return *space_; }
  [[nodiscard]] const SpacePtr& space_ptr() const { return space_; }
  [[nodiscard]] Scheme scheme() const { return scheme_; }
  [[nodiscard]] const std::vector<Ambient>& coefficients() const { return coefficients_; }
  [[nodiscard]] const Ambient& coefficient(std::size_t i) const { return coefficients_[i]; }

  [[nodiscard]] DiscreteMap with_coefficients(std::vector<Ambient> c) const {
    return DiscreteMap(space_, scheme_, std::move(c));
  }
  [[nodiscard]] DiscreteMap with_scheme(Scheme s) const { return DiscreteMap(space_, s, coefficients_); }

  /// Largest pairwise geodesic distance between the coefficients of one element.
  [[nodiscard]] double element_spread(std::size_t element) const {
    const auto nodes = space_->element_nodes(element);
    double spread = 0.0;
    for (std::size_t a = 0; a < nodes.size(); ++a) {
      for (std::size_t b = a + 1; b < nodes.size(); ++b) {
        spread = std::max(spread, M::distance(coefficients_[nodes[a]], coefficients_[nodes[b]]));
      }
    }
    return spread;
  }

  /// Spread at most the closeness radius; the radius itself is admitted up to
  /// rounding.
  [[nodiscard]] bool element_is_close(std::size_t element) const {
    return element_spread(element) <= M::closeness_radius * (1.0 + 1e-12);
  }

 private:
  SpacePtr space_;
  Scheme scheme_;
  std::vector<Ambient> coefficients_;
};

/// Nodal vectors tangent to a discrete map at its coefficients.
template <EmbeddedManifold M>
class TangentField {
 public:
  using Ambient = typename M::Ambient;

  TangentField(DiscreteMap<M> base, std::vector<Ambient> vectors)
      : base_(std::move(base)), vectors_(std::move(vectors)) {
    if (vectors_.size() != base_.coefficients().size()) {
      throw std::invalid_argument("TangentField: one vector per node required");
    }
    for (std::size_t i = 0; i < vectors_.size(); ++i) {
      if (M::tangent_residual(base_.coefficient(i), vectors_[i]) > 1e-10 * (1.0 + vectors_[i].norm())) {
        throw std::invalid_argument("TangentField: vector " + std::to_string(i) + " is not tangent at its base");
      }
    }
  }

  [[nodiscard]] const DiscreteMap<M>& base() const { return base_; }
  [[nodiscard]] const std::vector<Ambient>& vectors() const { return vectors_; }

 private:
  DiscreteMap<M> base_;
  std::vector<Ambient> vectors_;
};

/// Vector-valued Lagrange interpolant (no manifold constraint).
template <int N>
struct EuclideanMap {
  SpacePtr space;
  std::vector<Eigen::Matrix<double, N, 1>> coefficients;
};

// ---------------------------------------------------------------------------
// Pointwise kernels

namespace detail {

inline constexpr double kMeanTolerance = 1e-13;
inline constexpr int kMeanMaxIterations = 100;
inline constexpr double kGeodesicFdStep = 1e-6;

template <EmbeddedManifold M>
typename M::Ambient weighted_sum(const std::vector<typename M::Ambient>& c, std::span<const int> nodes,
                                 const Eigen::Ref<const Eigen::VectorXd>& w) {
  typename M::Ambient y = M::Ambient::Zero();
  for (std::size_t i = 0; i < nodes.size(); ++i) y += w[static_cast<Eigen::Index>(i)] * c[nodes[i]];
  return y;
}

/// Fixed-point iteration q <- exp_q(sum w_i log_q(c_i)) for the weighted
/// Riemannian center of mass, started at the projected Euclidean average.
template <EmbeddedManifold M>
typename M::Ambient weighted_mean(const std::vector<typename M::Ambient>& c, std::span<const int> nodes,
                                  const Eigen::Ref<const Eigen::VectorXd>& w) {
  using Ambient = typename M::Ambient;
  Ambient q;
  try {
    q = M::project(weighted_sum<M>(c, nodes, w));
  } catch (const OutsideProjectionDomain&) {
    Eigen::Index best = 0;
    w.maxCoeff(&best);
    q = c[nodes[best]];
  }
  int polish = -1;
  try {
    for (int it = 0; it < kMeanMaxIterations; ++it) {
      Ambient v = Ambient::Zero();
      for (std::size_t i = 0; i < nodes.size(); ++i) v += w[static_cast<Eigen::Index>(i)] * M::log(q, c[nodes[i]]);
      q = M::exp(q, v);
      if (polish > 0) {
        if (--polish == 0) return q;
      } else if (polish < 0 && v.norm() <= kMeanTolerance) {
        // two extra sweeps drive the residual to round-off level
        polish = 2;
      }
    }
  } catch (const CutLocus&) {
    throw MeanNotConverged("weighted mean: a coefficient reached the cut locus");
  }
  throw MeanNotConverged("weighted mean did not converge in 100 iterations");
}

template <EmbeddedManifold M>
void check_closeness(const DiscreteMap<M>& u, std::size_t element) {
  if (!u.element_is_close(element)) {
    throw MeanNotConverged("geodesic interpolation ill-posed: coefficients too far apart on element " +
                           std::to_string(element));
  }
}

/// World derivatives of shape functions: rows of dphi_ref times J^{-1}.
inline Eigen::MatrixX2d world_gradients(const Eigen::MatrixX2d& dphi_ref, const Eigen::Matrix2d& jinv) {
  return dphi_ref * jinv;
}

template <EmbeddedManifold M>
typename M::Ambient geodesic_value(const DiscreteMap<M>& u, const Element& e, const Point2& ref) {
  const auto& table = lagrange_table(e.kind, u.space().order());
  return weighted_mean<M>(u.coefficients(), u.space().element_nodes(e.id), table.values(ref));
}

/// Central differences in reference coordinates, mapped to world derivatives.
template <EmbeddedManifold M>
WorldGradient<M> geodesic_gradient(const DiscreteMap<M>& u, const Element& e, const Point2& ref,
                                   const Eigen::Matrix2d& jinv) {
  Eigen::Matrix<double, M::ambient_dim, 2> d_ref;
  for (int k = 0; k < 2; ++k) {
    Point2 step = Point2::Zero();
    step[k] = kGeodesicFdStep;
    d_ref.col(k) = (geodesic_value(u, e, ref + step) - geodesic_value(u, e, ref - step)) / (2.0 * kGeodesicFdStep);
  }
  return d_ref * jinv;
}

inline const Element& element_at(const LagrangeSpace& space, std::size_t element) {
  const auto& elements = space.mesh().elements();
  if (element >= elements.size()) throw std::out_of_range("element index out of range");
  return elements[element];
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public operations

/// Reads off f at every Lagrange node.
template <EmbeddedManifold M, class F>
[[nodiscard]] DiscreteMap<M> nodal_sample(F&& f, const SpacePtr& space, Scheme scheme = Scheme::projection) {
  std::vector<typename M::Ambient> c;
  c.reserve(space->num_nodes());
  for (const Point2& x : space->nodes()) {
    typename M::Ambient v = f(x);
    if (!(M::membership_residual(v) <= kMembershipTolerance)) {
      throw std::invalid_argument("nodal_sample: function value is not on the manifold");
    }
    c.push_back(v);
  }
  return DiscreteMap<M>(space, scheme, std::move(c));
}

template <EmbeddedManifold M>
[[nodiscard]] typename M::Ambient evaluate(const DiscreteMap<M>& u, std::size_t element, const Point2& ref_pt) {
  const Element& e = detail::element_at(u.space(), element);
  if (!in_reference_element(e.kind, ref_pt)) throw DomainError("evaluate: point outside reference element");
  // Lagrange nodes reproduce their coefficient exactly under both schemes.
  const auto& ref_nodes = reference_nodes(e.kind, u.space().order());
  for (std::size_t i = 0; i < ref_nodes.size(); ++i) {
    if (ref_nodes[i] == ref_pt) return u.coefficient(u.space().element_nodes(element)[i]);
  }
  if (u.scheme() == Scheme::projection) {
    const auto& table = detail::lagrange_table(e.kind, u.space().order());
    return M::project(detail::weighted_sum<M>(u.coefficients(), u.space().element_nodes(element), table.values(ref_pt)));
  }
  detail::check_closeness(u, element);
  return detail::geodesic_value(u, e, ref_pt);
}

/// World derivatives (columns d/dx_0, d/dx_1) of the interpolant.
template <EmbeddedManifold M>
[[nodiscard]] WorldGradient<M> evaluate_gradient(const DiscreteMap<M>& u, std::size_t element, const Point2& ref_pt) {
  const Element& e = detail::element_at(u.space(), element);
  if (!in_reference_element(e.kind, ref_pt)) throw DomainError("evaluate_gradient: point outside reference element");
  const Eigen::Matrix2d jinv = detail::jacobian_unchecked(u.space().mesh().vertices(), e, ref_pt).inverse();
  if (u.scheme() == Scheme::geodesic) {
    detail::check_closeness(u, element);
    return detail::geodesic_gradient(u, e, ref_pt, jinv);
  }
  const auto& table = detail::lagrange_table(e.kind, u.space().order());
  const auto nodes = u.space().element_nodes(element);
  const Eigen::VectorXd phi = table.values(ref_pt);
  const Eigen::MatrixX2d dphi = detail::world_gradients(table.gradients(ref_pt), jinv);
  const auto y = detail::weighted_sum<M>(u.coefficients(), nodes, phi);
  WorldGradient<M> grad;
  for (int j = 0; j < 2; ++j) {
    grad.col(j) = M::project_differential(y, detail::weighted_sum<M>(u.coefficients(), nodes, dphi.col(j)));
  }
  return grad;
}

/// Interpolated nodal tangent vectors, projected to the tangent space of the
/// base map at the evaluation point.
template <EmbeddedManifold M>
[[nodiscard]] TangentVector<M> evaluate_tangent(const TangentField<M>& vf, std::size_t element, const Point2& ref_pt) {
  const DiscreteMap<M>& base = vf.base();
  if (base.scheme() != Scheme::projection) {
    throw std::invalid_argument("evaluate_tangent: base map must use the projection scheme");
  }
  const typename M::Ambient p = evaluate(base, element, ref_pt);
  const Element& e = detail::element_at(base.space(), element);
  const auto& table = detail::lagrange_table(e.kind, base.space().order());
  const auto v = detail::weighted_sum<M>(vf.vectors(), base.space().element_nodes(element), table.values(ref_pt));
  return {p, M::project_tangent(p, v)};
}

template <int N, class F>
[[nodiscard]] EuclideanMap<N> euclidean_interpolate(F&& f, const SpacePtr& space) {
  EuclideanMap<N> map{space, {}};
  map.coefficients.reserve(space->num_nodes());
  for (const Point2& x : space->nodes()) map.coefficients.push_back(f(x));
  return map;
}

/// Euclidean interpolation of a discrete manifold-valued map: its values at
/// the Lagrange nodes, read off through evaluate().
template <EmbeddedManifold M>
[[nodiscard]] EuclideanMap<M::ambient_dim> euclidean_interpolate(const DiscreteMap<M>& u) {
  EuclideanMap<M::ambient_dim> map{u.space_ptr(), {}};
  map.coefficients.reserve(u.space().num_nodes());
  for (std::size_t i = 0; i < u.space().num_nodes(); ++i) {
    const auto [element, local] = u.space().node_owner(i);
    const Element& e = u.space().mesh().elements()[element];
    map.coefficients.push_back(evaluate(u, element, reference_nodes(e.kind, u.space().order())[local]));
  }
  return map;
}

template <int N>
[[nodiscard]] Eigen::Matrix<double, N, 1> evaluate_euclidean(const EuclideanMap<N>& map, std::size_t element,
                                                             const Point2& ref_pt) {
  const Element& e = detail::element_at(*map.space, element);
  const Eigen::VectorXd phi = shape_values(e.kind, map.space->order(), ref_pt);
  const auto nodes = map.space->element_nodes(element);
  Eigen::Matrix<double, N, 1> y = Eigen::Matrix<double, N, 1>::Zero();
  for (std::size_t i = 0; i < nodes.size(); ++i) y += phi[static_cast<Eigen::Index>(i)] * map.coefficients[nodes[i]];
  return y;
}

// ---------------------------------------------------------------------------
// Precomputed quadrature data

/// Quadrature points, weights scaled by |det J|, inverse Jacobians, and
/// reference shape data for every element of a space.
class QuadratureTable {
 public:
  struct Reference {
    std::vector<Point2> points;
    std::vector<double> weights;
    Eigen::MatrixXd phi;      // (local node, point)
    Eigen::MatrixXd dphi_xi;  // reference derivatives
    Eigen::MatrixXd dphi_eta;
  };

  QuadratureTable(SpacePtr space, int degree) : space_(std::move(space)), degree_(degree) {
    const int r = space_->order();
    for (ElementKind kind : {ElementKind::triangle, ElementKind::quadrilateral}) {
      const QuadratureRule& rule = quadrature_rule(kind, degree);
      const auto& lt = detail::lagrange_table(kind, r);
      Reference& ref = reference_[index(kind)];
      ref.points = rule.points;
      ref.weights = rule.weights;
      const auto nloc = local_node_count(kind, r);
      const auto nq = static_cast<Eigen::Index>(rule.size());
      ref.phi.resize(nloc, nq);
      ref.dphi_xi.resize(nloc, nq);
      ref.dphi_eta.resize(nloc, nq);
      for (Eigen::Index q = 0; q < nq; ++q) {
        ref.phi.col(q) = lt.values(rule.points[q]);
        const Eigen::MatrixX2d g = lt.gradients(rule.points[q]);
        ref.dphi_xi.col(q) = g.col(0);
        ref.dphi_eta.col(q) = g.col(1);
      }
    }
    const Mesh& mesh = space_->mesh();
    offsets_.reserve(mesh.num_elements() + 1);
    offsets_.push_back(0);
    for (const Element& e : mesh.elements()) {
      const Reference& ref = reference_[index(e.kind)];
      for (std::size_t q = 0; q < ref.points.size(); ++q) {
        const Eigen::Matrix2d jac = detail::jacobian_unchecked(mesh.vertices(), e, ref.points[q]);
        const double det = jac.determinant();
        if (!(det > 0.0)) throw std::runtime_error("QuadratureTable: non-positive Jacobian");
        weights_.push_back(ref.weights[q] * det);
        jinv_.push_back(jac.inverse());
        world_.push_back(detail::map_unchecked(mesh.vertices(), e, ref.points[q]));
      }
      offsets_.push_back(weights_.size());
    }
  }

  [[nodiscard]] const LagrangeSpace& space() const { return *space_; }
  [[nodiscard]] const SpacePtr& space_ptr() const { return space_; }
  [[nodiscard]] int degree() const { return degree_; }
  [[nodiscard]] const Reference& reference(ElementKind kind) const { return reference_[index(kind)]; }
  [[nodiscard]] std::size_t begin(std::size_t element) const { return offsets_[element]; }
  [[nodiscard]] std::size_t end(std::size_t element) const { return offsets_[element + 1]; }
  [[nodiscard]] double weight(std::size_t qp) const { return weights_[qp]; }
  [[nodiscard]] const Eigen::Matrix2d& jacobian_inverse(std::size_t qp) const { return jinv_[qp]; }
  [[nodiscard]] const Point2& world_point(std::size_t qp) const { return world_[qp]; }
  [[nodiscard]] std::size_t num_points() const { return weights_.size(); }

  /// World shape gradients at local point q of an element (global point qp).
  [[nodiscard]] Eigen::MatrixX2d shape_world_gradients(ElementKind kind, std::size_t q, std::size_t qp) const {
    const Reference& ref = reference_[index(kind)];
    const auto qi = static_cast<Eigen::Index>(q);
    const Eigen::Matrix2d& ji = jinv_[qp];
    Eigen::MatrixX2d d(ref.phi.rows(), 2);
    d.col(0) = ref.dphi_xi.col(qi) * ji(0, 0) + ref.dphi_eta.col(qi) * ji(1, 0);
    d.col(1) = ref.dphi_xi.col(qi) * ji(0, 1) + ref.dphi_eta.col(qi) * ji(1, 1);
    return d;
  }

 private:
  static std::size_t index(ElementKind kind) { return kind == ElementKind::triangle ? 0 : 1; }

  SpacePtr space_;
  int degree_;
  std::array<Reference, 2> reference_;
  std::vector<std::size_t> offsets_;
  std::vector<double> weights_;
  std::vector<Eigen::Matrix2d> jinv_;
  std::vector<Point2> world_;
};

namespace detail {

/// Value and world gradient of a discrete map at one quadrature point.
template <EmbeddedManifold M>
struct PointEvaluation {
  typename M::Ambient value;
  WorldGradient<M> gradient;
};

/// Evaluates u at every quadrature point of an element. Geodesic maps are
/// checked for coefficient closeness once per element.
template <EmbeddedManifold M, class Visitor>
void for_each_point(const DiscreteMap<M>& u, const QuadratureTable& table, std::size_t element, bool need_gradient,
                    Visitor&& visit) {
  using Ambient = typename M::Ambient;
  const LagrangeSpace& space = u.space();
  const Element& e = space.mesh().elements()[element];
  const auto nodes = space.element_nodes(element);
  const auto& ref = table.reference(e.kind);
  const auto& c = u.coefficients();
  const bool geodesic = u.scheme() == Scheme::geodesic;
  if (geodesic) check_closeness(u, element);
  PointEvaluation<M> pe;
  pe.gradient.setZero();
  for (std::size_t qp = table.begin(element), q = 0; qp < table.end(element); ++qp, ++q) {
    const auto qi = static_cast<Eigen::Index>(q);
    if (geodesic) {
      pe.value = weighted_mean<M>(c, nodes, ref.phi.col(qi));
      if (need_gradient) pe.gradient = geodesic_gradient(u, e, ref.points[q], table.jacobian_inverse(qp));
    } else {
      const Ambient y = weighted_sum<M>(c, nodes, ref.phi.col(qi));
      pe.value = M::project(y);
      if (need_gradient) {
        const Eigen::MatrixX2d dphi = table.shape_world_gradients(e.kind, q, qp);
        for (int j = 0; j < 2; ++j) {
          pe.gradient.col(j) = M::project_differential(y, weighted_sum<M>(c, nodes, dphi.col(j)));
        }
      }
    }
    visit(qp, pe);
  }
}

}  // namespace detail

}  // namespace pfem

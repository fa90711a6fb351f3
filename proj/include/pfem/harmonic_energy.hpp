#pragma once

// Discrete Dirichlet energy 1/2 int |dv|^2 of manifold-valued maps, its
// coefficient gradient, Riemannian gradient and Hessian-vector products.

#include <algorithm>
#include <array>
#include <chrono>
#include <stdexcept>
#include <vector>

#include "pfem/interpolation.hpp"
#include "pfem/norms_errors.hpp"

namespace pfem {

struct EnergyReport {
  double value = 0.0;
  std::vector<double> per_element;
  double wall_time = 0.0;  // seconds
};

template <EmbeddedManifold M>
[[nodiscard]] EnergyReport energy(const DiscreteMap<M>& u, const QuadratureTable& table) {
  const auto start = std::chrono::steady_clock::now();
  EnergyReport report;
  const std::size_t ne = u.space().mesh().num_elements();
  report.per_element.assign(ne, 0.0);
  for (std::size_t e = 0; e < ne; ++e) {
    double local = 0.0;
    try {
      detail::for_each_point(u, table, e, true, [&](std::size_t qp, const detail::PointEvaluation<M>& pe) {
        local += 0.5 * table.weight(qp) * pe.gradient.squaredNorm();
      });
    } catch (const OutsideProjectionDomain& ex) {
      throw ex.at_element(e);
    }
    report.per_element[e] = local;
    report.value += local;
  }
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

template <EmbeddedManifold M>
[[nodiscard]] EnergyReport energy(const DiscreteMap<M>& u, int quad_degree = kDefaultQuadratureDegree) {
  return energy(u, QuadratureTable(u.space_ptr(), quad_degree));
}

namespace detail {

template <EmbeddedManifold M>
void require_projection(const DiscreteMap<M>& u) {
  if (u.scheme() != Scheme::projection) {
    throw std::invalid_argument("energy derivatives are available for the projection scheme only");
  }
}

/// Energy and, if `grad` is non-null, its derivative with respect to every
/// coefficient (as an ambient vector), from the closed-form density kernel.
template <EmbeddedManifold M>
double energy_and_gradient(const QuadratureTable& table, const std::vector<typename M::Ambient>& c,
                           std::vector<typename M::Ambient>* grad) {
  using Ambient = typename M::Ambient;
  const LagrangeSpace& space = table.space();
  const Mesh& mesh = space.mesh();
  if (grad) grad->assign(c.size(), Ambient::Zero());
  double total = 0.0;
  std::array<Ambient, 2> g;
  std::array<Ambient, 2> d_g;
  Ambient d_y;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const Element& el = mesh.elements()[e];
    const auto nodes = space.element_nodes(e);
    const auto& ref = table.reference(el.kind);
    const auto n = static_cast<Eigen::Index>(nodes.size());
    double local = 0.0;
    try {
      for (std::size_t qp = table.begin(e), q = 0; qp < table.end(e); ++qp, ++q) {
        const auto qi = static_cast<Eigen::Index>(q);
        const Eigen::MatrixX2d dphi = table.shape_world_gradients(el.kind, q, qp);
        const Ambient y = weighted_sum<M>(c, nodes, ref.phi.col(qi));
        g[0] = weighted_sum<M>(c, nodes, dphi.col(0));
        g[1] = weighted_sum<M>(c, nodes, dphi.col(1));
        const double w = table.weight(qp);
        local += w * M::dirichlet_density(y, g, d_y, d_g);
        if (grad) {
          for (Eigen::Index i = 0; i < n; ++i) {
            (*grad)[nodes[i]] += w * (ref.phi(i, qi) * d_y + dphi(i, 0) * d_g[0] + dphi(i, 1) * d_g[1]);
          }
        }
      }
    } catch (const OutsideProjectionDomain& ex) {
      throw ex.at_element(e);
    }
    total += local;
  }
  return total;
}

template <EmbeddedManifold M>
void project_to_tangent(const std::vector<typename M::Ambient>& base, std::vector<typename M::Ambient>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = M::project_tangent(base[i], v[i]);
}

template <EmbeddedManifold M>
std::vector<typename M::Ambient> riemannian_gradient_raw(const QuadratureTable& table,
                                                         const std::vector<typename M::Ambient>& c) {
  std::vector<typename M::Ambient> grad;
  energy_and_gradient<M>(table, c, &grad);
  project_to_tangent<M>(c, grad);
  return grad;
}

template <EmbeddedManifold M>
double max_norm(const std::vector<typename M::Ambient>& v) {
  double m = 0.0;
  for (const auto& x : v) m = std::max(m, x.template lpNorm<Eigen::Infinity>());
  return m;
}

/// Central difference of the Riemannian gradient along the retraction
/// c_i -> P(c_i + t eta_i), both gradients projected to T_{c_i}M. The
/// direction is normalized to unit max-norm before differencing.
template <EmbeddedManifold M>
std::vector<typename M::Ambient> hessian_vec_raw(const QuadratureTable& table, const std::vector<typename M::Ambient>& c,
                                                 const std::vector<typename M::Ambient>& eta) {
  using Ambient = typename M::Ambient;
  const double scale = max_norm<M>(eta);
  std::vector<Ambient> result(c.size(), Ambient::Zero());
  if (scale == 0.0) return result;
  const double t = 1e-5 * (1.0 + 1.0);
  std::vector<Ambient> plus(c.size());
  std::vector<Ambient> minus(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Ambient step = (t / scale) * eta[i];
    plus[i] = M::project(Ambient(c[i] + step));
    minus[i] = M::project(Ambient(c[i] - step));
  }
  const auto gp = riemannian_gradient_raw<M>(table, plus);
  const auto gm = riemannian_gradient_raw<M>(table, minus);
  for (std::size_t i = 0; i < c.size(); ++i) {
    result[i] = M::project_tangent(c[i], gp[i] - gm[i]) * (scale / (2.0 * t));
  }
  return result;
}

}  // namespace detail

/// dE/dc_i for every node (ambient vectors, no tangent projection).
template <EmbeddedManifold M>
[[nodiscard]] std::vector<typename M::Ambient> euclidean_gradient(const DiscreteMap<M>& u, const QuadratureTable& table) {
  detail::require_projection(u);
  std::vector<typename M::Ambient> grad;
  detail::energy_and_gradient<M>(table, u.coefficients(), &grad);
  return grad;
}

template <EmbeddedManifold M>
[[nodiscard]] std::vector<typename M::Ambient> euclidean_gradient(const DiscreteMap<M>& u,
                                                                  int quad_degree = kDefaultQuadratureDegree) {
  return euclidean_gradient(u, QuadratureTable(u.space_ptr(), quad_degree));
}

template <EmbeddedManifold M>
[[nodiscard]] TangentField<M> riemannian_gradient(const DiscreteMap<M>& u, const QuadratureTable& table) {
  detail::require_projection(u);
  return TangentField<M>(u, detail::riemannian_gradient_raw<M>(table, u.coefficients()));
}

template <EmbeddedManifold M>
[[nodiscard]] TangentField<M> riemannian_gradient(const DiscreteMap<M>& u, int quad_degree = kDefaultQuadratureDegree) {
  return riemannian_gradient(u, QuadratureTable(u.space_ptr(), quad_degree));
}

template <EmbeddedManifold M>
[[nodiscard]] TangentField<M> hessian_vec(const DiscreteMap<M>& u, const TangentField<M>& eta,
                                          const QuadratureTable& table) {
  detail::require_projection(u);
  if (eta.vectors().size() != u.coefficients().size()) throw std::invalid_argument("hessian_vec: size mismatch");
  return TangentField<M>(u, detail::hessian_vec_raw<M>(table, u.coefficients(), eta.vectors()));
}

template <EmbeddedManifold M>
[[nodiscard]] TangentField<M> hessian_vec(const DiscreteMap<M>& u, const TangentField<M>& eta,
                                          int quad_degree = kDefaultQuadratureDegree) {
  return hessian_vec(u, eta, QuadratureTable(u.space_ptr(), quad_degree));
}

}  // namespace pfem

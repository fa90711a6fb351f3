#pragma once

// Riemannian trust-region minimization of the discrete Dirichlet energy over
// the free coefficients of a discrete map, with truncated CG inner solves.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "pfem/harmonic_energy.hpp"

namespace pfem {

struct SolveConfig {
  int max_outer_iterations = 200;
  double correction_tolerance = 1e-6;  // max-norm of the accepted correction
  double initial_radius = 1.0;
  double min_radius = 1e-10;
  double max_radius = 1e4;
  double shrink_ratio = 0.1;  // reject and shrink below this actual/predicted ratio
  double expand_ratio = 0.75;
  int tcg_max_iterations = -1;  // <= 0 selects 5 x number of free nodes
  double tcg_relative_tolerance = 1e-2;
  double tcg_theta = 1.0;
  int quad_degree = kDefaultQuadratureDegree;
  bool verbose = false;

  void validate() const {
    if (!(correction_tolerance > 0.0) || !(tcg_relative_tolerance > 0.0) || !(initial_radius > 0.0)) {
      throw ConfigError("SolveConfig: tolerances and radius must be positive");
    }
    if (!(min_radius > 0.0 && min_radius <= initial_radius && initial_radius <= max_radius)) {
      throw ConfigError("SolveConfig: radius bounds must satisfy 0 < min <= initial <= max");
    }
    if (!(0.0 < shrink_ratio && shrink_ratio < expand_ratio && expand_ratio < 1.0)) {
      throw ConfigError("SolveConfig: ratio thresholds must satisfy 0 < shrink < expand < 1");
    }
    if (max_outer_iterations < 0) throw ConfigError("SolveConfig: negative iteration limit");
  }
};

template <EmbeddedManifold M>
struct SolveResult {
  DiscreteMap<M> solution;
  int iterations = 0;
  double gradient_max_norm = 0.0;
  double last_correction = 0.0;
  std::vector<double> energy_history;
  bool converged = false;
};

namespace detail {

template <EmbeddedManifold M>
double inner(const std::vector<typename M::Ambient>& a, const std::vector<typename M::Ambient>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].dot(b[i]);
  return s;
}

template <EmbeddedManifold M>
void axpy(double alpha, const std::vector<typename M::Ambient>& x, std::vector<typename M::Ambient>& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

template <EmbeddedManifold M>
void mask(std::vector<typename M::Ambient>& v, const std::vector<char>& fixed) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (fixed[i]) v[i].setZero();
  }
}

// Relative accuracy of the finite-difference Hessian products. Residuals and
// curvatures below this level times the largest observed Rayleigh quotient
// carry no information.
inline constexpr double kHessianNoise = 1e-8;

// Positive tau with |eta + tau delta| = radius.
inline double boundary_step(double eta_eta, double eta_delta, double delta_delta, double radius) {
  const double disc = eta_delta * eta_delta + delta_delta * (radius * radius - eta_eta);
  return (-eta_delta + std::sqrt(std::max(disc, 0.0))) / delta_delta;
}

template <EmbeddedManifold M>
struct TcgResult {
  std::vector<typename M::Ambient> eta;
  std::vector<typename M::Ambient> h_eta;
  bool hit_boundary = false;
  int iterations = 0;
};

/// Steihaug-Toint truncated CG on the tangent space of the free nodes.
template <EmbeddedManifold M, class HessianOp>
TcgResult<M> truncated_cg(const std::vector<typename M::Ambient>& grad, double radius, int max_iterations,
                          double kappa, double theta, HessianOp&& hess) {
  using Ambient = typename M::Ambient;
  TcgResult<M> out;
  out.eta.assign(grad.size(), Ambient::Zero());
  out.h_eta.assign(grad.size(), Ambient::Zero());
  std::vector<Ambient> r = grad;
  std::vector<Ambient> delta(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) delta[i] = -r[i];
  double rr = inner<M>(r, r);
  const double r0 = std::sqrt(rr);
  if (r0 == 0.0) return out;
  const double target = r0 * std::min(std::pow(r0, theta), kappa);
  double eta_eta = 0.0;
  double model = 0.0;
  double rayleigh_max = 0.0;
  for (int j = 0; j < max_iterations; ++j) {
    ++out.iterations;
    const std::vector<Ambient> h_delta = hess(delta);
    const double curvature = inner<M>(delta, h_delta);
    const double eta_delta = inner<M>(out.eta, delta);
    const double delta_delta = inner<M>(delta, delta);
    rayleigh_max = std::max(rayleigh_max, curvature / delta_delta);
    if (j > 0 && curvature <= kHessianNoise * rayleigh_max * delta_delta) return out;
    const double alpha = rr / curvature;
    if (curvature <= 0.0 || eta_eta + 2.0 * alpha * eta_delta + alpha * alpha * delta_delta >= radius * radius) {
      const double tau = boundary_step(eta_eta, eta_delta, delta_delta, radius);
      axpy<M>(tau, delta, out.eta);
      axpy<M>(tau, h_delta, out.h_eta);
      out.hit_boundary = true;
      return out;
    }
    std::vector<Ambient> eta_new = out.eta;
    std::vector<Ambient> h_eta_new = out.h_eta;
    axpy<M>(alpha, delta, eta_new);
    axpy<M>(alpha, h_delta, h_eta_new);
    // Keep the last iterate that improved the model.
    double model_new = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) model_new += eta_new[i].dot(grad[i] + 0.5 * h_eta_new[i]);
    if (model_new >= model) return out;
    model = model_new;
    out.eta = std::move(eta_new);
    out.h_eta = std::move(h_eta_new);
    eta_eta = inner<M>(out.eta, out.eta);
    axpy<M>(alpha, h_delta, r);
    const double rr_new = inner<M>(r, r);
    if (std::sqrt(rr_new) <= std::max(target, kHessianNoise * rayleigh_max * std::sqrt(eta_eta))) return out;
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = -r[i] + beta * delta[i];
  }
  return out;
}

}  // namespace detail

/// Minimizes the Dirichlet energy over the coefficients not listed in
/// `boundary_fixed`, using closest-point projection as retraction. The
/// listed coefficients are copied through unchanged.
template <EmbeddedManifold M>
[[nodiscard]] SolveResult<M> minimize(const DiscreteMap<M>& initial, std::span<const std::size_t> boundary_fixed,
                                      const SolveConfig& cfg = {}) {
  using Ambient = typename M::Ambient;
  cfg.validate();
  detail::require_projection(initial);
  const std::size_t n = initial.coefficients().size();
  std::vector<char> fixed(n, 0);
  for (std::size_t i : boundary_fixed) {
    if (i >= n) throw std::out_of_range("minimize: fixed node index out of range");
    fixed[i] = 1;
  }
  const std::size_t free_count = static_cast<std::size_t>(std::count(fixed.begin(), fixed.end(), 0));

  const QuadratureTable table(initial.space_ptr(), cfg.quad_degree);
  std::vector<Ambient> x = initial.coefficients();
  double f = detail::energy_and_gradient<M>(table, x, nullptr);
  SolveResult<M> result{initial, 0, 0.0, 0.0, {f}, false};
  if (free_count == 0) {
    result.converged = true;
    return result;
  }

  auto gradient = [&](const std::vector<Ambient>& c) {
    auto g = detail::riemannian_gradient_raw<M>(table, c);
    detail::mask<M>(g, fixed);
    return g;
  };

  const int tcg_max = cfg.tcg_max_iterations > 0 ? cfg.tcg_max_iterations : static_cast<int>(5 * free_count);
  double radius = cfg.initial_radius;
  std::vector<Ambient> grad = gradient(x);
  for (int k = 1; k <= cfg.max_outer_iterations; ++k) {
    result.iterations = k;
    auto hess = [&](const std::vector<Ambient>& v) {
      auto hv = detail::hessian_vec_raw<M>(table, x, v);
      detail::mask<M>(hv, fixed);
      return hv;
    };
    const detail::TcgResult<M> step =
        detail::truncated_cg<M>(grad, radius, tcg_max, cfg.tcg_relative_tolerance, cfg.tcg_theta, hess);
    const double step_norm = detail::max_norm<M>(step.eta);
    const double predicted = -(detail::inner<M>(grad, step.eta) + 0.5 * detail::inner<M>(step.h_eta, step.eta));

    std::vector<Ambient> candidate = x;
    bool feasible = true;
    double f_new = std::numeric_limits<double>::infinity();
    try {
      for (std::size_t i = 0; i < n; ++i) {
        if (!fixed[i]) candidate[i] = M::project(Ambient(x[i] + step.eta[i]));
      }
      f_new = detail::energy_and_gradient<M>(table, candidate, nullptr);
    } catch (const OutsideProjectionDomain&) {
      feasible = false;
    }

    const double actual = f - f_new;
    const double rho = predicted > 0.0 ? actual / predicted : (actual >= 0.0 ? 1.0 : -1.0);
    const bool accepted = feasible && f_new <= f && rho > cfg.shrink_ratio;
    const bool converged = !step.hit_boundary && step_norm <= cfg.correction_tolerance;

    if (!feasible || rho < cfg.shrink_ratio) {
      radius = std::max(0.25 * radius, cfg.min_radius);
    } else if (rho > cfg.expand_ratio && step.hit_boundary) {
      radius = std::min(2.0 * radius, cfg.max_radius);
    }
    if (accepted) {
      x = std::move(candidate);
      f = f_new;
      result.energy_history.push_back(f);
      grad = gradient(x);
    }
    result.last_correction = step_norm;
    if (cfg.verbose) {
      std::fprintf(stderr, "%d, %.16e, %.3e, %.3e, %.3e, %d\n", k, f, detail::max_norm<M>(grad), step_norm, radius,
                   accepted ? 1 : 0);
    }
    if (converged) {
      result.converged = true;
      break;
    }
    if (radius <= cfg.min_radius && !accepted) break;
  }
  result.gradient_max_norm = detail::max_norm<M>(grad);
  result.solution = initial.with_coefficients(std::move(x));
  return result;
}

template <EmbeddedManifold M>
[[nodiscard]] SolveResult<M> minimize(const DiscreteMap<M>& initial, const std::vector<std::size_t>& boundary_fixed,
                                      const SolveConfig& cfg = {}) {
  return minimize(initial, std::span<const std::size_t>(boundary_fixed), cfg);
}

/// Evaluates a coarse map at the Lagrange nodes of a space on a refined mesh.
/// Nodes that coincide with coarse Lagrange nodes keep their coefficient.
template <EmbeddedManifold M>
[[nodiscard]] DiscreteMap<M> prolong(const DiscreteMap<M>& u, const SpacePtr& fine_space) {
  const Mesh& cm = u.space().mesh();
  const Mesh& fm = fine_space->mesh();
  if (!is_descendant(fm, cm)) throw LineageError("prolong: fine mesh does not descend from the map's mesh");
  std::vector<typename M::Ambient> c;
  c.reserve(fine_space->num_nodes());
  for (std::size_t i = 0; i < fine_space->num_nodes(); ++i) {
    const auto [element, local] = fine_space->node_owner(i);
    const Element& fe = fm.elements()[element];
    const Point2 ref = reference_nodes(fe.kind, fine_space->order())[local];
    const AncestorPoint a = locate_in_ancestor(fm, element, ref, cm);
    const Element& ce = cm.elements()[a.element];
    const auto& coarse_nodes = reference_nodes(ce.kind, u.space().order());
    const auto global = u.space().element_nodes(a.element);
    bool snapped = false;
    for (std::size_t j = 0; j < coarse_nodes.size(); ++j) {
      if ((coarse_nodes[j] - a.ref).norm() <= 1e-12) {
        c.push_back(u.coefficient(global[j]));
        snapped = true;
        break;
      }
    }
    if (!snapped) c.push_back(evaluate(u, static_cast<std::size_t>(a.element), a.ref));
  }
  return DiscreteMap<M>(fine_space, u.scheme(), std::move(c));
}

}  // namespace pfem

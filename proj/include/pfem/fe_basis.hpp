#pragma once

// Lagrange shape functions of order 1-3 on the reference triangle and square,
// Gaussian quadrature rules, and conforming global node numbering.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pfem/mesh.hpp"

namespace pfem {

inline constexpr int kMaxOrder = 3;
inline constexpr int kMaxQuadratureDegree = 8;

[[nodiscard]] constexpr int local_node_count(ElementKind kind, int order) {
  return kind == ElementKind::triangle ? (order + 1) * (order + 2) / 2 : (order + 1) * (order + 1);
}

inline void check_order(int order) {
  if (order < 1 || order > kMaxOrder) {
    throw std::invalid_argument("unsupported Lagrange order " + std::to_string(order));
  }
}

namespace detail {

// Nodes are ordered corners first, then edge-interior nodes edge by edge
// (walking from the edge's first to its second corner), then element
// interior nodes.
inline std::vector<Point2> build_reference_nodes(ElementKind kind, int order) {
  const auto& corners = reference_corners(kind);
  const int nc = static_cast<int>(corners.size());
  std::vector<Point2> nodes(corners.begin(), corners.end());
  for (int edge = 0; edge < nc; ++edge) {
    const Point2& a = corners[edge];
    const Point2& b = corners[(edge + 1) % nc];
    for (int k = 1; k < order; ++k) nodes.push_back(a + (b - a) * (double(k) / order));
  }
  if (kind == ElementKind::triangle) {
    for (int j = 1; j < order; ++j) {
      for (int i = 1; i + j < order; ++i) nodes.emplace_back(double(i) / order, double(j) / order);
    }
  } else {
    for (int j = 1; j < order; ++j) {
      for (int i = 1; i < order; ++i) nodes.emplace_back(double(i) / order, double(j) / order);
    }
  }
  return nodes;
}

// Exponent pairs spanning P_r (triangle) or Q_r (square).
inline std::vector<std::array<int, 2>> monomial_exponents(ElementKind kind, int order) {
  std::vector<std::array<int, 2>> exps;
  for (int b = 0; b <= order; ++b) {
    for (int a = 0; a <= order; ++a) {
      if (kind == ElementKind::quadrilateral || a + b <= order) exps.push_back({a, b});
    }
  }
  return exps;
}

inline double ipow(double x, int n) {
  double r = 1.0;
  for (int k = 0; k < n; ++k) r *= x;
  return r;
}

struct LagrangeTable {
  std::vector<Point2> nodes;
  std::vector<std::array<int, 2>> exponents;
  Eigen::MatrixXd coefficients;  // monomial m, shape i

  [[nodiscard]] Eigen::VectorXd values(const Point2& p) const {
    Eigen::VectorXd mono(static_cast<Eigen::Index>(exponents.size()));
    for (std::size_t m = 0; m < exponents.size(); ++m) {
      mono[m] = ipow(p.x(), exponents[m][0]) * ipow(p.y(), exponents[m][1]);
    }
    return coefficients.transpose() * mono;
  }

  [[nodiscard]] Eigen::MatrixX2d gradients(const Point2& p) const {
    const auto nm = static_cast<Eigen::Index>(exponents.size());
    Eigen::MatrixX2d mono(nm, 2);
    for (Eigen::Index m = 0; m < nm; ++m) {
      const auto [a, b] = exponents[m];
      mono(m, 0) = a == 0 ? 0.0 : a * ipow(p.x(), a - 1) * ipow(p.y(), b);
      mono(m, 1) = b == 0 ? 0.0 : b * ipow(p.x(), a) * ipow(p.y(), b - 1);
    }
    return coefficients.transpose() * mono;
  }
};

inline LagrangeTable build_lagrange_table(ElementKind kind, int order) {
  LagrangeTable t;
  t.nodes = build_reference_nodes(kind, order);
  t.exponents = monomial_exponents(kind, order);
  const auto n = static_cast<Eigen::Index>(t.nodes.size());
  Eigen::MatrixXd vandermonde(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index m = 0; m < n; ++m) {
      vandermonde(i, m) = ipow(t.nodes[i].x(), t.exponents[m][0]) * ipow(t.nodes[i].y(), t.exponents[m][1]);
    }
  }
  // phi_i = sum_m C(m,i) x^m with V C = I
  t.coefficients = vandermonde.fullPivLu().inverse();
  return t;
}

inline const LagrangeTable& lagrange_table(ElementKind kind, int order) {
  check_order(order);
  static const auto tables = [] {
    std::array<std::array<LagrangeTable, kMaxOrder>, 2> all;
    for (int r = 1; r <= kMaxOrder; ++r) {
      all[0][r - 1] = build_lagrange_table(ElementKind::triangle, r);
      all[1][r - 1] = build_lagrange_table(ElementKind::quadrilateral, r);
    }
    return all;
  }();
  return tables[kind == ElementKind::triangle ? 0 : 1][order - 1];
}

}  // namespace detail

[[nodiscard]] inline const std::vector<Point2>& reference_nodes(ElementKind kind, int order) {
  return detail::lagrange_table(kind, order).nodes;
}

[[nodiscard]] inline Eigen::VectorXd shape_values(ElementKind kind, int order, const Point2& ref_pt) {
  const auto& table = detail::lagrange_table(kind, order);
  if (!in_reference_element(kind, ref_pt)) throw DomainError("shape_values: point outside reference element");
  return table.values(ref_pt);
}

/// Reference-coordinate gradients, one row per shape function.
[[nodiscard]] inline Eigen::MatrixX2d shape_gradients(ElementKind kind, int order, const Point2& ref_pt) {
  const auto& table = detail::lagrange_table(kind, order);
  if (!in_reference_element(kind, ref_pt)) throw DomainError("shape_gradients: point outside reference element");
  return table.gradients(ref_pt);
}

// ---------------------------------------------------------------------------
// Quadrature

struct QuadratureRule {
  std::vector<Point2> points;
  std::vector<double> weights;
  int degree = 0;

  [[nodiscard]] std::size_t size() const { return points.size(); }
};

/// Gauss-Legendre nodes and weights on [0,1].
[[nodiscard]] inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[n - 1 - i] = 0.5 * (1.0 + z);
    w[n - 1 - i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

namespace detail {

// Symmetric triangle rules in barycentric orbit form; weights normalized to 1.
struct Orbit {
  int multiplicity;  // 1, 3 or 6
  double weight;
  double a, b, c;
};

inline QuadratureRule expand_orbits(const std::vector<Orbit>& orbits, int degree) {
  QuadratureRule rule;
  rule.degree = degree;
  auto push = [&](double l1, double l2, double w) {
    rule.points.emplace_back(l1, l2);
    rule.weights.push_back(0.5 * w);
  };
  for (const Orbit& o : orbits) {
    if (o.multiplicity == 1) {
      push(o.a, o.b, o.weight);
    } else if (o.multiplicity == 3) {
      push(o.b, o.c, o.weight);
      push(o.a, o.b, o.weight);
      push(o.c, o.a, o.weight);
    } else {
      push(o.a, o.b, o.weight);
      push(o.b, o.a, o.weight);
      push(o.b, o.c, o.weight);
      push(o.c, o.b, o.weight);
      push(o.a, o.c, o.weight);
      push(o.c, o.a, o.weight);
    }
  }
  return rule;
}

inline QuadratureRule collapsed_triangle_rule(int degree) {
  // (u,v) in [0,1]^2 -> (u, v(1-u)), Jacobian (1-u)
  const int n = (degree + 2 + 1) / 2;
  const auto [x, w] = gauss_legendre(n);
  QuadratureRule rule;
  rule.degree = degree;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      rule.points.emplace_back(x[i], x[j] * (1.0 - x[i]));
      rule.weights.push_back(w[i] * w[j] * (1.0 - x[i]));
    }
  }
  return rule;
}

inline QuadratureRule triangle_rule(int degree) {
  switch (degree) {
    case 0:
    case 1:
      return expand_orbits({{1, 1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}}, degree);
    case 2:
      return expand_orbits({{3, 1.0 / 3.0, 2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0}}, degree);
    case 3:
    case 4:
      return expand_orbits({{3, 0.223381589678011, 0.108103018168070, 0.445948490915965, 0.445948490915965},
                            {3, 0.109951743655322, 0.816847572980459, 0.091576213509771, 0.091576213509771}},
                           degree);
    case 5:
      return expand_orbits({{1, 0.225, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0},
                            {3, 0.132394152788506, 0.059715871789770, 0.470142064105115, 0.470142064105115},
                            {3, 0.125939180544827, 0.797426985353087, 0.101286507323456, 0.101286507323456}},
                           degree);
    case 6:
      return expand_orbits({{3, 0.116786275726379, 0.501426509658179, 0.249286745170910, 0.249286745170910},
                            {3, 0.050844906370207, 0.873821971016996, 0.063089014491502, 0.063089014491502},
                            {6, 0.082851075618374, 0.053145049844817, 0.310352451033784, 0.636502499121399}},
                           degree);
    default:
      return collapsed_triangle_rule(degree);
  }
}

inline QuadratureRule square_rule(int degree) {
  const int n = std::max(1, (degree + 2) / 2);
  const auto [x, w] = gauss_legendre(n);
  QuadratureRule rule;
  rule.degree = degree;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      rule.points.emplace_back(x[i], x[j]);
      rule.weights.push_back(w[i] * w[j]);
    }
  }
  return rule;
}

}  // namespace detail

/// Rule exact for polynomials of total degree `degree` (triangle) or of
/// degree `degree` in each variable (square).
[[nodiscard]] inline const QuadratureRule& quadrature_rule(ElementKind kind, int degree) {
  if (degree < 0 || degree > kMaxQuadratureDegree) {
    throw std::invalid_argument("unsupported quadrature degree " + std::to_string(degree));
  }
  static const auto rules = [] {
    std::array<std::array<QuadratureRule, kMaxQuadratureDegree + 1>, 2> all;
    for (int d = 0; d <= kMaxQuadratureDegree; ++d) {
      all[0][d] = detail::triangle_rule(d);
      all[1][d] = detail::square_rule(d);
    }
    return all;
  }();
  return rules[kind == ElementKind::triangle ? 0 : 1][degree];
}

// ---------------------------------------------------------------------------
// Global Lagrange space

/// Scalar Lagrange space of order r over a mesh with conforming node
/// numbering. Vector- and manifold-valued maps carry one coefficient per node.
class LagrangeSpace {
 public:
  LagrangeSpace(MeshPtr mesh, int order) : mesh_(std::move(mesh)), order_(order) {
    check_order(order_);
    build();
  }

  [[nodiscard]] const Mesh& mesh() const { return *mesh_; }
  [[nodiscard]] const MeshPtr& mesh_ptr() const { return mesh_; }
  [[nodiscard]] int order() const { return order_; }
  [[nodiscard]] std::size_t num_nodes() const { return nodes_.size(); }
  [[nodiscard]] const std::vector<Point2>& nodes() const { return nodes_; }
  [[nodiscard]] const Point2& node(std::size_t i) const { return nodes_[i]; }
  [[nodiscard]] bool is_boundary(std::size_t i) const { return boundary_[i] != 0; }

  [[nodiscard]] std::vector<std::size_t> boundary_nodes() const {
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (boundary_[i]) ids.push_back(i);
    }
    return ids;
  }

  /// Global node indices of an element, in reference-node order.
  [[nodiscard]] std::span<const int> element_nodes(std::size_t element) const {
    return {element_nodes_.data() + offsets_[element], offsets_[element + 1] - offsets_[element]};
  }

  /// An (element, local index) pair owning each global node.
  [[nodiscard]] std::pair<int, int> node_owner(std::size_t node) const { return owners_[node]; }

 private:
  void build() {
    const Mesh& m = *mesh_;
    const int r = order_;

    std::map<std::pair<int, int>, int> edge_use;
    for (const Element& e : m.elements()) {
      for (int a = 0; a < e.corners(); ++a) {
        const int v0 = e.corner_ids[a];
        const int v1 = e.corner_ids[(a + 1) % e.corners()];
        ++edge_use[std::minmax(v0, v1)];
      }
    }

    std::vector<int> vertex_node(m.num_vertices(), -1);
    std::map<std::pair<int, int>, int> edge_base;
    offsets_.assign(1, 0);
    auto new_node = [&](const Point2& x, bool on_boundary, int element, int local) {
      nodes_.push_back(x);
      boundary_.push_back(on_boundary ? 1 : 0);
      owners_.emplace_back(element, local);
      return static_cast<int>(nodes_.size() - 1);
    };

    for (const Element& e : m.elements()) {
      const auto& ref_nodes = reference_nodes(e.kind, r);
      const int nc = e.corners();
      int local = 0;
      for (int a = 0; a < nc; ++a, ++local) {
        const int v = e.corner_ids[a];
        if (vertex_node[v] < 0) {
          vertex_node[v] = new_node(m.vertices()[v], false, e.id, local);
        }
        element_nodes_.push_back(vertex_node[v]);
      }
      for (int a = 0; a < nc; ++a) {
        const int v0 = e.corner_ids[a];
        const int v1 = e.corner_ids[(a + 1) % nc];
        const auto key = std::minmax(v0, v1);
        const bool on_boundary = edge_use[key] == 1;
        if (on_boundary) {
          boundary_[vertex_node[v0]] = 1;
          boundary_[vertex_node[v1]] = 1;
        }
        auto it = edge_base.find(key);
        const bool fresh = it == edge_base.end();
        if (fresh) it = edge_base.emplace(key, static_cast<int>(nodes_.size())).first;
        for (int k = 1; k < r; ++k, ++local) {
          // position counted from the smaller vertex id
          const int slot = v0 < v1 ? k - 1 : r - 1 - k;
          if (fresh) {
            // create nodes in slot order the first time the edge is visited
            if (k == 1) {
              for (int s = 0; s < r - 1; ++s) {
                const int kk = v0 < v1 ? s + 1 : r - 1 - s;
                const int loc = local + (kk - 1);
                new_node(detail::map_unchecked(m.vertices(), e, ref_nodes[loc]), on_boundary, e.id, loc);
              }
            }
          }
          element_nodes_.push_back(it->second + slot);
        }
      }
      for (; local < static_cast<int>(ref_nodes.size()); ++local) {
        element_nodes_.push_back(new_node(detail::map_unchecked(m.vertices(), e, ref_nodes[local]), false, e.id, local));
      }
      offsets_.push_back(element_nodes_.size());
    }
  }

  MeshPtr mesh_;
  int order_;
  std::vector<Point2> nodes_;
  std::vector<char> boundary_;
  std::vector<std::pair<int, int>> owners_;
  std::vector<int> element_nodes_;
  std::vector<std::size_t> offsets_;
};

using SpacePtr = std::shared_ptr<const LagrangeSpace>;

[[nodiscard]] inline SpacePtr make_lagrange_space(MeshPtr mesh, int order) {
  return std::make_shared<const LagrangeSpace>(std::move(mesh), order);
}

}  // namespace pfem

#pragma once

// Mixed triangle/quadrilateral meshes of the square (-5,5)^2 with uniform
// refinement and exact parent lineage.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pfem/errors.hpp"

namespace pfem {

using Point2 = Eigen::Vector2d;

enum class ElementKind { triangle, quadrilateral };

[[nodiscard]] constexpr int corner_count(ElementKind kind) {
  return kind == ElementKind::triangle ? 3 : 4;
}

struct Element {
  ElementKind kind = ElementKind::triangle;
  std::array<int, 4> corner_ids{-1, -1, -1, -1};
  int id = 0;

  [[nodiscard]] int corners() const { return corner_count(kind); }
};

/// Affine embedding of a child's reference element into its parent's:
/// parent_ref = origin + linear * child_ref.
struct RefinementLink {
  int parent_element = -1;
  Point2 origin = Point2::Zero();
  Eigen::Matrix2d linear = Eigen::Matrix2d::Identity();

  [[nodiscard]] Point2 apply(const Point2& child_ref) const { return origin + linear * child_ref; }
};

inline constexpr double kReferenceTolerance = 1e-12;

[[nodiscard]] inline bool in_reference_element(ElementKind kind, const Point2& p,
                                               double tol = kReferenceTolerance) {
  if (kind == ElementKind::triangle) {
    return p.x() >= -tol && p.y() >= -tol && p.x() + p.y() <= 1.0 + tol;
  }
  return p.x() >= -tol && p.y() >= -tol && p.x() <= 1.0 + tol && p.y() <= 1.0 + tol;
}

[[nodiscard]] inline const std::vector<Point2>& reference_corners(ElementKind kind) {
  static const std::vector<Point2> tri{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  static const std::vector<Point2> quad{{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
  return kind == ElementKind::triangle ? tri : quad;
}

class Mesh;

namespace detail {

inline Point2 map_unchecked(const std::vector<Point2>& v, const Element& e, const Point2& r) {
  const auto& c = e.corner_ids;
  if (e.kind == ElementKind::triangle) {
    return v[c[0]] + (v[c[1]] - v[c[0]]) * r.x() + (v[c[2]] - v[c[0]]) * r.y();
  }
  const double s = r.x();
  const double t = r.y();
  return (1 - s) * (1 - t) * v[c[0]] + s * (1 - t) * v[c[1]] + s * t * v[c[2]] + (1 - s) * t * v[c[3]];
}

inline Eigen::Matrix2d jacobian_unchecked(const std::vector<Point2>& v, const Element& e,
                                          const Point2& r) {
  const auto& c = e.corner_ids;
  Eigen::Matrix2d jac;
  if (e.kind == ElementKind::triangle) {
    jac.col(0) = v[c[1]] - v[c[0]];
    jac.col(1) = v[c[2]] - v[c[0]];
    return jac;
  }
  const double s = r.x();
  const double t = r.y();
  jac.col(0) = (1 - t) * (v[c[1]] - v[c[0]]) + t * (v[c[2]] - v[c[3]]);
  jac.col(1) = (1 - s) * (v[c[3]] - v[c[0]]) + s * (v[c[2]] - v[c[1]]);
  return jac;
}

}  // namespace detail

/// Immutable 2D mesh. Refined meshes keep a reference to their parent together
/// with the reference-coordinate embedding of every child element.
class Mesh {
 public:
  Mesh(std::vector<Point2> vertices, std::vector<Element> elements)
      : vertices_(std::move(vertices)), elements_(std::move(elements)) {
    validate();
  }

  Mesh(std::vector<Point2> vertices, std::vector<Element> elements,
       std::shared_ptr<const Mesh> parent, std::vector<RefinementLink> links)
      : vertices_(std::move(vertices)),
        elements_(std::move(elements)),
        level_(parent->level() + 1),
        parent_(std::move(parent)),
        links_(std::move(links)) {
    validate();
    if (links_.size() != elements_.size()) {
      throw std::invalid_argument("Mesh: one refinement link per element required");
    }
  }

  [[nodiscard]] const std::vector<Point2>& vertices() const { return vertices_; }
  [[nodiscard]] const std::vector<Element>& elements() const { return elements_; }
  [[nodiscard]] std::size_t num_vertices() const { return vertices_.size(); }
  [[nodiscard]] std::size_t num_elements() const { return elements_.size(); }
  [[nodiscard]] int level() const { return level_; }
  [[nodiscard]] const std::shared_ptr<const Mesh>& parent() const { return parent_; }
  [[nodiscard]] const RefinementLink& link(std::size_t element) const { return links_.at(element); }

  /// Largest corner-to-corner distance of an element.
  [[nodiscard]] double diameter(std::size_t element) const {
    const Element& e = elements_[element];
    double h = 0.0;
    for (int a = 0; a < e.corners(); ++a) {
      for (int b = a + 1; b < e.corners(); ++b) {
        h = std::max(h, (vertices_[e.corner_ids[a]] - vertices_[e.corner_ids[b]]).norm());
      }
    }
    return h;
  }

 private:
  void validate() const {
    const int nv = static_cast<int>(vertices_.size());
    for (const Element& e : elements_) {
      for (int a = 0; a < e.corners(); ++a) {
        const int id = e.corner_ids[a];
        if (id < 0 || id >= nv) throw std::invalid_argument("Mesh: corner index out of range");
        for (int b = 0; b < a; ++b) {
          if (e.corner_ids[b] == id) throw std::invalid_argument("Mesh: repeated corner index");
        }
      }
    }
  }

  std::vector<Point2> vertices_;
  std::vector<Element> elements_;
  int level_ = 0;
  std::shared_ptr<const Mesh> parent_;
  std::vector<RefinementLink> links_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// World coordinates of a reference point. Affine on triangles, bilinear on
/// quadrilaterals.
[[nodiscard]] inline Point2 geometry_map(const Mesh& mesh, const Element& element,
                                         const Point2& ref_pt) {
  if (!in_reference_element(element.kind, ref_pt)) {
    throw DomainError("geometry_map: point outside reference element");
  }
  return detail::map_unchecked(mesh.vertices(), element, ref_pt);
}

/// Columns are the derivatives of geometry_map with respect to the two
/// reference coordinates.
[[nodiscard]] inline Eigen::Matrix2d jacobian(const Mesh& mesh, const Element& element,
                                              const Point2& ref_pt) {
  if (!in_reference_element(element.kind, ref_pt)) {
    throw DomainError("jacobian: point outside reference element");
  }
  return detail::jacobian_unchecked(mesh.vertices(), element, ref_pt);
}

/// The coarse grid: a 4x4 block layout of (-5,5)^2 with quadrilaterals on
/// cells with even i+j and diagonal-split triangle pairs on odd cells.
/// Interior vertices are shifted by (+0.3,-0.3)*(-1)^(i+j).
[[nodiscard]] inline MeshPtr build_coarse_grid() {
  constexpr int n = 4;
  constexpr double lo = -5.0;
  constexpr double step = 2.5;
  constexpr double shift = 0.3;
  std::vector<Point2> vertices;
  vertices.reserve((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      Point2 p(lo + step * i, lo + step * j);
      if (i > 0 && i < n && j > 0 && j < n) {
        const double sign = (i + j) % 2 == 0 ? 1.0 : -1.0;
        p += sign * Point2(shift, -shift);
      }
      vertices.push_back(p);
    }
  }
  auto vid = [](int i, int j) { return j * (n + 1) + i; };
  std::vector<Element> elements;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int ll = vid(i, j);
      const int lr = vid(i + 1, j);
      const int ur = vid(i + 1, j + 1);
      const int ul = vid(i, j + 1);
      if ((i + j) % 2 == 0) {
        elements.push_back({ElementKind::quadrilateral, {ll, lr, ur, ul}, 0});
      } else {
        elements.push_back({ElementKind::triangle, {ll, lr, ur, -1}, 0});
        elements.push_back({ElementKind::triangle, {ll, ur, ul, -1}, 0});
      }
    }
  }
  for (std::size_t k = 0; k < elements.size(); ++k) elements[k].id = static_cast<int>(k);
  return std::make_shared<const Mesh>(std::move(vertices), std::move(elements));
}

/// Uniform red refinement: every element is split into four children of the
/// same kind. New edge vertices are shared between neighbours.
[[nodiscard]] inline MeshPtr refine_uniform(const MeshPtr& coarse) {
  const auto& cv = coarse->vertices();
  std::vector<Point2> vertices = cv;
  std::map<std::pair<int, int>, int> edge_mid;
  auto midpoint = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = edge_mid.find(key);
    if (it != edge_mid.end()) return it->second;
    const int id = static_cast<int>(vertices.size());
    vertices.push_back(0.5 * (cv[a] + cv[b]));
    edge_mid.emplace(key, id);
    return id;
  };

  std::vector<Element> elements;
  std::vector<RefinementLink> links;
  elements.reserve(4 * coarse->num_elements());
  links.reserve(4 * coarse->num_elements());
  auto add = [&](ElementKind kind, std::array<int, 4> corners, int parent, Point2 origin,
                 Eigen::Matrix2d linear) {
    elements.push_back({kind, corners, static_cast<int>(elements.size())});
    links.push_back({parent, origin, linear});
  };

  for (const Element& e : coarse->elements()) {
    const auto& c = e.corner_ids;
    const Eigen::Matrix2d half = 0.5 * Eigen::Matrix2d::Identity();
    if (e.kind == ElementKind::triangle) {
      const int m01 = midpoint(c[0], c[1]);
      const int m12 = midpoint(c[1], c[2]);
      const int m20 = midpoint(c[2], c[0]);
      add(ElementKind::triangle, {c[0], m01, m20, -1}, e.id, {0.0, 0.0}, half);
      add(ElementKind::triangle, {m01, c[1], m12, -1}, e.id, {0.5, 0.0}, half);
      add(ElementKind::triangle, {m20, m12, c[2], -1}, e.id, {0.0, 0.5}, half);
      // middle child is rotated by 180 degrees
      add(ElementKind::triangle, {m12, m20, m01, -1}, e.id, {0.5, 0.5}, -half);
    } else {
      const int m01 = midpoint(c[0], c[1]);
      const int m12 = midpoint(c[1], c[2]);
      const int m23 = midpoint(c[2], c[3]);
      const int m30 = midpoint(c[3], c[0]);
      const int center = static_cast<int>(vertices.size());
      vertices.push_back(detail::map_unchecked(cv, e, Point2(0.5, 0.5)));
      add(ElementKind::quadrilateral, {c[0], m01, center, m30}, e.id, {0.0, 0.0}, half);
      add(ElementKind::quadrilateral, {m01, c[1], m12, center}, e.id, {0.5, 0.0}, half);
      add(ElementKind::quadrilateral, {center, m12, c[2], m23}, e.id, {0.5, 0.5}, half);
      add(ElementKind::quadrilateral, {m30, center, m23, c[3]}, e.id, {0.0, 0.5}, half);
    }
  }
  return std::make_shared<const Mesh>(std::move(vertices), std::move(elements), coarse,
                                      std::move(links));
}

/// Coarse grid followed by `levels` uniform refinements; entry k has level k.
[[nodiscard]] inline std::vector<MeshPtr> build_hierarchy(int levels) {
  std::vector<MeshPtr> meshes{build_coarse_grid()};
  for (int k = 0; k < levels; ++k) meshes.push_back(refine_uniform(meshes.back()));
  return meshes;
}

struct AncestorPoint {
  int element = -1;
  Point2 ref = Point2::Zero();
};

/// Follows the refinement lineage from (element, ref_pt) on `fine` up to
/// `ancestor`. Throws LineageError if `ancestor` is not an ancestor of (or
/// identical to) `fine`.
[[nodiscard]] inline AncestorPoint locate_in_ancestor(const Mesh& fine, int element,
                                                      const Point2& ref_pt,
                                                      const Mesh& ancestor) {
  const Mesh* current = &fine;
  AncestorPoint p{element, ref_pt};
  while (current != &ancestor) {
    if (!current->parent()) throw LineageError("meshes are not in one refinement lineage");
    const RefinementLink& link = current->link(static_cast<std::size_t>(p.element));
    p.ref = link.apply(p.ref);
    p.element = link.parent_element;
    current = current->parent().get();
  }
  return p;
}

[[nodiscard]] inline bool is_descendant(const Mesh& fine, const Mesh& ancestor) {
  for (const Mesh* m = &fine; m != nullptr; m = m->parent().get()) {
    if (m == &ancestor) return true;
  }
  return false;
}

/// Plain-text dump: `v x y` per vertex, then `t i j k` or `q i j k l` per
/// element (zero-based vertex indices).
inline void write_mesh(std::ostream& out, const Mesh& mesh) {
  const auto old_precision = out.precision(17);
  for (const Point2& v : mesh.vertices()) out << "v " << v.x() << ' ' << v.y() << '\n';
  for (const Element& e : mesh.elements()) {
    out << (e.kind == ElementKind::triangle ? 't' : 'q');
    for (int a = 0; a < e.corners(); ++a) out << ' ' << e.corner_ids[a];
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace pfem

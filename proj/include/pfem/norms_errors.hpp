#pragma once

// Broken L2 norms and H1 seminorms of discretization errors, experimental
// orders of convergence, and the CSV form of convergence tables.

#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pfem/interpolation.hpp"

namespace pfem {

inline constexpr int kDefaultQuadratureDegree = 6;

/// Errors at or below this value are treated as exact reproduction and
/// excluded from EOC fits.
inline constexpr double kErrorFloor = 1e-12;

template <EmbeddedManifold M>
using ReferenceValue = std::function<typename M::Ambient(const Point2&)>;
template <EmbeddedManifold M>
using ReferenceGradient = std::function<WorldGradient<M>(const Point2&)>;

template <EmbeddedManifold M>
[[nodiscard]] double l2_error(const DiscreteMap<M>& u, const ReferenceValue<M>& ref, const QuadratureTable& table) {
  double sum = 0.0;
  for (std::size_t e = 0; e < u.space().mesh().num_elements(); ++e) {
    detail::for_each_point(u, table, e, false, [&](std::size_t qp, const detail::PointEvaluation<M>& pe) {
      sum += table.weight(qp) * (pe.value - ref(table.world_point(qp))).squaredNorm();
    });
  }
  return std::sqrt(sum);
}

template <EmbeddedManifold M>
[[nodiscard]] double l2_error(const DiscreteMap<M>& u, const ReferenceValue<M>& ref,
                              int quad_degree = kDefaultQuadratureDegree) {
  return l2_error(u, ref, QuadratureTable(u.space_ptr(), quad_degree));
}

template <EmbeddedManifold M>
[[nodiscard]] double h1_semi_error(const DiscreteMap<M>& u, const ReferenceGradient<M>& ref_grad,
                                   const QuadratureTable& table) {
  double sum = 0.0;
  for (std::size_t e = 0; e < u.space().mesh().num_elements(); ++e) {
    detail::for_each_point(u, table, e, true, [&](std::size_t qp, const detail::PointEvaluation<M>& pe) {
      sum += table.weight(qp) * (pe.gradient - ref_grad(table.world_point(qp))).squaredNorm();
    });
  }
  return std::sqrt(sum);
}

template <EmbeddedManifold M>
[[nodiscard]] double h1_semi_error(const DiscreteMap<M>& u, const ReferenceGradient<M>& ref_grad,
                                   int quad_degree = kDefaultQuadratureDegree) {
  return h1_semi_error(u, ref_grad, QuadratureTable(u.space_ptr(), quad_degree));
}

struct ErrorPair {
  double l2 = 0.0;
  double h1_semi = 0.0;
};

/// Error of a coarse map measured against a map on a refined mesh of the
/// same lineage. Quadrature runs over the fine mesh; the coarse map is
/// evaluated at the ancestor element through the refinement embedding.
template <EmbeddedManifold M>
[[nodiscard]] ErrorPair error_vs_fine(const DiscreteMap<M>& coarse, const DiscreteMap<M>& fine,
                                      int quad_degree = kDefaultQuadratureDegree) {
  const Mesh& cm = coarse.space().mesh();
  const Mesh& fm = fine.space().mesh();
  if (!is_descendant(fm, cm)) throw LineageError("error_vs_fine: fine mesh does not descend from coarse mesh");
  const QuadratureTable table(fine.space_ptr(), quad_degree);
  double l2 = 0.0;
  double h1 = 0.0;
  for (std::size_t e = 0; e < fm.num_elements(); ++e) {
    const auto& ref = table.reference(fm.elements()[e].kind);
    detail::for_each_point(fine, table, e, true, [&](std::size_t qp, const detail::PointEvaluation<M>& pe) {
      const AncestorPoint a = locate_in_ancestor(fm, static_cast<int>(e), ref.points[qp - table.begin(e)], cm);
      const auto value = evaluate(coarse, static_cast<std::size_t>(a.element), a.ref);
      const auto grad = evaluate_gradient(coarse, static_cast<std::size_t>(a.element), a.ref);
      l2 += table.weight(qp) * (pe.value - value).squaredNorm();
      h1 += table.weight(qp) * (pe.gradient - grad).squaredNorm();
    });
  }
  return {std::sqrt(l2), std::sqrt(h1)};
}

/// eoc_k = log(e_k / e_{k+1}) / log(h_k / h_{k+1}).
[[nodiscard]] inline std::vector<double> eoc(const std::vector<double>& errors, const std::vector<double>& hs) {
  if (errors.size() != hs.size() || errors.size() < 2) {
    throw std::invalid_argument("eoc: need two or more (error, h) pairs of equal length");
  }
  for (std::size_t k = 0; k < errors.size(); ++k) {
    if (!(errors[k] > 0.0) || !(hs[k] > 0.0)) throw std::invalid_argument("eoc: errors and mesh sizes must be positive");
  }
  std::vector<double> rates;
  for (std::size_t k = 0; k + 1 < errors.size(); ++k) {
    rates.push_back(std::log(errors[k] / errors[k + 1]) / std::log(hs[k] / hs[k + 1]));
  }
  return rates;
}

// ---------------------------------------------------------------------------

struct ErrorRecord {
  int level = 0;
  double h = 1.0;  // normalized mesh size 2^-level
  double l2_error = 0.0;
  double h1_semi_error = 0.0;
  double wall_time_energy = std::numeric_limits<double>::quiet_NaN();  // seconds
};

/// One (scheme, order) convergence study. EOC entries that involve a floored
/// error are NaN. Levels that could not be computed are listed separately.
struct ConvergenceTable {
  int order = 1;
  Scheme scheme = Scheme::projection;
  std::vector<ErrorRecord> records;
  std::vector<double> eoc_l2;
  std::vector<double> eoc_h1;
  std::vector<std::pair<int, std::string>> failed_levels;

  /// Recomputes both EOC lists from the records.
  void update_eoc() {
    eoc_l2.clear();
    eoc_h1.clear();
    auto rate = [](double e0, double e1, double h0, double h1) {
      if (e0 <= kErrorFloor || e1 <= kErrorFloor) return std::numeric_limits<double>::quiet_NaN();
      return eoc({e0, e1}, {h0, h1}).front();
    };
    for (std::size_t k = 0; k + 1 < records.size(); ++k) {
      const ErrorRecord& a = records[k];
      const ErrorRecord& b = records[k + 1];
      eoc_l2.push_back(rate(a.l2_error, b.l2_error, a.h, b.h));
      eoc_h1.push_back(rate(a.h1_semi_error, b.h1_semi_error, a.h, b.h));
    }
  }
};

inline constexpr const char* kCsvHeader = "scheme,order,level,h,l2,h1semi,eoc_l2,eoc_h1,wall_time";

namespace detail {

inline std::string format_number(double v) {
  if (std::isnan(v)) return {};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_number(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

}  // namespace detail

/// Writes the header followed by one row per record. The EOC columns of a
/// row hold the rate from the previous record of the same table.
inline void write_csv(std::ostream& out, const std::vector<ConvergenceTable>& tables) {
  out << kCsvHeader << '\n';
  for (const ConvergenceTable& t : tables) {
    for (std::size_t k = 0; k < t.records.size(); ++k) {
      const ErrorRecord& r = t.records[k];
      const double el2 = k > 0 && k - 1 < t.eoc_l2.size() ? t.eoc_l2[k - 1] : std::numeric_limits<double>::quiet_NaN();
      const double eh1 = k > 0 && k - 1 < t.eoc_h1.size() ? t.eoc_h1[k - 1] : std::numeric_limits<double>::quiet_NaN();
      out << to_string(t.scheme) << ',' << t.order << ',' << r.level << ',' << detail::format_number(r.h) << ','
          << detail::format_number(r.l2_error) << ',' << detail::format_number(r.h1_semi_error) << ','
          << detail::format_number(el2) << ',' << detail::format_number(eh1) << ','
          << detail::format_number(r.wall_time_energy) << '\n';
    }
  }
}

/// Parses write_csv output; consecutive rows with equal (scheme, order) form
/// one table.
[[nodiscard]] inline std::vector<ConvergenceTable> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw std::invalid_argument("read_csv: missing header");
  std::vector<ConvergenceTable> tables;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 9) throw std::invalid_argument("read_csv: expected 9 columns in '" + line + "'");
    const Scheme scheme = parse_scheme(cells[0]);
    const int order = std::stoi(cells[1]);
    if (tables.empty() || tables.back().scheme != scheme || tables.back().order != order) {
      tables.push_back(ConvergenceTable{order, scheme, {}, {}, {}, {}});
    }
    ConvergenceTable& t = tables.back();
    ErrorRecord r;
    r.level = std::stoi(cells[2]);
    r.h = detail::parse_number(cells[3]);
    r.l2_error = detail::parse_number(cells[4]);
    r.h1_semi_error = detail::parse_number(cells[5]);
    r.wall_time_energy = detail::parse_number(cells[8]);
    if (!t.records.empty()) {
      t.eoc_l2.push_back(detail::parse_number(cells[6]));
      t.eoc_h1.push_back(detail::parse_number(cells[7]));
    }
    t.records.push_back(r);
  }
  return tables;
}

}  // namespace pfem

#pragma once

// h-convergence studies: interpolation and harmonic-map discretization errors
// for the sphere- and SO(3)-valued test maps.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pfem/harmonic_energy.hpp"
#include "pfem/norms_errors.hpp"
#include "pfem/riemannian_solver.hpp"
#include "pfem/test_maps.hpp"

namespace pfem {

enum class StudyKind { interpolation, harmonic };
enum class ManifoldKind { sphere, so3 };

inline constexpr int kMaxStudyLevel = 6;

[[nodiscard]] inline std::string_view to_string(StudyKind s) {
  return s == StudyKind::interpolation ? "interp" : "harmonic";
}
[[nodiscard]] inline std::string_view to_string(ManifoldKind m) { return m == ManifoldKind::sphere ? "sphere" : "so3"; }

[[nodiscard]] inline StudyKind parse_study(std::string_view s) {
  if (s == "interp" || s == "interpolation") return StudyKind::interpolation;
  if (s == "harmonic") return StudyKind::harmonic;
  throw ConfigError("unknown study '" + std::string(s) + "'");
}

[[nodiscard]] inline ManifoldKind parse_manifold(std::string_view s) {
  if (s == "sphere") return ManifoldKind::sphere;
  if (s == "so3") return ManifoldKind::so3;
  throw ConfigError("unknown manifold '" + std::string(s) + "'");
}

/// Parses a comma-separated order list such as "1,2,3".
[[nodiscard]] inline std::vector<int> parse_orders(std::string_view s) {
  std::vector<int> orders;
  std::stringstream ss{std::string(s)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char ch) { return std::isspace(ch); }), item.end());
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      orders.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad order '" + item + "'");
    }
  }
  return orders;
}

struct StudyConfig {
  StudyKind study = StudyKind::interpolation;
  ManifoldKind manifold = ManifoldKind::sphere;
  Scheme scheme = Scheme::projection;
  std::vector<int> orders{1, 2, 3};
  std::optional<int> max_level;  // unset: study default
  int quad_degree = kDefaultQuadratureDegree;
  std::optional<std::string> out;
  bool verbose = false;

  /// 6 for interpolation; 4 (sphere) or 3 (SO(3)) for harmonic maps.
  [[nodiscard]] int effective_max_level() const {
    if (max_level) return *max_level;
    if (study == StudyKind::interpolation) return kMaxStudyLevel;
    return manifold == ManifoldKind::sphere ? 4 : 3;
  }

  void validate() const {
    if (orders.empty()) throw ConfigError("at least one order is required");
    for (int r : orders) {
      if (r < 1 || r > kMaxOrder) throw ConfigError("order " + std::to_string(r) + " not in {1,2,3}");
    }
    const int levels = effective_max_level();
    if (levels < 0 || levels > kMaxStudyLevel) {
      throw ConfigError("levels must lie in [0, " + std::to_string(kMaxStudyLevel) + "], got " + std::to_string(levels));
    }
    if (quad_degree < 1 || quad_degree > kMaxQuadratureDegree) {
      throw ConfigError("quad_degree must lie in [1, " + std::to_string(kMaxQuadratureDegree) + "]");
    }
    if (study == StudyKind::harmonic && scheme == Scheme::geodesic) {
      throw ConfigError("harmonic studies support the projection scheme only");
    }
  }
};

namespace detail {

inline std::string trim(std::string s) {
  auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

inline bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("bad boolean '" + v + "'");
}

}  // namespace detail

/// Applies one `key = value` entry. Keys: study, manifold, scheme, orders,
/// levels, quad_degree, out, verbose.
inline void apply_config_entry(StudyConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "study") {
    cfg.study = parse_study(value);
  } else if (key == "manifold") {
    cfg.manifold = parse_manifold(value);
  } else if (key == "scheme") {
    cfg.scheme = parse_scheme(value);
  } else if (key == "orders") {
    cfg.orders = parse_orders(value);
  } else if (key == "levels" || key == "max_level") {
    try {
      cfg.max_level = std::stoi(value);
    } catch (const std::exception&) {
      throw ConfigError("bad level count '" + value + "'");
    }
  } else if (key == "quad_degree" || key == "quad-degree") {
    try {
      cfg.quad_degree = std::stoi(value);
    } catch (const std::exception&) {
      throw ConfigError("bad quadrature degree '" + value + "'");
    }
  } else if (key == "out") {
    cfg.out = value;
  } else if (key == "verbose") {
    cfg.verbose = detail::parse_bool(value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

/// Flat `key = value` text, one entry per line; `#` starts a comment.
inline void read_config(std::istream& in, StudyConfig& cfg) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    apply_config_entry(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
}

struct SolveSummary {
  int order = 0;
  int level = 0;
  int iterations = 0;
  bool converged = false;
  bool monotone = true;
  double gradient_max_norm = 0.0;
  double final_energy = 0.0;
};

struct StudyReport {
  std::vector<ConvergenceTable> tables;
  std::vector<SolveSummary> solves;
};

namespace detail {

inline double normalized_h(int level) { return std::ldexp(1.0, -level); }

inline void log_line(const StudyConfig& cfg, const std::string& msg) {
  if (cfg.verbose) std::fprintf(stderr, "%s\n", msg.c_str());
}

template <EmbeddedManifold M>
SolveSummary summarize(const SolveResult<M>& r, int order, int level) {
  SolveSummary s;
  s.order = order;
  s.level = level;
  s.iterations = r.iterations;
  s.converged = r.converged;
  s.gradient_max_norm = r.gradient_max_norm;
  s.final_energy = r.energy_history.back();
  for (std::size_t k = 1; k < r.energy_history.size(); ++k) {
    if (r.energy_history[k] > r.energy_history[k - 1]) s.monotone = false;
  }
  return s;
}

/// Quadrature degree for error norms: the configured degree, raised to 2r+2
/// where order r needs it.
inline int error_quad_degree(const StudyConfig& cfg, int order) {
  return std::min(std::max(cfg.quad_degree, 2 * order + 2), kMaxQuadratureDegree);
}

template <EmbeddedManifold M>
StudyReport interpolation_study(const StudyConfig& cfg) {
  const TestMap<M> map = catalog_map<M>();
  const int levels = cfg.effective_max_level();
  const auto meshes = build_hierarchy(levels);
  StudyReport report;
  for (int order : cfg.orders) {
    ConvergenceTable table{order, cfg.scheme, {}, {}, {}, {}};
    for (int level = 0; level <= levels; ++level) {
      try {
        const SpacePtr space = make_lagrange_space(meshes[level], order);
        const QuadratureTable quad(space, error_quad_degree(cfg, order));
        const DiscreteMap<M> u = nodal_sample<M>(map.value, space, cfg.scheme);
        ErrorRecord rec;
        rec.level = level;
        rec.h = normalized_h(level);
        rec.l2_error = l2_error(u, map.value, quad);
        rec.h1_semi_error = h1_semi_error(u, map.gradient, quad);
        rec.wall_time_energy = energy(u, quad).wall_time;
        table.records.push_back(rec);
        log_line(cfg, std::string(M::name) + " " + std::string(to_string(cfg.scheme)) + " r=" +
                          std::to_string(order) + " level " + std::to_string(level) + ": l2 " +
                          format_number(rec.l2_error) + " h1 " + format_number(rec.h1_semi_error));
      } catch (const MeanNotConverged& ex) {
        table.failed_levels.emplace_back(level, ex.what());
      } catch (const OutsideProjectionDomain& ex) {
        table.failed_levels.emplace_back(level, ex.what());
      }
    }
    table.update_eoc();
    report.tables.push_back(std::move(table));
  }
  return report;
}

inline SolveConfig solve_config(const StudyConfig& cfg) {
  SolveConfig sc;
  sc.quad_degree = cfg.quad_degree;
  sc.verbose = cfg.verbose;
  return sc;
}

inline StudyReport harmonic_study_sphere(const StudyConfig& cfg) {
  const TestMap<Sphere> map = catalog_map<Sphere>();
  const int levels = cfg.effective_max_level();
  const auto meshes = build_hierarchy(levels);
  StudyReport report;
  for (int order : cfg.orders) {
    ConvergenceTable table{order, Scheme::projection, {}, {}, {}, {}};
    for (int level = 0; level <= levels; ++level) {
      const SpacePtr space = make_lagrange_space(meshes[level], order);
      const QuadratureTable quad(space, error_quad_degree(cfg, order));
      const auto initial = nodal_sample<Sphere>(map.value, space);
      const auto result = minimize(initial, space->boundary_nodes(), solve_config(cfg));
      report.solves.push_back(summarize(result, order, level));
      if (!result.converged) {
        table.failed_levels.emplace_back(level, "solver did not converge");
        continue;
      }
      ErrorRecord rec;
      rec.level = level;
      rec.h = normalized_h(level);
      rec.l2_error = l2_error(result.solution, map.value, quad);
      rec.h1_semi_error = h1_semi_error(result.solution, map.gradient, quad);
      rec.wall_time_energy = energy(result.solution, quad).wall_time;
      table.records.push_back(rec);
      log_line(cfg, "sphere harmonic r=" + std::to_string(order) + " level " + std::to_string(level) + ": " +
                        std::to_string(result.iterations) + " iterations, l2 " + format_number(rec.l2_error) +
                        " h1 " + format_number(rec.h1_semi_error));
    }
    table.update_eoc();
    report.tables.push_back(std::move(table));
  }
  return report;
}

/// SO(3) harmonic maps have no closed-form solution; errors are measured
/// against a solve on one further refinement, warm-started by prolongation.
inline StudyReport harmonic_study_so3(const StudyConfig& cfg) {
  const TestMap<SO3> map = catalog_map<SO3>();
  const int levels = cfg.effective_max_level();
  const auto meshes = build_hierarchy(levels + 1);
  StudyReport report;
  for (int order : cfg.orders) {
    ConvergenceTable table{order, Scheme::projection, {}, {}, {}, {}};
    std::vector<std::optional<DiscreteMap<SO3>>> solutions;
    for (int level = 0; level <= levels; ++level) {
      const SpacePtr space = make_lagrange_space(meshes[level], order);
      const auto initial = nodal_sample<SO3>(map.value, space);
      const auto result = minimize(initial, space->boundary_nodes(), solve_config(cfg));
      report.solves.push_back(summarize(result, order, level));
      log_line(cfg, "so3 harmonic r=" + std::to_string(order) + " level " + std::to_string(level) + ": " +
                        std::to_string(result.iterations) + " iterations");
      if (result.converged) {
        solutions.emplace_back(result.solution);
      } else {
        solutions.emplace_back(std::nullopt);
        table.failed_levels.emplace_back(level, "solver did not converge");
      }
      if (level == levels) {
        // reference solve
        const SpacePtr fine_space = make_lagrange_space(meshes[levels + 1], order);
        auto start = prolong(result.solution, fine_space).coefficients();
        for (std::size_t i : fine_space->boundary_nodes()) start[i] = map.value(fine_space->node(i));
        const DiscreteMap<SO3> warm(fine_space, Scheme::projection, std::move(start));
        const auto reference = minimize(warm, fine_space->boundary_nodes(), solve_config(cfg));
        report.solves.push_back(summarize(reference, order, levels + 1));
        log_line(cfg, "so3 harmonic r=" + std::to_string(order) + " reference level " + std::to_string(levels + 1) +
                          ": " + std::to_string(reference.iterations) + " iterations");
        if (!reference.converged) {
          for (int k = 0; k <= levels; ++k) {
            if (solutions[k]) table.failed_levels.emplace_back(k, "reference solve did not converge");
          }
          break;
        }
        for (int k = 0; k <= levels; ++k) {
          if (!solutions[k]) continue;
          const ErrorPair err = error_vs_fine(*solutions[k], reference.solution, error_quad_degree(cfg, order));
          ErrorRecord rec;
          rec.level = k;
          rec.h = normalized_h(k);
          rec.l2_error = err.l2;
          rec.h1_semi_error = err.h1_semi;
          rec.wall_time_energy = energy(*solutions[k], cfg.quad_degree).wall_time;
          table.records.push_back(rec);
        }
      }
    }
    std::sort(table.failed_levels.begin(), table.failed_levels.end());
    table.update_eoc();
    report.tables.push_back(std::move(table));
  }
  return report;
}

}  // namespace detail

[[nodiscard]] inline StudyReport run_interpolation_study(const StudyConfig& cfg) {
  cfg.validate();
  if (cfg.study != StudyKind::interpolation) throw ConfigError("run_interpolation_study: study must be interp");
  return cfg.manifold == ManifoldKind::sphere ? detail::interpolation_study<Sphere>(cfg)
                                              : detail::interpolation_study<SO3>(cfg);
}

[[nodiscard]] inline StudyReport run_harmonic_study(const StudyConfig& cfg) {
  cfg.validate();
  if (cfg.study != StudyKind::harmonic) throw ConfigError("run_harmonic_study: study must be harmonic");
  return cfg.manifold == ManifoldKind::sphere ? detail::harmonic_study_sphere(cfg) : detail::harmonic_study_so3(cfg);
}

[[nodiscard]] inline StudyReport run_study(const StudyConfig& cfg) {
  return cfg.study == StudyKind::interpolation ? run_interpolation_study(cfg) : run_harmonic_study(cfg);
}

}  // namespace pfem

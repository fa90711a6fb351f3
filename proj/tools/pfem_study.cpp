// Command-line runner for the convergence studies.
//
//   pfem_study interp   --manifold sphere --scheme projection --orders 1,2,3 --levels 5 --out t.csv
//   pfem_study harmonic --manifold so3 --orders 1 --levels 3
//   pfem_study --config study.cfg
//
// Exit codes: 0 success, 1 invalid arguments or configuration, 2 study failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pfem/study.hpp"

namespace {

struct Flags {
  std::string config;
  std::string manifold;
  std::string scheme;
  std::string orders;
  int levels = -1;
  int quad_degree = -1;
  std::string out;
  bool verbose = false;
};

void add_study_options(CLI::App& app, Flags& f) {
  app.add_option("--config", f.config, "Flat key = value configuration file");
  app.add_option("--manifold", f.manifold, "sphere | so3");
  app.add_option("--scheme", f.scheme, "projection | geodesic");
  app.add_option("--orders", f.orders, "Comma-separated Lagrange orders, e.g. 1,2,3");
  app.add_option("--levels", f.levels, "Finest refinement level (at most 6)");
  app.add_option("--quad-degree", f.quad_degree, "Quadrature degree (default 6)");
  app.add_option("--out", f.out, "CSV output path (default: standard output)");
  app.add_flag("--verbose", f.verbose, "Progress and solver log on standard error");
}

pfem::StudyConfig build_config(const Flags& f, std::optional<pfem::StudyKind> study) {
  pfem::StudyConfig cfg;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw pfem::ConfigError("cannot open config file '" + f.config + "'");
    pfem::read_config(in, cfg);
  }
  if (study) cfg.study = *study;
  if (!f.manifold.empty()) cfg.manifold = pfem::parse_manifold(f.manifold);
  if (!f.scheme.empty()) cfg.scheme = pfem::parse_scheme(f.scheme);
  if (!f.orders.empty()) cfg.orders = pfem::parse_orders(f.orders);
  if (f.levels >= 0) cfg.max_level = f.levels;
  if (f.levels < -1) cfg.max_level = f.levels;
  if (f.quad_degree != -1) cfg.quad_degree = f.quad_degree;
  if (!f.out.empty()) cfg.out = f.out;
  if (f.verbose) cfg.verbose = true;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convergence studies for projection-based and geodesic finite elements"};
  app.require_subcommand(0, 1);
  Flags top;
  Flags interp_flags;
  Flags harmonic_flags;
  app.add_option("--config", top.config, "Flat key = value configuration file");
  CLI::App* interp = app.add_subcommand("interp", "Interpolation error study");
  CLI::App* harmonic = app.add_subcommand("harmonic", "Harmonic-map discretization error study");
  add_study_options(*interp, interp_flags);
  add_study_options(*harmonic, harmonic_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  pfem::StudyConfig cfg;
  try {
    if (interp->parsed()) {
      if (interp_flags.config.empty()) interp_flags.config = top.config;
      cfg = build_config(interp_flags, pfem::StudyKind::interpolation);
    } else if (harmonic->parsed()) {
      if (harmonic_flags.config.empty()) harmonic_flags.config = top.config;
      cfg = build_config(harmonic_flags, pfem::StudyKind::harmonic);
    } else if (!top.config.empty()) {
      cfg = build_config(top, std::nullopt);
    } else {
      std::cerr << app.help();
      return 1;
    }
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  pfem::StudyReport report;
  try {
    report = pfem::run_study(cfg);
  } catch (const std::exception& e) {
    std::cerr << "study failed: " << e.what() << '\n';
    return 2;
  }

  for (const auto& t : report.tables) {
    for (const auto& [level, reason] : t.failed_levels) {
      std::cerr << "note: order " << t.order << " level " << level << " absent: " << reason << '\n';
    }
  }
  if (cfg.out) {
    std::ofstream out(*cfg.out);
    if (!out) {
      std::cerr << "error: cannot write '" << *cfg.out << "'\n";
      return 2;
    }
    pfem::write_csv(out, report.tables);
  } else {
    pfem::write_csv(std::cout, report.tables);
  }
  return 0;
}

// Command-line front end. Exit codes: 0 success, 1 usage error, 2 spec error,
// 3 solver failure, 4 deviation or residual beyond tolerance.

#include "fracdelay/analysis.hpp"
#include "fracdelay/solver.hpp"
#include "fracdelay/special_functions.hpp"
#include "fracdelay/system_model.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

using namespace fracdelay;

enum Exit { kOk = 0, kUsage = 1, kSpec = 2, kSolver = 3, kDeviation = 4 };

struct RunConfig {
  std::string spec_path;
  std::optional<double> T;
  std::optional<double> dt;
  std::string out;
  unsigned seed = 0;
  std::optional<double> tol;
};

struct Problem {
  ProblemDocument doc;
  double T = 0.0;
  double dt = 0.0;
};

double smallest_positive_delay(const SystemSpec& s) {
  double h = 0.0;
  for (double d : s.delays) {
    if (d > 0.0 && (h == 0.0 || d < h)) h = d;
  }
  return h;
}

// Horizon and step come from the flags, then the document, then defaults that
// keep the step below the smallest positive delay.
Problem load(const RunConfig& cfg) {
  Problem p{load_spec_file(cfg.spec_path)};
  const SystemSpec& s = p.doc.spec;
  p.T = cfg.T.value_or(p.doc.horizon.value_or(std::max(1.0, 3.0 * s.max_delay())));
  const double h1 = smallest_positive_delay(grouped_spec(s));
  double dt = cfg.dt.value_or(p.doc.dt.value_or(p.T / 1000.0));
  if (!cfg.dt && !p.doc.dt && h1 > 0.0) dt = std::min(dt, h1);
  p.dt = dt;
  if (!(p.dt > 0.0) || !std::isfinite(p.dt)) throw SpecError("dt must be positive");
  if (!(p.T >= p.dt) || !std::isfinite(p.T)) throw SpecError("horizon T must be finite and at least dt");
  return p;
}

// Writes only after the payload is complete so a failed run leaves no file.
void emit(const std::string& path, const std::string& payload) {
  if (path.empty() || path == "-") {
    std::cout << payload;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file '" + path + "'");
  f << payload;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cmd_simulate(const RunConfig& cfg) {
  Problem p = load(cfg);
  Trajectory tr = solve(p.doc.spec, p.doc.init, p.doc.input, p.T, p.dt);
  const double res = verify_residual(p.doc.spec, tr, p.doc.input);
  std::ostringstream csv;
  write_csv(csv, tr);
  emit(cfg.out, csv.str());
  std::cerr << "method " << tr.meta.method << "\n"
            << "dt " << fmt(p.dt) << "\n"
            << "error_estimate " << fmt(tr.meta.error_estimate) << "\n"
            << "residual " << fmt(res) << "\n";
  return kOk;
}

int cmd_verify(const RunConfig& cfg) {
  Problem p = load(cfg);
  Trajectory tr = solve(p.doc.spec, p.doc.init, p.doc.input, p.T, p.dt);
  const double res = verify_residual(p.doc.spec, tr, p.doc.input);
  const double tol = cfg.tol.value_or(1e-2);
  std::cout << "residual " << fmt(res) << " tolerance " << fmt(tol) << "\n";
  return res <= tol ? kOk : kDeviation;
}

int cmd_analyze(const RunConfig& cfg) {
  Problem p = load(cfg);
  const SystemSpec& s = p.doc.spec;
  const PositivityReport pos = analyze_positivity(s, p.doc.init);
  const StabilityReport stab = stability_verdict(s);
  std::optional<AdvisoryReport> adv;
  if (s.order.alpha >= 2.0) adv = alpha_ge2_advisory(s, p.doc.init);
  emit(cfg.out, analysis_json(pos, stab, adv) + "\n");
  return kOk;
}

int cmd_cross_check(const RunConfig& cfg) {
  Problem p = load(cfg);
  const SystemSpec& s = p.doc.spec;
  const bool rl = s.deriv == DerivativeKind::RiemannLiouville;
  struct Run {
    std::string name;
    Trajectory tr;
  };
  std::vector<Run> runs;
  runs.push_back({rl ? "rl" : "caputo", rl ? solve_rl(s, p.doc.init, p.doc.input, p.T, p.dt)
                                          : solve_caputo(s, p.doc.init, p.doc.input, p.T, p.dt)});
  runs.push_back({"psi", solve_via_psi(s, p.doc.init, p.doc.input, p.T, p.dt)});
  if (s.order.alpha == 1.0) runs.push_back({"classical", solve_classical(s, p.doc.init, p.doc.input, p.T, p.dt)});

  bool ok = true;
  for (std::size_t a = 0; a < runs.size(); ++a) {
    for (std::size_t b = a + 1; b < runs.size(); ++b) {
      const double dev = max_deviation(runs[a].tr, runs[b].tr);
      const double tol =
          cfg.tol.value_or(10.0 * std::max(runs[a].tr.meta.tolerance, runs[b].tr.meta.tolerance));
      const bool pass = dev <= tol;
      ok = ok && pass;
      std::cout << runs[a].name << " vs " << runs[b].name << ": deviation " << fmt(dev) << " tolerance "
                << fmt(tol) << (pass ? " ok" : " EXCEEDED") << "\n";
    }
  }
  return ok ? kOk : kDeviation;
}

int cmd_ml_eval(double alpha, double beta, const std::vector<double>& zs) {
  const MLParams p{alpha, beta};
  p.validate();
  for (double z : zs) std::cout << fmt(z) << " " << fmt(ml_scalar(p, z)) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and analysis of linear fractional systems with point delays"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_common = [&](CLI::App* sub, bool with_out) {
    sub->add_option("--spec", cfg.spec_path, "Problem document (JSON)")->required();
    sub->add_option("--T", cfg.T, "Horizon");
    sub->add_option("--dt", cfg.dt, "Step size");
    if (with_out) sub->add_option("--out", cfg.out, "Output path ('-' or omitted: standard output)");
    sub->add_option("--seed", cfg.seed, "Seed for randomized trials")->default_val(0);
    sub->add_option("--tol", cfg.tol, "Tolerance override");
  };
  CLI::App* simulate = app.add_subcommand("simulate", "Write the trajectory as CSV and report the residual");
  add_common(simulate, true);
  CLI::App* analyze = app.add_subcommand("analyze", "Positivity and stability reports as JSON");
  add_common(analyze, true);
  CLI::App* verify = app.add_subcommand("verify", "Check the equation residual of the computed trajectory");
  add_common(verify, false);
  CLI::App* cross = app.add_subcommand("cross-check", "Compare the independent solution routes");
  add_common(cross, false);

  double alpha = 1.0;
  double beta = 1.0;
  std::vector<double> zs;
  CLI::App* ml = app.add_subcommand("ml-eval", "Evaluate E_{alpha,beta}(z)");
  ml->add_option("--alpha", alpha, "alpha > 0")->required();
  ml->add_option("--beta", beta, "beta > 0")->default_val(1.0);
  ml->add_option("--z", zs, "Argument(s)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*simulate) return cmd_simulate(cfg);
    if (*analyze) return cmd_analyze(cfg);
    if (*verify) return cmd_verify(cfg);
    if (*cross) return cmd_cross_check(cfg);
    if (*ml) return cmd_ml_eval(alpha, beta, zs);
  } catch (const SpecError& e) {
    std::cerr << "spec error: " << e.what() << "\n";
    return kSpec;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kSpec;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolver;
  }
  return kUsage;
}

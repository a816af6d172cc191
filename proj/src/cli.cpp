#include "qchns/cli.hpp"

#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include "qchns/errors.hpp"
#include "qchns/operator_lab.hpp"
#include "qchns/picard.hpp"
#include "qchns/records_io.hpp"

namespace qchns {

namespace {

int cmd_run(const std::string& config_path, std::ostream& out) {
  const SimConfig cfg = load_config(config_path);
  const RunResult res = run_simulation(cfg);
  const DiagnosticsRecord& last = res.records.back();
  out << "steps=" << res.steps << " t=" << last.t << " E_total=" << last.E_total
      << " mass=" << last.mass << " records=" << res.records.size() << "\n";
  return 0;
}

int cmd_operator_lab(const std::string& config_path, bool resolvent, std::ostream& out) {
  const SimConfig cfg = load_config(config_path);
  LabOptions opt;
  opt.eps = cfg.eps;
  opt.nu = cfg.nu;
  opt.a0 = cfg.a0;
  opt.resolvent_sweep = resolvent;
  const LabReport report = run_operator_lab(opt);
  out << report.to_text();
  return report.all_pass() ? 0 : 4;
}

int cmd_convergence(const std::string& config_path, std::ostream& out) {
  const SimConfig cfg = load_config(config_path);
  const PhysParams p = cfg.params();

  out << "study,grids,order\n";

  auto poisson_err = [](int n) {
    Grid g(n, n, 1.0, 1.0);
    NeumannPoissonSolver solver(g);
    ScalarField f(g, ScalarBc::Neumann);
    ScalarField want(g, ScalarBc::Neumann);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double cc = std::cos(M_PI * g.x(i)) * std::cos(M_PI * g.y(j));
        f(i, j) = -2.0 * M_PI * M_PI * cc;
        want(i, j) = cc;
      }
    want.values -= want.values.mean();
    ScalarField u = solver.solve(f);
    return std::sqrt(g.cell_area() * (u.values - want.values).square().sum());
  };
  const double p32 = poisson_err(32), p64 = poisson_err(64), p128 = poisson_err(128);
  out << "neumann_poisson,32->64," << std::log2(p32 / p64) << "\n";
  out << "neumann_poisson,64->128," << std::log2(p64 / p128) << "\n";

  auto laplacian_err = [](int n) {
    Grid g(n, n, 1.0, 1.0);
    ScalarField f(g, ScalarBc::Neumann);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        f(i, j) = std::cos(M_PI * g.x(i)) * std::cos(M_PI * g.y(j));
    ScalarField lf = laplacian(f);
    double acc = 0.0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        acc += std::pow(lf(i, j) + 2.0 * M_PI * M_PI * f(i, j), 2);
    return std::sqrt(g.cell_area() * acc);
  };
  out << "laplacian,32->64," << std::log2(laplacian_err(32) / laplacian_err(64)) << "\n";

  auto step_op_err = [&](int n) {
    Grid g(n, n, 1.0, 1.0);
    const double a = M_PI, b = M_PI;
    auto s4 = [](double t) { return std::pow(std::sin(t), 4); };
    auto ds4 = [](double t) { return 4.0 * std::pow(std::sin(t), 3) * std::cos(t); };
    auto d2s4 = [](double t) {
      const double s = std::sin(t), c = std::cos(t);
      return 4.0 * s * s * (3.0 * c * c - s * s);
    };
    const double phic = 0.1;
    const double rho0 = 0.5 * p.eps * phic + 1.0 + 0.5 * p.eps;
    const double eta0 = 0.5 * (p.nu - 1.0) * phic + 0.5 * (p.nu + 1.0);
    const double ctil = (1.0 / rho0) * (1.0 / p.alpha - phic);
    ScalarField phi0(g, Array2d::Constant(n, n, phic), ScalarBc::Neumann);
    LinearStepSystem sys(phi0, 1.0, p);
    Array2d u1(n, n), u2(n, n), ph(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double x = g.x(i), y = g.y(j);
        u1(i, j) = std::sin(a * x) * s4(b * y);
        u2(i, j) = s4(a * x) * std::sin(b * y);
        ph(i, j) = std::cos(a * x) * std::cos(b * y);
      }
    Array2d o1(n, n), o2(n, n), op(n, n);
    sys.apply_spatial(u1, u2, ph, o1, o2, op);
    double acc = 0.0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double x = g.x(i), y = g.y(j);
        const double sax = std::sin(a * x), cax = std::cos(a * x);
        const double sby = std::sin(b * y), cby = std::cos(b * y);
        const double lap_u1 = -a * a * sax * s4(b * y) + b * b * sax * d2s4(b * y);
        const double lap_u2 = a * a * d2s4(a * x) * sby - b * b * s4(a * x) * sby;
        const double div_u = a * cax * s4(b * y) + b * s4(a * x) * cby;
        const double ddx = -a * a * sax * s4(b * y) + a * b * ds4(a * x) * cby;
        const double ddy = a * b * cax * ds4(b * y) - b * b * s4(a * x) * sby;
        const double glx = (a * a + b * b) * a * sax * cby;
        const double gly = (a * a + b * b) * b * cax * sby;
        acc += std::pow(o1(i, j) + (eta0 / rho0) * (lap_u1 + ddx / 3.0) - ctil * glx, 2) +
               std::pow(o2(i, j) + (eta0 / rho0) * (lap_u2 + ddy / 3.0) - ctil * gly, 2) +
               std::pow(op(i, j) + div_u / p.alpha, 2);
      }
    return std::sqrt(g.cell_area() * acc);
  };
  out << "step_operator,32->64," << std::log2(step_op_err(32) / step_op_err(64)) << "\n";
  return 0;
}

int cmd_energy_report(const std::string& csv_path, std::ostream& out) {
  const std::vector<DiagnosticsRecord> recs = read_records(csv_path);
  if (recs.size() < 2) {
    out << "rows=" << recs.size() << " (need at least 2 for a balance report)\n";
    return 0;
  }
  double max_res = 0.0;
  bool monotone = true;
  const double e0 = recs.front().E_total;
  for (size_t k = 1; k < recs.size(); ++k) {
    const double dt = recs[k].t - recs[k - 1].t;
    max_res = std::max(max_res, energy_balance_residual(recs[k - 1], recs[k], dt));
    if (k >= 6 && recs[k].E_total > recs[k - 1].E_total + 1e-8 * std::abs(e0)) monotone = false;
  }
  out << "rows=" << recs.size() << " max_energy_balance_residual=" << max_res
      << " monotone_after_step5=" << (monotone ? "yes" : "no") << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv + 1, argv + argc);
  const auto usage = [&err]() {
    err << "usage: qchns run <config> | operator-lab <config> [--resolvent] | "
           "convergence <config> | energy-report <csv>\n";
    return 2;
  };
  if (args.empty()) return usage();

  try {
    const std::string& cmd = args[0];
    if (cmd == "run" && args.size() == 2) return cmd_run(args[1], out);
    if (cmd == "operator-lab" && (args.size() == 2 || args.size() == 3)) {
      const bool resolvent = args.size() == 3 && args[2] == "--resolvent";
      if (args.size() == 3 && !resolvent) return usage();
      return cmd_operator_lab(args[1], resolvent, out);
    }
    if (cmd == "convergence" && args.size() == 2) return cmd_convergence(args[1], out);
    if (cmd == "energy-report" && args.size() == 2) return cmd_energy_report(args[1], out);
    return usage();
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const StepFailed& e) {
    err << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 1;
  }
}

}  // namespace qchns

#include "qchns/diagnostics.hpp"

#include <cmath>

#include "qchns/errors.hpp"

namespace qchns {

void refresh_caches(SimState& s, const PhysParams& p, const NeumannPoissonSolver& compact,
                    const HelmholtzProjector* projector) {
  apply_navier_bc(s.u, s.phi, p.nu, p.a0);
  s.rho = density(s.phi, p);
  if (s.rho.values.minCoeff() < 0.1)
    throw DensityFloorViolated("refresh_caches: min(rho) dropped below 0.1");
  s.inv_rho = s.rho.values.inverse();
  s.eta = viscosity_field(s.phi, p);
  s.g_div = divergence(s.u);
  s.mu = chemical_potential(s.phi);
  ScalarField rhs = s.g_div;
  rhs.values -= rhs.values.mean();  // wall tangency makes this a rounding scrub
  s.mu_p = compact.solve(rhs);
  s.mu_p.values *= 1.0 / p.alpha;
  if (projector) s.w = projector->project(s.u).w;
}

std::array<double, 3> total_energy(const SimState& s, const PhysParams& p) {
  const Grid& g = s.phi.grid;
  const double da = g.cell_area();
  const double ekin = 0.5 * da * (s.rho.values * (s.u.u1.square() + s.u.u2.square())).sum();
  double egrav = 0.0;
  if (p.gravity_on) {
    double acc = 0.0;
    for (int j = 0; j < g.ny; ++j) {
      double col = 0.0;
      for (int i = 0; i < g.nx; ++i) col += s.rho(i, j);
      acc += col * g.y(j);
    }
    egrav = da * acc;
  }
  const VectorField gphi = gradient(s.phi);
  const double eint =
      da * (s.phi.values.unaryExpr([](double v) { return dwell_F(v); }) +
            0.5 * (gphi.u1.square() + gphi.u2.square()))
               .sum();
  return {ekin, egrav, eint};
}

std::array<double, 3> dissipation_rate(const SimState& s, const PhysParams& p) {
  const Grid& g = s.phi.grid;
  const double da = g.cell_area();

  const VelocityGradient vg = velocity_gradient(s.u);
  const Array2d d12 = 0.5 * (vg.g12 + vg.g21);
  const Array2d divu = vg.div();
  const Array2d quad = 2.0 * (vg.g11.square() + 2.0 * d12.square() + vg.g22.square()) -
                       (2.0 / 3.0) * divu.square();
  const double dvisc = da * (s.eta * quad).sum();

  const VectorField gmp = gradient(s.mu_p);
  const double dchem = da * (gmp.u1.square() + gmp.u2.square()).sum();

  // Wall friction: tangential wall value extrapolated from the two nearest
  // cells, face midpoint rule.
  const int nx = g.nx, ny = g.ny;
  double dfric = 0.0;
  for (int j = 0; j < ny; ++j) {
    const double lo = 1.5 * s.u.u2(0, j) - 0.5 * s.u.u2(1, j);
    const double hi = 1.5 * s.u.u2(nx - 1, j) - 0.5 * s.u.u2(nx - 2, j);
    dfric += (lo * lo + hi * hi) * g.hy();
  }
  for (int i = 0; i < nx; ++i) {
    const double lo = 1.5 * s.u.u1(i, 0) - 0.5 * s.u.u1(i, 1);
    const double hi = 1.5 * s.u.u1(i, ny - 1) - 0.5 * s.u.u1(i, ny - 2);
    dfric += (lo * lo + hi * hi) * g.hx();
  }
  dfric *= p.a0;

  return {dvisc, dchem, dfric};
}

double energy_balance_residual(const DiagnosticsRecord& a, const DiagnosticsRecord& b,
                               double dt) {
  const double diss = b.D_visc + b.D_chem + b.D_fric;
  return std::abs(b.E_total - a.E_total + dt * diss);
}

double constraint_residual(const SimState& s, const PhysParams& p) {
  ScalarField lap_mp = laplacian(s.mu_p);
  lap_mp.values = s.g_div.values - p.alpha * lap_mp.values;
  return l2_norm(lap_mp);
}

DiagnosticsRecord make_record(const SimState& s, const PhysParams& p, int picard_iters,
                              double contraction_factor) {
  DiagnosticsRecord r;
  r.t = s.t;
  const auto [ekin, egrav, eint] = total_energy(s, p);
  r.E_kin = ekin;
  r.E_grav = egrav;
  r.E_int = eint;
  r.E_total = ekin + egrav + eint;
  const auto [dv, dc, df] = dissipation_rate(s, p);
  r.D_visc = dv;
  r.D_chem = dc;
  r.D_fric = df;
  r.mass = s.phi.grid.cell_area() * s.rho.values.sum();
  r.phi_mean = s.phi.mean();
  r.phi_min = s.phi.values.minCoeff();
  r.phi_max = s.phi.values.maxCoeff();
  r.constraint_res = constraint_residual(s, p);
  r.picard_iters = picard_iters;
  r.contraction_factor = contraction_factor;
  return r;
}

ScalarField recover_pressure(const SimState& s, const PhysParams& p) {
  ScalarField pr(s.phi.grid, ScalarBc::Neumann);
  pr.values = (s.mu_p.values - s.mu.values) / p.alpha;
  pr.values -= pr.values.mean();
  return pr;
}

}  // namespace qchns

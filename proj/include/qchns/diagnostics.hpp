#pragma once

#include <array>

#include "qchns/state.hpp"

namespace qchns {

/// Per-step energy/mass/constraint bookkeeping. Column order here is the
/// record CSV order.
struct DiagnosticsRecord {
  double t = 0.0;
  double E_kin = 0.0;
  double E_grav = 0.0;
  double E_int = 0.0;
  double E_total = 0.0;
  double D_visc = 0.0;
  double D_chem = 0.0;
  double D_fric = 0.0;
  double mass = 0.0;
  double phi_mean = 0.0;
  double phi_min = 0.0;
  double phi_max = 0.0;
  double constraint_res = 0.0;
  int picard_iters = 0;
  double contraction_factor = 0.0;
};

/// (E_kin, E_grav, E_int) by midpoint quadrature. The gravitational term
/// integrates rho * y and enters only when the body force is enabled;
/// without it the energy balance closes on E_kin + E_int alone.
std::array<double, 3> total_energy(const SimState& s, const PhysParams& p);

/// (D_visc, D_chem, D_fric): the interior dissipation integrals plus the
/// wall-friction boundary integral by face midpoint rule.
std::array<double, 3> dissipation_rate(const SimState& s, const PhysParams& p);

/// |E(t_{n+1}) - E(t_n) + dt * D(t_{n+1})| for consecutive accepted steps.
double energy_balance_residual(const DiagnosticsRecord& a, const DiagnosticsRecord& b, double dt);

/// || div u - alpha * lap(mu_p) ||_L2, evaluated with the same discrete
/// operators the solver uses.
double constraint_residual(const SimState& s, const PhysParams& p);

DiagnosticsRecord make_record(const SimState& s, const PhysParams& p, int picard_iters,
                              double contraction_factor);

/// Pressure recovered from p = (mu_p - mu)/alpha, gauge fixed by zero mean.
ScalarField recover_pressure(const SimState& s, const PhysParams& p);

}  // namespace qchns

#pragma once

#include "qchns/elliptic.hpp"
#include "qchns/grid.hpp"
#include "qchns/phase.hpp"

namespace qchns {

/// Simulation state at one time level, with the derived fields the remainder
/// terms and diagnostics keep reusing. Caches are valid only after
/// refresh_caches; the Picard loop refreshes them on every iterate (without
/// the projection, which nothing in the iteration needs) and once more on
/// acceptance.
struct SimState {
  double t = 0.0;
  VectorField u;
  ScalarField phi;

  ScalarField rho;
  Array2d inv_rho;
  Array2d eta;
  ScalarField g_div;  // div u
  ScalarField mu;     // f(phi) - lap(phi)
  ScalarField mu_p;   // (1/alpha) * G(div u), so that div u = alpha * lap(mu_p)
  VectorField w;      // Helmholtz projection of u

  explicit SimState(const Grid& g) : u(g), phi(g, ScalarBc::Neumann) { apply_parity_bc(u); }
};

/// Recompute every cached field from (u, phi). Throws DensityFloorViolated
/// when min(rho) < 0.1.
void refresh_caches(SimState& s, const PhysParams& p, const NeumannPoissonSolver& compact,
                    const HelmholtzProjector* projector);

}  // namespace qchns

#pragma once

#include "qchns/grid.hpp"
#include "qchns/operators.hpp"

namespace qchns {

/// Model constants. eps < 0 measures the density contrast of the two pure
/// phases; alpha = -eps/(2+eps) is derived, never set independently. The
/// remaining nondimensional groups are fixed to one.
struct PhysParams {
  double eps = -0.5;
  double alpha = 1.0 / 3.0;
  double nu = 1.0;      // viscosity ratio
  double a0 = 1.0;      // constant wall friction
  bool gravity_on = false;

  static PhysParams make(double eps, double nu, double a0, bool gravity_on);
};

/// alpha = -eps/(2+eps); requires -1 < eps < 0.
double alpha_from_eps(double eps);

/// rho = (eps/2) phi + 1 + eps/2, applied pointwise.
ScalarField density(const ScalarField& phi, const PhysParams& p);

/// Double-well potential F(phi) = (1 - phi^2)^2 / 4 and its derivative
/// f = phi^3 - phi.
struct DoubleWell {
  double F;
  double f;
};
DoubleWell double_well(double phi);

inline double dwell_f(double phi) { return phi * phi * phi - phi; }
inline double dwell_F(double phi) {
  const double s = 1.0 - phi * phi;
  return 0.25 * s * s;
}

/// eta(phi) = (nu-1)/2 phi + (nu+1)/2, with phi clamped to [-1.1, 1.1].
/// Throws ViscosityNonpositive if the result is not positive.
double viscosity(double phi, const PhysParams& p);

Array2d viscosity_field(const ScalarField& phi, const PhysParams& p);

/// Newtonian stress S = 2 eta(phi) D(u) - (2/3) eta(phi) (div u) I with
/// D(u) the symmetric velocity gradient of the boundary-applied field.
TensorField stress(const ScalarField& phi, const VectorField& u, const PhysParams& p);

/// mu = f(phi) - laplacian(phi); phi must carry the Neumann tag.
ScalarField chemical_potential(const ScalarField& phi);

}  // namespace qchns

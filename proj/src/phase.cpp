#include "qchns/phase.hpp"

#include "qchns/errors.hpp"

namespace qchns {

double alpha_from_eps(double eps) {
  if (!(eps > -1.0 && eps < 0.0)) throw DomainError("alpha_from_eps: eps must lie in (-1, 0)");
  return -eps / (2.0 + eps);
}

PhysParams PhysParams::make(double eps, double nu, double a0, bool gravity_on) {
  PhysParams p;
  p.eps = eps;
  p.alpha = alpha_from_eps(eps);
  p.nu = nu;
  p.a0 = a0;
  p.gravity_on = gravity_on;
  if (!(nu > 0.0)) throw DomainError("PhysParams: nu must be positive");
  if (!(a0 > 0.0)) throw DomainError("PhysParams: a0 must be positive");
  return p;
}

ScalarField density(const ScalarField& phi, const PhysParams& p) {
  ScalarField rho(phi.grid, ScalarBc::Neumann);
  rho.values = 0.5 * p.eps * phi.values + (1.0 + 0.5 * p.eps);
  return rho;
}

DoubleWell double_well(double phi) {
  return {dwell_F(phi), dwell_f(phi)};
}

double viscosity(double phi, const PhysParams& p) {
  const double c = std::min(1.1, std::max(-1.1, phi));
  const double eta = 0.5 * (p.nu - 1.0) * c + 0.5 * (p.nu + 1.0);
  if (!(eta > 0.0)) throw ViscosityNonpositive("viscosity: eta(phi) <= 0");
  return eta;
}

Array2d viscosity_field(const ScalarField& phi, const PhysParams& p) {
  Array2d eta(phi.grid.nx, phi.grid.ny);
  for (int j = 0; j < phi.grid.ny; ++j)
    for (int i = 0; i < phi.grid.nx; ++i) eta(i, j) = viscosity(phi(i, j), p);
  return eta;
}

TensorField stress(const ScalarField& phi, const VectorField& u, const PhysParams& p) {
  const Array2d eta = viscosity_field(phi, p);
  const VelocityGradient g = velocity_gradient(u);
  TensorField s;
  s.grid = u.grid;
  const Array2d divu = g.div();
  s.t11 = 2.0 * eta * g.g11 - (2.0 / 3.0) * eta * divu;
  s.t12 = eta * (g.g12 + g.g21);
  s.t22 = 2.0 * eta * g.g22 - (2.0 / 3.0) * eta * divu;
  return s;
}

ScalarField chemical_potential(const ScalarField& phi) {
  ScalarField mu = laplacian(phi);
  mu.values = phi.values.cube() - phi.values - mu.values;
  return mu;
}

}  // namespace qchns

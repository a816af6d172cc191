#include "qchns/linear_step.hpp"

#include "qchns/errors.hpp"
#include "qchns/stencil_probe.hpp"

namespace qchns {

namespace {

Eigen::Map<const Eigen::VectorXd> flat(const Array2d& a) {
  return {a.data(), a.size()};
}

}  // namespace

LinearStepSystem::LinearStepSystem(const ScalarField& phi_ref, double dt, const PhysParams& p)
    : grid_(phi_ref.grid), dt_(dt), phi_ref_(phi_ref), params_(p) {
  if (!(dt > 0.0)) throw DomainError("LinearStepSystem: dt must be positive");
  if (!phi_ref.finite()) throw NonFiniteInput("LinearStepSystem: non-finite phi_ref");

  const double inv_alpha = 1.0 / p.alpha;
  if ((inv_alpha - phi_ref.values).minCoeff() <= 0.0)
    throw CoefficientSignError("LinearStepSystem: 1/alpha - phi_ref lost positivity");

  const ScalarField rho0 = density(phi_ref, p);
  inv_rho0_ = rho0.values.inverse();
  eta0_ = viscosity_field(phi_ref, p);
  ctilde_ = inv_rho0_ * (inv_alpha - phi_ref.values);

  const int nx = grid_.nx, ny = grid_.ny;
  fric_xlo_.resize(ny);
  fric_xhi_.resize(ny);
  for (int j = 0; j < ny; ++j) {
    fric_xlo_(j) = p.a0 * inv_rho0_(0, j) / grid_.hx();
    fric_xhi_(j) = p.a0 * inv_rho0_(nx - 1, j) / grid_.hx();
  }
  fric_ylo_.resize(nx);
  fric_yhi_.resize(nx);
  for (int i = 0; i < nx; ++i) {
    fric_ylo_(i) = p.a0 * inv_rho0_(i, 0) / grid_.hy();
    fric_yhi_(i) = p.a0 * inv_rho0_(i, ny - 1) / grid_.hy();
  }

  spatial_ = probe_stencil_matrix(
      grid_, 3, 3, 3, [this](const std::vector<Array2d>& in, std::vector<Array2d>& out) {
        apply_spatial(in[0], in[1], in[2], out[0], out[1], out[2]);
      });
  for (int k = 0; k < spatial_.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(spatial_, k); it; ++it)
      if (!std::isfinite(it.value()))
        throw AssemblyNaN("LinearStepSystem: non-finite matrix entry");

  factorize();
}

void LinearStepSystem::set_dt(double dt) {
  if (!(dt > 0.0)) throw DomainError("LinearStepSystem: dt must be positive");
  dt_ = dt;
  factorize();
}

void LinearStepSystem::factorize() {
  const int n3 = 3 * grid_.cells();
  Eigen::SparseMatrix<double> shift(n3, n3);
  shift.setIdentity();
  matrix_ = spatial_ + (1.0 / dt_) * shift;
  lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
  lu_->compute(matrix_);
  if (lu_->info() != Eigen::Success)
    throw SingularSystem("LinearStepSystem: factorization failed");
}

void LinearStepSystem::apply_spatial(const Array2d& u1, const Array2d& u2, const Array2d& phi,
                                     Array2d& out_u1, Array2d& out_u2, Array2d& out_phi) const {
  const int nx = grid_.nx, ny = grid_.ny;
  const double hx = grid_.hx(), hy = grid_.hy();
  const GhostSigma mir_x = GhostSigma::constant(ny, 1.0), anti_x = GhostSigma::constant(ny, -1.0);
  const GhostSigma mir_y = GhostSigma::constant(nx, 1.0), anti_y = GhostSigma::constant(nx, -1.0);

  // Viscous block from the deformation-energy form. Normal components take
  // antisymmetric ghosts, tangential ones mirror ghosts; the slip friction is
  // added as the boundary term below rather than through Robin closures.
  const Array2d g11 = dx_central(u1, hx, anti_x);
  const Array2d g12 = dy_central(u1, hy, mir_y);
  const Array2d g21 = dx_central(u2, hx, mir_x);
  const Array2d g22 = dy_central(u2, hy, anti_y);
  const Array2d divu = g11 + g22;
  const Array2d two_eta = 2.0 * eta0_ * inv_rho0_;
  const Array2d gamma = (2.0 / 3.0) * eta0_ * inv_rho0_ * divu;
  const Array2d m11 = two_eta * g11 - gamma;
  const Array2d m12 = eta0_ * inv_rho0_ * (g12 + g21);
  const Array2d m22 = two_eta * g22 - gamma;

  out_u1 = -(dx_central(m11, hx, mir_x) + dy_central(m12, hy, anti_y));
  out_u2 = -(dx_central(m12, hx, anti_x) + dy_central(m22, hy, mir_y));

  // Wall friction, with the wall value linearly extrapolated from the two
  // nearest cells (keeps the form symmetric).
  for (int j = 0; j < ny; ++j) {
    const double wlo = 1.5 * u2(0, j) - 0.5 * u2(1, j);
    out_u2(0, j) += 1.5 * fric_xlo_(j) * wlo;
    out_u2(1, j) += -0.5 * fric_xlo_(j) * wlo;
    const double whi = 1.5 * u2(nx - 1, j) - 0.5 * u2(nx - 2, j);
    out_u2(nx - 1, j) += 1.5 * fric_xhi_(j) * whi;
    out_u2(nx - 2, j) += -0.5 * fric_xhi_(j) * whi;
  }
  for (int i = 0; i < nx; ++i) {
    const double wlo = 1.5 * u1(i, 0) - 0.5 * u1(i, 1);
    out_u1(i, 0) += 1.5 * fric_ylo_(i) * wlo;
    out_u1(i, 1) += -0.5 * fric_ylo_(i) * wlo;
    const double whi = 1.5 * u1(i, ny - 1) - 0.5 * u1(i, ny - 2);
    out_u1(i, ny - 1) += 1.5 * fric_yhi_(i) * whi;
    out_u1(i, ny - 2) += -0.5 * fric_yhi_(i) * whi;
  }

  // Third-order coupling grad(div(c grad(phi))), composed from the grid
  // operators: mirror ghosts on phi and on the divergence, antisymmetric
  // normal ghosts on the flux c grad(phi).
  const Array2d px = dx_central(phi, hx, mir_x);
  const Array2d py = dy_central(phi, hy, mir_y);
  const Array2d s =
      dx_central(ctilde_ * px, hx, anti_x) + dy_central(ctilde_ * py, hy, anti_y);
  out_u1 += dx_central(s, hx, mir_x);
  out_u2 += dy_central(s, hy, mir_y);

  // Phase row: -(1/alpha) div u with wall-tangency ghosts.
  out_phi = (-1.0 / params_.alpha) *
            (dx_central(u1, hx, anti_x) + dy_central(u2, hy, anti_y));
}

void LinearStepSystem::apply(const Array2d& u1, const Array2d& u2, const Array2d& phi,
                             Array2d& out_u1, Array2d& out_u2, Array2d& out_phi) const {
  apply_spatial(u1, u2, phi, out_u1, out_u2, out_phi);
  const double s = 1.0 / dt_;
  out_u1 += s * u1;
  out_u2 += s * u2;
  out_phi += s * phi;
}

LinearStepSystem::Solution LinearStepSystem::solve(const VectorField& rhs_u,
                                                   const ScalarField& rhs_phi) const {
  if (!rhs_u.finite() || !rhs_phi.finite())
    throw NonFiniteInput("LinearStepSystem::solve: non-finite rhs");
  const int n = grid_.cells();
  Eigen::VectorXd b(3 * n);
  b.segment(0, n) = flat(rhs_u.u1);
  b.segment(n, n) = flat(rhs_u.u2);
  b.segment(2 * n, n) = flat(rhs_phi.values);

  Eigen::VectorXd x = lu_->solve(b);
  if (lu_->info() != Eigen::Success) throw SingularSystem("LinearStepSystem: solve failed");
  const double bnorm = b.norm();
  if (bnorm > 0.0) {
    Eigen::VectorXd r = b - matrix_ * x;
    if (r.norm() > 1e-12 * bnorm) x += lu_->solve(r);
    r = b - matrix_ * x;
    if (r.norm() > 1e-9 * bnorm)
      throw SingularSystem("LinearStepSystem: residual above 1e-9 after refinement");
  }

  Solution sol{VectorField(grid_), ScalarField(grid_, ScalarBc::Neumann)};
  apply_parity_bc(sol.u);
  sol.u.u1 = Eigen::Map<const Array2d>(x.data(), grid_.nx, grid_.ny);
  sol.u.u2 = Eigen::Map<const Array2d>(x.data() + n, grid_.nx, grid_.ny);
  sol.phi.values = Eigen::Map<const Array2d>(x.data() + 2 * n, grid_.nx, grid_.ny);
  return sol;
}

}  // namespace qchns

#pragma once

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <memory>

#include "qchns/grid.hpp"
#include "qchns/operators.hpp"
#include "qchns/phase.hpp"

namespace qchns {

/// One implicit step of the frozen-coefficient block system in (u, phi):
///
///   row u:   u/dt - div((1/rho0) S(phi0, Du)) + grad div((1/rho0)(1/alpha - phi0) grad phi)
///   row phi: phi/dt - (1/alpha) div u
///
/// The viscous part is assembled from its symmetric deformation-energy form
/// (Navier slip enters as the wall friction boundary term), which keeps the
/// u-u block exactly symmetric positive definite. The third-order coupling is
/// the literal composition gradient(divergence(c grad(.))) of the grid
/// operators. Unknown ordering is cell-major per slot: [u1; u2; phi],
/// index = slot*nx*ny + j*nx + i.
class LinearStepSystem {
 public:
  LinearStepSystem(const ScalarField& phi_ref, double dt, const PhysParams& p);

  /// Action of the spatial operator (everything except the 1/dt shift).
  void apply_spatial(const Array2d& u1, const Array2d& u2, const Array2d& phi, Array2d& out_u1,
                     Array2d& out_u2, Array2d& out_phi) const;

  /// Action of the full step operator, including the 1/dt shift.
  void apply(const Array2d& u1, const Array2d& u2, const Array2d& phi, Array2d& out_u1,
             Array2d& out_u2, Array2d& out_phi) const;

  struct Solution {
    VectorField u;
    ScalarField phi;
  };

  /// Solve the step system. The residual of the stacked system is driven
  /// below 1e-9 relative (one refinement pass); SingularSystem otherwise.
  Solution solve(const VectorField& rhs_u, const ScalarField& rhs_phi) const;

  /// Rebuild the factorization for a new time step without re-probing the
  /// spatial operator (the coefficients depend on phi_ref only).
  void set_dt(double dt);

  const Grid& grid() const { return grid_; }
  double dt() const { return dt_; }
  const ScalarField& phi_ref() const { return phi_ref_; }
  const PhysParams& params() const { return params_; }
  const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }
  const Eigen::SparseMatrix<double>& spatial_matrix() const { return spatial_; }

 private:
  void factorize();

  Grid grid_;
  double dt_ = 0.0;
  ScalarField phi_ref_;
  PhysParams params_;

  // Frozen coefficients.
  Array2d inv_rho0_, eta0_, ctilde_;
  Eigen::ArrayXd fric_xlo_, fric_xhi_, fric_ylo_, fric_yhi_;  // a0/(rho0_wall * h_perp)

  Eigen::SparseMatrix<double> spatial_;
  Eigen::SparseMatrix<double> matrix_;
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
};

}  // namespace qchns

#pragma once

#include <Eigen/Core>

#include "qchns/grid.hpp"

namespace qchns {

/// Ghost closure factors for one axis: value(-1) = lo(k) * value(0) and
/// value(n) = hi(k) * value(n-1), where k runs along the wall. +1 mirrors
/// (zero normal derivative), -1 antisymmetrizes (zero wall value), and the
/// Robin factor (2 eta - a h)/(2 eta + a h) realizes the slip law.
struct GhostSigma {
  Eigen::ArrayXd lo, hi;
  static GhostSigma constant(int n, double s) {
    return {Eigen::ArrayXd::Constant(n, s), Eigen::ArrayXd::Constant(n, s)};
  }
};

/// Centered first differences with ghost closures. The adjoint identity
/// dx(sigma)^T = -dx(-sigma) in the cell dot product is exact and is what the
/// elliptic and step operators rely on.
Array2d dx_central(const Array2d& v, double hx, const GhostSigma& sx);
Array2d dy_central(const Array2d& v, double hy, const GhostSigma& sy);

GhostSigma robin_sigma(const Eigen::ArrayXd& eta_lo, const Eigen::ArrayXd& eta_hi, double a0,
                       double h);

/// Ghost factors per component and axis implied by a field's bc tag.
GhostSigma sigma_x(const VectorField& v, int component);
GhostSigma sigma_y(const VectorField& v, int component);

/// Fill the Robin wall-viscosity tables on a velocity field from the phase
/// field it rides on. After this the field counts as boundary-applied.
void apply_navier_bc(VectorField& v, const ScalarField& phi, double nu, double a0);

void apply_parity_bc(VectorField& v);

// ---- grid_core operations -------------------------------------------------

/// Second-order centered gradient. Neumann fields use mirror ghosts; fields
/// tagged None get second-order one-sided differences at the walls.
VectorField gradient(const ScalarField& f);

/// Centered divergence of a boundary-applied vector field. The antisymmetric
/// normal ghosts make the cell sum of the result vanish to rounding.
ScalarField divergence(const VectorField& v);

/// Compact 5-point Laplacian with Neumann mirror ghosts.
ScalarField laplacian(const ScalarField& f);

/// All four centered partials of a vector field under its own ghost rules:
/// g11 = d(u1)/dx, g12 = d(u1)/dy, g21 = d(u2)/dx, g22 = d(u2)/dy.
struct VelocityGradient {
  Array2d g11, g12, g21, g22;
  Array2d div() const { return g11 + g22; }
};
VelocityGradient velocity_gradient(const VectorField& v);

/// Symmetric 2x2 tensor sampled per cell (t21 == t12 implied).
struct TensorField {
  Grid grid;
  Array2d t11, t12, t22;
};

/// Row-wise centered divergence of a symmetric tensor with mirror ghosts on
/// every entry (derived fields carry no boundary law of their own).
VectorField divergence_tensor(const TensorField& t);

/// Elementwise product phi * v, keeping v's bc tag (still wall-tangent).
VectorField scale(const ScalarField& phi, const VectorField& v);

}  // namespace qchns

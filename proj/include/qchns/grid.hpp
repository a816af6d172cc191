#pragma once

#include <Eigen/Core>

#include "qchns/errors.hpp"

namespace qchns {

using Array2d = Eigen::ArrayXXd;  // (nx, ny), x index fastest

/// Uniform cell-centered rectangle grid. Cell (i,j) has its center at
/// ((i+1/2)hx, (j+1/2)hy); walls sit on the domain boundary, half a cell
/// away from the first/last centers.
struct Grid {
  int nx = 0;
  int ny = 0;
  double Lx = 1.0;
  double Ly = 1.0;

  Grid() = default;
  Grid(int nx_, int ny_, double Lx_, double Ly_) : nx(nx_), ny(ny_), Lx(Lx_), Ly(Ly_) {
    if (nx < 8 || ny < 8) throw DomainError("Grid: nx, ny must be >= 8");
    if (!(Lx > 0.0) || !(Ly > 0.0)) throw DomainError("Grid: Lx, Ly must be positive");
  }

  double hx() const { return Lx / nx; }
  double hy() const { return Ly / ny; }
  double cell_area() const { return hx() * hy(); }
  int cells() const { return nx * ny; }

  double x(int i) const { return (i + 0.5) * hx(); }
  double y(int j) const { return (j + 0.5) * hy(); }

  bool operator==(const Grid& o) const {
    return nx == o.nx && ny == o.ny && Lx == o.Lx && Ly == o.Ly;
  }
};

/// Boundary handling for scalar fields. Neumann mirrors the first interior
/// cell into the ghost, which zeroes the discrete normal derivative on the
/// wall to second order. None means the field is only valid for interior
/// evaluation.
enum class ScalarBc { Neumann, None };

struct ScalarField {
  Grid grid;
  ScalarBc bc = ScalarBc::Neumann;
  Array2d values;

  ScalarField() = default;
  explicit ScalarField(const Grid& g, ScalarBc bc_ = ScalarBc::Neumann)
      : grid(g), bc(bc_), values(Array2d::Zero(g.nx, g.ny)) {}
  ScalarField(const Grid& g, const Array2d& v, ScalarBc bc_ = ScalarBc::Neumann)
      : grid(g), bc(bc_), values(v) {}

  double& operator()(int i, int j) { return values(i, j); }
  double operator()(int i, int j) const { return values(i, j); }

  bool finite() const { return values.allFinite(); }
  double mean() const { return values.mean(); }
};

/// Boundary handling for velocity-like fields.
///
/// NavierSlip: the normal component ghost is antisymmetric (so n.u = 0 on the
/// wall) and the tangential ghost comes from the collocated Robin reduction of
/// the slip law, eta(phi) du_tau/dn = -a0 u_tau, which gives
///   ghost = interior * (2 eta_w - a0 h) / (2 eta_w + a0 h)
/// with eta_w the viscosity at the wall. Corner cells take both walls'
/// conditions, one per axis.
///
/// Parity: antisymmetric normal ghost, mirrored tangential ghost. Used for
/// derived wall-tangent fields such as gradients of Neumann scalars, where no
/// friction law applies.
enum class VectorBcKind { NavierSlip, Parity, None };

struct VectorBc {
  VectorBcKind kind = VectorBcKind::Parity;
  double a0 = 0.0;
  // Wall viscosity samples for the Robin ghost, one entry per boundary cell.
  Eigen::ArrayXd eta_xlo, eta_xhi;  // size ny
  Eigen::ArrayXd eta_ylo, eta_yhi;  // size nx
};

struct VectorField {
  Grid grid;
  VectorBc bc;
  Array2d u1, u2;

  VectorField() = default;
  explicit VectorField(const Grid& g)
      : grid(g), u1(Array2d::Zero(g.nx, g.ny)), u2(Array2d::Zero(g.nx, g.ny)) {}

  bool finite() const { return u1.allFinite() && u2.allFinite(); }
  double sq_sum() const { return u1.square().sum() + u2.square().sum(); }
};

inline double l2_norm(const ScalarField& f) {
  return std::sqrt(f.grid.cell_area() * f.values.square().sum());
}

inline double l2_norm(const VectorField& v) {
  return std::sqrt(v.grid.cell_area() * v.sq_sum());
}

inline double l2_inner(const ScalarField& a, const ScalarField& b) {
  return a.grid.cell_area() * (a.values * b.values).sum();
}

inline double l2_inner(const VectorField& a, const VectorField& b) {
  return a.grid.cell_area() * ((a.u1 * b.u1).sum() + (a.u2 * b.u2).sum());
}

}  // namespace qchns

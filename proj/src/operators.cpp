#include "qchns/operators.hpp"

#include "qchns/errors.hpp"

namespace qchns {

Array2d dx_central(const Array2d& v, double hx, const GhostSigma& sx) {
  const int nx = static_cast<int>(v.rows());
  const int ny = static_cast<int>(v.cols());
  Array2d out(nx, ny);
  const double w = 1.0 / (2.0 * hx);
  for (int j = 0; j < ny; ++j) {
    out(0, j) = (v(1, j) - sx.lo(j) * v(0, j)) * w;
    for (int i = 1; i < nx - 1; ++i) out(i, j) = (v(i + 1, j) - v(i - 1, j)) * w;
    out(nx - 1, j) = (sx.hi(j) * v(nx - 1, j) - v(nx - 2, j)) * w;
  }
  return out;
}

Array2d dy_central(const Array2d& v, double hy, const GhostSigma& sy) {
  const int nx = static_cast<int>(v.rows());
  const int ny = static_cast<int>(v.cols());
  Array2d out(nx, ny);
  const double w = 1.0 / (2.0 * hy);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double up = (j + 1 < ny) ? v(i, j + 1) : sy.hi(i) * v(i, ny - 1);
      const double dn = (j > 0) ? v(i, j - 1) : sy.lo(i) * v(i, 0);
      out(i, j) = (up - dn) * w;
    }
  }
  return out;
}

GhostSigma robin_sigma(const Eigen::ArrayXd& eta_lo, const Eigen::ArrayXd& eta_hi, double a0,
                       double h) {
  GhostSigma s;
  s.lo = (2.0 * eta_lo - a0 * h) / (2.0 * eta_lo + a0 * h);
  s.hi = (2.0 * eta_hi - a0 * h) / (2.0 * eta_hi + a0 * h);
  return s;
}

GhostSigma sigma_x(const VectorField& v, int component) {
  const int ny = v.grid.ny;
  if (component == 1) return GhostSigma::constant(ny, -1.0);  // normal at x-walls
  switch (v.bc.kind) {
    case VectorBcKind::NavierSlip:
      return robin_sigma(v.bc.eta_xlo, v.bc.eta_xhi, v.bc.a0, v.grid.hx());
    case VectorBcKind::Parity:
      return GhostSigma::constant(ny, 1.0);
    case VectorBcKind::None:
      throw DomainError("sigma_x: field has no boundary tag");
  }
  return GhostSigma::constant(ny, 1.0);
}

GhostSigma sigma_y(const VectorField& v, int component) {
  const int nx = v.grid.nx;
  if (component == 2) return GhostSigma::constant(nx, -1.0);  // normal at y-walls
  switch (v.bc.kind) {
    case VectorBcKind::NavierSlip:
      return robin_sigma(v.bc.eta_ylo, v.bc.eta_yhi, v.bc.a0, v.grid.hy());
    case VectorBcKind::Parity:
      return GhostSigma::constant(nx, 1.0);
    case VectorBcKind::None:
      throw DomainError("sigma_y: field has no boundary tag");
  }
  return GhostSigma::constant(nx, 1.0);
}

namespace {

double viscosity_affine(double phi, double nu) {
  const double c = std::min(1.1, std::max(-1.1, phi));
  return 0.5 * (nu - 1.0) * c + 0.5 * (nu + 1.0);
}

}  // namespace

void apply_navier_bc(VectorField& v, const ScalarField& phi, double nu, double a0) {
  const Grid& g = v.grid;
  v.bc.kind = VectorBcKind::NavierSlip;
  v.bc.a0 = a0;
  v.bc.eta_xlo.resize(g.ny);
  v.bc.eta_xhi.resize(g.ny);
  v.bc.eta_ylo.resize(g.nx);
  v.bc.eta_yhi.resize(g.nx);
  // Mirror ghosts make the wall value of phi equal the boundary cell value.
  for (int j = 0; j < g.ny; ++j) {
    v.bc.eta_xlo(j) = viscosity_affine(phi(0, j), nu);
    v.bc.eta_xhi(j) = viscosity_affine(phi(g.nx - 1, j), nu);
  }
  for (int i = 0; i < g.nx; ++i) {
    v.bc.eta_ylo(i) = viscosity_affine(phi(i, 0), nu);
    v.bc.eta_yhi(i) = viscosity_affine(phi(i, g.ny - 1), nu);
  }
}

void apply_parity_bc(VectorField& v) {
  v.bc = VectorBc{};
  v.bc.kind = VectorBcKind::Parity;
}

VectorField gradient(const ScalarField& f) {
  if (!f.finite()) throw NonFiniteInput("gradient: non-finite input");
  const Grid& g = f.grid;
  VectorField out(g);
  apply_parity_bc(out);
  if (f.bc == ScalarBc::Neumann) {
    out.u1 = dx_central(f.values, g.hx(), GhostSigma::constant(g.ny, 1.0));
    out.u2 = dy_central(f.values, g.hy(), GhostSigma::constant(g.nx, 1.0));
    return out;
  }
  // Untagged field: second-order one-sided differences at the walls.
  const int nx = g.nx, ny = g.ny;
  const double wx = 1.0 / (2.0 * g.hx()), wy = 1.0 / (2.0 * g.hy());
  for (int j = 0; j < ny; ++j) {
    out.u1(0, j) = (-3.0 * f(0, j) + 4.0 * f(1, j) - f(2, j)) * wx;
    for (int i = 1; i < nx - 1; ++i) out.u1(i, j) = (f(i + 1, j) - f(i - 1, j)) * wx;
    out.u1(nx - 1, j) = (3.0 * f(nx - 1, j) - 4.0 * f(nx - 2, j) + f(nx - 3, j)) * wx;
  }
  for (int i = 0; i < nx; ++i) {
    out.u2(i, 0) = (-3.0 * f(i, 0) + 4.0 * f(i, 1) - f(i, 2)) * wy;
    for (int j = 1; j < ny - 1; ++j) out.u2(i, j) = (f(i, j + 1) - f(i, j - 1)) * wy;
    out.u2(i, ny - 1) = (3.0 * f(i, ny - 1) - 4.0 * f(i, ny - 2) + f(i, ny - 3)) * wy;
  }
  return out;
}

ScalarField divergence(const VectorField& v) {
  if (!v.finite()) throw NonFiniteInput("divergence: non-finite input");
  const Grid& g = v.grid;
  ScalarField out(g, ScalarBc::Neumann);
  out.values = dx_central(v.u1, g.hx(), sigma_x(v, 1)) + dy_central(v.u2, g.hy(), sigma_y(v, 2));
  return out;
}

ScalarField laplacian(const ScalarField& f) {
  if (!f.finite()) throw NonFiniteInput("laplacian: non-finite input");
  if (f.bc != ScalarBc::Neumann) throw DomainError("laplacian: field must carry Neumann bc");
  const Grid& g = f.grid;
  const int nx = g.nx, ny = g.ny;
  const double wx = 1.0 / (g.hx() * g.hx()), wy = 1.0 / (g.hy() * g.hy());
  ScalarField out(g, ScalarBc::Neumann);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double xm = (i > 0) ? f(i - 1, j) : f(0, j);
      const double xp = (i + 1 < nx) ? f(i + 1, j) : f(nx - 1, j);
      const double ym = (j > 0) ? f(i, j - 1) : f(i, 0);
      const double yp = (j + 1 < ny) ? f(i, j + 1) : f(i, ny - 1);
      out(i, j) = (xp - 2.0 * f(i, j) + xm) * wx + (yp - 2.0 * f(i, j) + ym) * wy;
    }
  }
  return out;
}

VelocityGradient velocity_gradient(const VectorField& v) {
  if (!v.finite()) throw NonFiniteInput("velocity_gradient: non-finite input");
  const Grid& g = v.grid;
  VelocityGradient out;
  out.g11 = dx_central(v.u1, g.hx(), sigma_x(v, 1));
  out.g12 = dy_central(v.u1, g.hy(), sigma_y(v, 1));
  out.g21 = dx_central(v.u2, g.hx(), sigma_x(v, 2));
  out.g22 = dy_central(v.u2, g.hy(), sigma_y(v, 2));
  return out;
}

VectorField divergence_tensor(const TensorField& t) {
  const Grid& g = t.grid;
  const GhostSigma mx = GhostSigma::constant(g.ny, 1.0);
  const GhostSigma my = GhostSigma::constant(g.nx, 1.0);
  VectorField out(g);
  apply_parity_bc(out);
  out.u1 = dx_central(t.t11, g.hx(), mx) + dy_central(t.t12, g.hy(), my);
  out.u2 = dx_central(t.t12, g.hx(), mx) + dy_central(t.t22, g.hy(), my);
  return out;
}

VectorField scale(const ScalarField& phi, const VectorField& v) {
  VectorField out = v;
  out.u1 *= phi.values;
  out.u2 *= phi.values;
  return out;
}

}  // namespace qchns

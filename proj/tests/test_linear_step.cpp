#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "qchns/errors.hpp"
#include "qchns/linear_step.hpp"
#include "test_util.hpp"

using namespace qchns;
using namespace qchns::test;

TEST_SUITE_BEGIN("linear_step");

namespace {

// Straight-line re-derivation of the step operator for constant coefficients,
// written against the raw stencils with explicit ghost branches. Kept
// deliberately independent of the library's difference helpers.
void reference_apply_const(const Grid& g, double alpha, double inv_rho0, double eta0,
                           double ctil, double a0, double dt, const Array2d& u1,
                           const Array2d& u2, const Array2d& phi, Array2d& r1, Array2d& r2,
                           Array2d& rp) {
  const int nx = g.nx, ny = g.ny;
  const double hx = g.hx(), hy = g.hy();

  auto U1 = [&](int i, int j) {  // antisym in x, mirror in y
    double s = 1.0;
    if (i < 0) { i = 0; s = -s; }
    if (i >= nx) { i = nx - 1; s = -s; }
    if (j < 0) j = 0;
    if (j >= ny) j = ny - 1;
    return s * u1(i, j);
  };
  auto U2 = [&](int i, int j) {  // mirror in x, antisym in y
    double s = 1.0;
    if (i < 0) i = 0;
    if (i >= nx) i = nx - 1;
    if (j < 0) { j = 0; s = -s; }
    if (j >= ny) { j = ny - 1; s = -s; }
    return s * u2(i, j);
  };
  auto PHI = [&](int i, int j) {
    if (i < 0) i = 0;
    if (i >= nx) i = nx - 1;
    if (j < 0) j = 0;
    if (j >= ny) j = ny - 1;
    return phi(i, j);
  };

  Array2d m11(nx, ny), m12(nx, ny), m22(nx, ny), flux_x(nx, ny), flux_y(nx, ny), s(nx, ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double g11 = (U1(i + 1, j) - U1(i - 1, j)) / (2 * hx);
      const double g12 = (U1(i, j + 1) - U1(i, j - 1)) / (2 * hy);
      const double g21 = (U2(i + 1, j) - U2(i - 1, j)) / (2 * hx);
      const double g22 = (U2(i, j + 1) - U2(i, j - 1)) / (2 * hy);
      const double dv = g11 + g22;
      m11(i, j) = inv_rho0 * (2.0 * eta0 * g11 - (2.0 / 3.0) * eta0 * dv);
      m12(i, j) = inv_rho0 * eta0 * (g12 + g21);
      m22(i, j) = inv_rho0 * (2.0 * eta0 * g22 - (2.0 / 3.0) * eta0 * dv);
      const double px = (PHI(i + 1, j) - PHI(i - 1, j)) / (2 * hx);
      const double py = (PHI(i, j + 1) - PHI(i, j - 1)) / (2 * hy);
      flux_x(i, j) = ctil * px;
      flux_y(i, j) = ctil * py;
    }

  auto mirror_x = [&](const Array2d& a, int i, int j) {
    return a(std::clamp(i, 0, nx - 1), j);
  };
  auto mirror_y = [&](const Array2d& a, int i, int j) {
    return a(i, std::clamp(j, 0, ny - 1));
  };
  auto anti_x = [&](const Array2d& a, int i, int j) {
    double sg = 1.0;
    if (i < 0) { i = 0; sg = -1.0; }
    if (i >= nx) { i = nx - 1; sg = -1.0; }
    return sg * a(i, j);
  };
  auto anti_y = [&](const Array2d& a, int i, int j) {
    double sg = 1.0;
    if (j < 0) { j = 0; sg = -1.0; }
    if (j >= ny) { j = ny - 1; sg = -1.0; }
    return sg * a(i, j);
  };

  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      s(i, j) = (anti_x(flux_x, i + 1, j) - anti_x(flux_x, i - 1, j)) / (2 * hx) +
                (anti_y(flux_y, i, j + 1) - anti_y(flux_y, i, j - 1)) / (2 * hy);

  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      r1(i, j) = -((mirror_x(m11, i + 1, j) - mirror_x(m11, i - 1, j)) / (2 * hx) +
                   (anti_y(m12, i, j + 1) - anti_y(m12, i, j - 1)) / (2 * hy)) +
                 (mirror_x(s, i + 1, j) - mirror_x(s, i - 1, j)) / (2 * hx) + u1(i, j) / dt;
      r2(i, j) = -((anti_x(m12, i + 1, j) - anti_x(m12, i - 1, j)) / (2 * hx) +
                   (mirror_y(m22, i, j + 1) - mirror_y(m22, i, j - 1)) / (2 * hy)) +
                 (mirror_y(s, i, j + 1) - mirror_y(s, i, j - 1)) / (2 * hy) + u2(i, j) / dt;
      rp(i, j) = -((U1(i + 1, j) - U1(i - 1, j)) / (2 * hx) +
                   (U2(i, j + 1) - U2(i, j - 1)) / (2 * hy)) /
                     alpha +
                 phi(i, j) / dt;
    }

  const double fx = a0 * inv_rho0 / hx, fy = a0 * inv_rho0 / hy;
  for (int j = 0; j < ny; ++j) {
    const double wlo = 1.5 * u2(0, j) - 0.5 * u2(1, j);
    r2(0, j) += 1.5 * fx * wlo;
    r2(1, j) += -0.5 * fx * wlo;
    const double whi = 1.5 * u2(nx - 1, j) - 0.5 * u2(nx - 2, j);
    r2(nx - 1, j) += 1.5 * fx * whi;
    r2(nx - 2, j) += -0.5 * fx * whi;
  }
  for (int i = 0; i < nx; ++i) {
    const double wlo = 1.5 * u1(i, 0) - 0.5 * u1(i, 1);
    r1(i, 0) += 1.5 * fy * wlo;
    r1(i, 1) += -0.5 * fy * wlo;
    const double whi = 1.5 * u1(i, ny - 1) - 0.5 * u1(i, ny - 2);
    r1(i, ny - 1) += 1.5 * fy * whi;
    r1(i, ny - 2) += -0.5 * fy * whi;
  }
}

Eigen::VectorXd stack(const Array2d& a, const Array2d& b, const Array2d& c) {
  const int n = static_cast<int>(a.size());
  Eigen::VectorXd v(3 * n);
  v.segment(0, n) = Eigen::Map<const Eigen::VectorXd>(a.data(), n);
  v.segment(n, n) = Eigen::Map<const Eigen::VectorXd>(b.data(), n);
  v.segment(2 * n, n) = Eigen::Map<const Eigen::VectorXd>(c.data(), n);
  return v;
}

}  // namespace

TEST_CASE("assembled operator annihilates the zero state and spatial constants") {
  Grid g(16, 16, 1.0, 1.0);
  PhysParams p = PhysParams::make(-0.5, 2.0, 1.0, false);
  ScalarField phi0 = sample(g, [](double, double) { return 0.1; });
  LinearStepSystem sys(phi0, 0.02, p);

  Array2d z = Array2d::Zero(g.nx, g.ny), o1(g.nx, g.ny), o2(g.nx, g.ny), op(g.nx, g.ny);
  sys.apply(z, z, z, o1, o2, op);
  CHECK(o1.abs().maxCoeff() == 0.0);
  CHECK(o2.abs().maxCoeff() == 0.0);
  CHECK(op.abs().maxCoeff() == 0.0);

  // (u,phi) = (0, const): spatial blocks kill the constant exactly.
  Array2d c = Array2d::Constant(g.nx, g.ny, 1.7);
  sys.apply_spatial(z, z, c, o1, o2, op);
  CHECK(o1.abs().maxCoeff() == 0.0);
  CHECK(o2.abs().maxCoeff() == 0.0);
  CHECK(op.abs().maxCoeff() == 0.0);
}

TEST_CASE("two independent assembly paths agree at phi_ref == 0") {
  Grid g(20, 16, 1.0, 0.8);
  PhysParams p = PhysParams::make(-0.5, 2.0, 1.3, false);
  ScalarField phi0(g);  // zero
  const double dt = 0.05;
  LinearStepSystem sys(phi0, dt, p);

  ScalarField smooth = random_neumann_smooth(g, 17);
  VectorField u = random_tangent(g, 18);
  Array2d r1(g.nx, g.ny), r2(g.nx, g.ny), rp(g.nx, g.ny);
  const double inv_rho0 = 1.0 / 0.75;
  reference_apply_const(g, p.alpha, inv_rho0, 1.5, inv_rho0 * 3.0, p.a0, dt, u.u1, u.u2,
                        smooth.values, r1, r2, rp);

  Eigen::VectorXd x = stack(u.u1, u.u2, smooth.values);
  Eigen::VectorXd y = sys.matrix() * x;
  Eigen::VectorXd want = stack(r1, r2, rp);
  CHECK((y - want).norm() <= 1e-12 * want.norm());
}

TEST_CASE("operator action is second-order consistent on manufactured fields") {
  // phi_ref constant, so the continuum action has closed form:
  //   row u  : -(eta0/rho0)(lap u + grad(div u)/3) + ctil * grad(lap phi)
  //   row phi: -(1/alpha) div u
  PhysParams p = PhysParams::make(-0.5, 2.0, 1.0, false);
  const double phic = 0.1;
  const double rho0 = 0.5 * p.eps * phic + 1.0 + 0.5 * p.eps;
  const double eta0 = 0.5 * (p.nu - 1.0) * phic + 0.5 * (p.nu + 1.0);
  const double ctil = (1.0 / rho0) * (1.0 / p.alpha - phic);

  auto err = [&](int n) {
    Grid g(n, n, 1.0, 1.0);
    const double a = M_PI / g.Lx, b = M_PI / g.Ly;
    auto s4 = [](double t) { return std::pow(std::sin(t), 4); };
    auto ds4 = [](double t) { return 4.0 * std::pow(std::sin(t), 3) * std::cos(t); };
    auto d2s4 = [](double t) {
      const double s = std::sin(t), c = std::cos(t);
      return 4.0 * s * s * (3.0 * c * c - s * s);
    };

    VectorField u = sample_vector(
        g, [&](double x, double y) { return std::sin(a * x) * s4(b * y); },
        [&](double x, double y) { return s4(a * x) * std::sin(b * y); });
    ScalarField phi = sample(g, [&](double x, double y) {
      return std::cos(a * x) * std::cos(b * y);
    });
    ScalarField phi0 = sample(g, [&](double, double) { return phic; });
    LinearStepSystem sys(phi0, 1.0, p);
    Array2d o1(n, n), o2(n, n), op(n, n);
    sys.apply_spatial(u.u1, u.u2, phi.values, o1, o2, op);

    double e2 = 0.0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double x = g.x(i), y = g.y(j);
        const double sax = std::sin(a * x), cax = std::cos(a * x);
        const double sby = std::sin(b * y), cby = std::cos(b * y);
        const double lap_u1 = -a * a * sax * s4(b * y) + b * b * sax * d2s4(b * y);
        const double lap_u2 = a * a * d2s4(a * x) * sby - b * b * s4(a * x) * sby;
        const double div_u = a * cax * s4(b * y) + b * s4(a * x) * cby;
        const double ddiv_dx = -a * a * sax * s4(b * y) + a * b * ds4(a * x) * cby;
        const double ddiv_dy = a * b * cax * ds4(b * y) - b * b * s4(a * x) * sby;
        // grad(lap phi) = -(a^2+b^2) grad(phi), grad(phi) = (-a sax cby, -b cax sby)
        const double glap_x = (a * a + b * b) * a * sax * cby;
        const double glap_y = (a * a + b * b) * b * cax * sby;
        const double want1 = -(eta0 / rho0) * (lap_u1 + ddiv_dx / 3.0) + ctil * glap_x;
        const double want2 = -(eta0 / rho0) * (lap_u2 + ddiv_dy / 3.0) + ctil * glap_y;
        const double wantp = -div_u / p.alpha;
        e2 += std::pow(o1(i, j) - want1, 2) + std::pow(o2(i, j) - want2, 2) +
              std::pow(op(i, j) - wantp, 2);
      }
    return std::sqrt(g.cell_area() * e2);
  };

  CHECK(observed_order(err(32), err(64)) >= 1.9);
}

TEST_CASE("solve: zero rhs, round trip, and residual contract") {
  Grid g(24, 24, 1.0, 1.0);
  PhysParams p = PhysParams::make(-0.5, 1.5, 1.0, false);
  ScalarField phi0 = random_neumann_smooth(g, 5, 2, 0.3);
  LinearStepSystem sys(phi0, 0.01, p);

  ScalarField zrhs(g);
  VectorField zv(g);
  apply_parity_bc(zv);
  auto zero = sys.solve(zv, zrhs);
  CHECK(zero.u.u1.abs().maxCoeff() == 0.0);
  CHECK(zero.u.u2.abs().maxCoeff() == 0.0);
  CHECK(zero.phi.values.abs().maxCoeff() == 0.0);

  VectorField ustar = random_tangent(g, 6);
  ScalarField pstar = random_rough(g, 7, false);
  Array2d b1(g.nx, g.ny), b2(g.nx, g.ny), bp(g.nx, g.ny);
  sys.apply(ustar.u1, ustar.u2, pstar.values, b1, b2, bp);
  VectorField rhs_u(g);
  apply_parity_bc(rhs_u);
  rhs_u.u1 = b1;
  rhs_u.u2 = b2;
  ScalarField rhs_phi(g, bp, ScalarBc::Neumann);
  auto sol = sys.solve(rhs_u, rhs_phi);
  const double scale = std::sqrt(ustar.sq_sum() + pstar.values.square().sum());
  const double diff = std::sqrt((sol.u.u1 - ustar.u1).square().sum() +
                                (sol.u.u2 - ustar.u2).square().sum() +
                                (sol.phi.values - pstar.values).square().sum());
  CHECK(diff <= 1e-9 * scale);
}

TEST_CASE("large-dt solutions approach the stationary solve") {
  Grid g(24, 24, 1.0, 1.0);
  PhysParams p = PhysParams::make(-0.5, 1.0, 1.0, false);
  ScalarField phi0 = sample(g, [](double x, double y) {
    return 0.05 * std::cos(M_PI * x) * std::cos(M_PI * y);
  });
  VectorField rhs_u = sample_vector(
      g,
      [](double x, double y) { return std::sin(M_PI * x) * std::pow(std::sin(M_PI * y), 2); },
      [](double x, double y) { return std::pow(std::sin(M_PI * x), 2) * std::sin(M_PI * y); });
  ScalarField rhs_phi(g);

  LinearStepSystem sys(phi0, 1e6, p);
  auto sol_a = sys.solve(rhs_u, rhs_phi);
  sys.set_dt(1e8);
  auto sol_b = sys.solve(rhs_u, rhs_phi);

  const double nb = std::sqrt(sol_b.u.sq_sum() + sol_b.phi.values.square().sum());
  const double d = std::sqrt((sol_a.u.u1 - sol_b.u.u1).square().sum() +
                             (sol_a.u.u2 - sol_b.u.u2).square().sum() +
                             (sol_a.phi.values - sol_b.phi.values).square().sum());
  CHECK(d <= 1e-4 * nb);
}

TEST_CASE("u-u block is symmetric positive definite") {
  Grid g(16, 16, 1.0, 1.0);
  PhysParams p = PhysParams::make(-0.5, 2.0, 1.0, false);
  const double dt = 0.5;

  auto check_block = [&](const ScalarField& phi0, bool check_shift) {
    LinearStepSystem sys(phi0, dt, p);
    const int n2 = 2 * g.cells();
    Eigen::MatrixXd block = Eigen::MatrixXd(sys.matrix()).topLeftCorner(n2, n2);
    const double defect = (block - block.transpose()).norm() / block.norm();
    CHECK(defect <= 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (block + block.transpose()),
                                                      Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    if (check_shift) CHECK(es.eigenvalues().minCoeff() >= 0.999 / dt);
  };

  ScalarField constant = sample(g, [](double, double) { return 0.2; });
  check_block(constant, true);
  // The form-based assembly keeps the block symmetric for varying
  // coefficients as well.
  ScalarField varying = random_neumann_smooth(g, 9, 2, 0.3);
  check_block(varying, false);
}

TEST_CASE("coefficient sign guard") {
  Grid g(8, 8, 1.0, 1.0);
  PhysParams p = PhysParams::make(-0.5, 1.0, 1.0, false);  // 1/alpha = 3
  ScalarField phi0 = sample(g, [](double, double) { return 3.5; });
  CHECK_THROWS_AS(LinearStepSystem(phi0, 0.1, p), CoefficientSignError);
}

TEST_SUITE_END();

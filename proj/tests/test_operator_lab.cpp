#include <doctest.h>

#include <cmath>

#include "qchns/operator_lab.hpp"
#include "test_util.hpp"

using namespace qchns;
using namespace qchns::test;

TEST_SUITE_BEGIN("operator_lab");

namespace {

std::shared_ptr<LabWorkspace> workspace(int n) {
  return std::make_shared<LabWorkspace>(Grid(n, n, 1.0, 1.0));
}

}  // namespace

TEST_CASE("flat-coefficient bundle: self-adjointness, positivity, mass-like damping form") {
  auto ws = workspace(16);
  PhysParams p = PhysParams::make(-0.5, 1.0, 1.0, false);
  ScalarField zero(ws->grid(), ScalarBc::Neumann);
  DiscreteOperatorBundle bundle(ws, zero, p);

  SelfAdjointReport r = check_selfadjoint_positivity(bundle);
  CHECK(r.defect_A <= 1e-10);
  CHECK(r.defect_B <= 1e-10);
  CHECK(r.min_eig_A > 0.0);
  CHECK(r.min_eig_B > 0.0);

  // For constant coefficients the damping form is alpha*b(0)*area*identity on
  // the orthonormal mean-zero basis.
  const double b0 = (4.0 / 3.0) * 1.0 / 0.75;
  const Eigen::MatrixXd want = p.alpha * b0 * ws->grid().cell_area() *
                               Eigen::MatrixXd::Identity(bundle.damping_form().rows(),
                                                         bundle.damping_form().cols());
  CHECK((bundle.damping_form() - want).norm() <= 1e-12 * want.norm());

  // Doubling the coefficients doubles the damping operator's smallest
  // eigenvalue in the dual metric.
  DiscreteOperatorBundle doubled(ws, zero, p, 2.0);
  SelfAdjointReport r2 = check_selfadjoint_positivity(doubled);
  CHECK(r2.min_eig_B == doctest::Approx(2.0 * r.min_eig_B).epsilon(1e-10));
}

TEST_CASE("square-root bracket: constant anchor and uniform-scaling invariance") {
  auto ws = workspace(16);
  PhysParams p = PhysParams::make(-0.5, 1.0, 1.0, false);
  ScalarField zero(ws->grid(), ScalarBc::Neumann);

  DiscreteOperatorBundle flat(ws, zero, p);
  SqrtBracketReport br = check_sqrt_bracket(flat);
  const double b0 = (4.0 / 3.0) / 0.75;
  const double c0 = 3.0 / 0.75;
  const double anchor = std::sqrt(p.alpha) * b0 / std::sqrt(c0);
  CHECK(br.rho1 == doctest::Approx(anchor).epsilon(1e-8));
  CHECK(br.rho2 == doctest::Approx(anchor).epsilon(1e-8));

  ScalarField phi0 = smooth_mode_field(ws->grid(), 33, 2, 0.45);
  DiscreteOperatorBundle smooth(ws, phi0, p);
  DiscreteOperatorBundle scaled(ws, phi0, p, 2.0);
  SqrtBracketReport b1 = check_sqrt_bracket(smooth);
  SqrtBracketReport b2 = check_sqrt_bracket(scaled);
  CHECK(b1.rho1 > 0.0);
  CHECK(b1.rho2 >= b1.rho1);
  CHECK(b2.rho2 / b2.rho1 == doctest::Approx(b1.rho2 / b1.rho1).epsilon(1e-8));
}

TEST_CASE("coupling bound: zero at constant phi0, finite otherwise, checkerboard tamed") {
  auto ws = workspace(16);
  PhysParams p = PhysParams::make(-0.5, 2.0, 1.0, false);
  ScalarField zero(ws->grid(), ScalarBc::Neumann);
  DiscreteOperatorBundle flat(ws, zero, p);
  CouplingBoundReport c0 = check_coupling_bound(flat, 6, 11);
  CHECK(c0.max_ratio <= 1e-12);

  DiscreteOperatorBundle smooth(ws, smooth_mode_field(ws->grid(), 12, 2, 0.45), p);
  CouplingBoundReport c1 = check_coupling_bound(smooth, 40, 11);
  CHECK(std::isfinite(c1.max_ratio));
  CHECK(c1.max_ratio > 0.0);
  CHECK(c1.checkerboard_ratio <= c1.max_ratio);
}

TEST_CASE("korn quotient: positive, rigid motions excluded by wall tangency") {
  Grid g(16, 16, 1.0, 1.0);
  const double k16 = korn_constant(g, 1.0);
  CHECK(k16 > 0.0);
  CHECK(std::isfinite(k16));
  CHECK(k16 < 1.0);  // |Du| <= |grad u| pointwise makes the quotient < 1

  // A rotation is not wall tangent on a box: its deformation form energy
  // under the tangency wall closures stays well away from zero, and so do
  // rigid translations.
  VectorField rot = sample_vector(
      g, [](double, double y) { return y - 0.5; }, [](double x, double) { return -(x - 0.5); });
  CHECK(compact_deformation_energy(g, rot.u1, rot.u2) > 1e-2);
  VectorField trans = sample_vector(g, [](double, double) { return 1.0; },
                                    [](double, double) { return 0.0; });
  CHECK(compact_deformation_energy(g, trans.u1, trans.u2) > 1e-2);
}

TEST_CASE("stokes operator with slip: SPD, friction monotonicity, Korn coercivity") {
  auto ws = workspace(12);
  PhysParams p = PhysParams::make(-0.5, 1.0, 1.0, false);
  ScalarField phi0 = smooth_mode_field(ws->grid(), 4, 2, 0.4);
  DiscreteOperatorBundle bundle(ws, phi0, p);
  StokesOperatorReport r = check_stokes_operator(bundle);
  CHECK(r.symmetry_defect <= 1e-10);
  CHECK(r.min_eig > 0.0);
  CHECK(std::isfinite(r.max_eig / r.min_eig));
  // The cellwise bound 2 D:D - (2/3)(div)^2 >= (2/3) D:D makes 1/3 of
  // min(2 eta/rho0) * korn a guaranteed floor.
  CHECK(r.coercivity_ratio >= 0.33);

  PhysParams p10 = PhysParams::make(-0.5, 1.0, 10.0, false);
  DiscreteOperatorBundle b10(ws, phi0, p10);
  StokesOperatorReport r10 = check_stokes_operator(b10);
  CHECK(r10.min_eig >= r.min_eig - 1e-12);
}

TEST_CASE("block triangle structure and pinning variants") {
  auto ws = workspace(12);
  PhysParams p = PhysParams::make(-0.5, 1.0, 1.0, false);
  DiscreteOperatorBundle bundle(ws, smooth_mode_field(ws->grid(), 5, 2, 0.4), p);
  BlockStructureReport r = check_block_structure(bundle);
  CHECK(r.zero_blocks_exact);
  CHECK(std::isfinite(r.abscissa_pinned));
  CHECK(std::isfinite(r.abscissa_unpinned));
  // The damped wave structure keeps the pinned generator's spectrum in the
  // closed left half plane (up to eigensolver rounding).
  CHECK(r.abscissa_pinned <= 1e-8);
}

TEST_CASE("resolvent sector sweep stays bounded") {
  auto ws = workspace(12);
  PhysParams p = PhysParams::make(-0.5, 1.0, 1.0, false);
  DiscreteOperatorBundle bundle(ws, smooth_mode_field(ws->grid(), 6, 2, 0.4), p);
  const double bound = resolvent_sector_bound(bundle, 0.35);
  CHECK(std::isfinite(bound));
  CHECK(bound < 1e4);
}

TEST_SUITE_END();

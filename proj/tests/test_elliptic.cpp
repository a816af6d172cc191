#include <doctest.h>

#include <cmath>

#include "qchns/elliptic.hpp"
#include "qchns/errors.hpp"
#include "test_util.hpp"

using namespace qchns;
using namespace qchns::test;

TEST_SUITE_BEGIN("elliptic");

TEST_CASE("zero rhs gives the zero solution exactly") {
  Grid g(16, 16, 1.0, 1.0);
  NeumannPoissonSolver solver(g);
  ScalarField f(g);
  ScalarField u = solver.solve(f);
  CHECK(u.values.abs().maxCoeff() == 0.0);
}

TEST_CASE("cos*cos eigenfunction converges at second order") {
  auto err = [](int n) {
    Grid g(n, n, 1.0, 1.0);
    NeumannPoissonSolver solver(g);
    const double lam = 2.0 * M_PI * M_PI;
    ScalarField f = sample(g, [](double x, double y) {
      return -2.0 * M_PI * M_PI * std::cos(M_PI * x) * std::cos(M_PI * y);
    });
    ScalarField u = solver.solve(f);
    ScalarField want = sample(g, [](double x, double y) {
      return std::cos(M_PI * x) * std::cos(M_PI * y);
    });
    want.values -= want.values.mean();
    (void)lam;
    return l2_err(u, want);
  };
  const double e32 = err(32), e64 = err(64);
  CHECK(observed_order(e32, e64) >= 1.9);
}

TEST_CASE("residual oracle on a rough mean-zero rhs") {
  Grid g(48, 40, 1.0, 1.4);
  NeumannPoissonSolver solver(g);
  ScalarField f = random_rough(g, 99, true);
  ScalarField u = solver.solve(f);
  CHECK(std::abs(u.mean()) <= 1e-12 * l2_norm(f));
  ScalarField r = solver.apply(u);
  r.values -= f.values;
  CHECK(l2_norm(r) <= 1e-8 * l2_norm(f));
}

TEST_CASE("compatibility violation is reported") {
  Grid g(16, 16, 1.0, 1.0);
  NeumannPoissonSolver solver(g);
  ScalarField f = sample(g, [](double, double) { return 1.0; });
  CHECK_THROWS_AS(solver.solve(f), CompatibilityViolated);
}

TEST_CASE("H^-1 inner product is nonnegative on mean-zero data") {
  Grid g(24, 24, 1.0, 1.0);
  NeumannPoissonSolver solver(g);
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    ScalarField f = random_rough(g, seed, true);
    CHECK(h_minus1_inner(solver, f, f) >= 0.0);
  }
}

TEST_CASE("conjugate-gradient backend agrees with the direct one") {
  Grid g(48, 48, 1.0, 1.0);
  NeumannPoissonSolver direct(g, NeumannStencil::Compact, EllipticBackend::Direct);
  NeumannPoissonSolver cg(g, NeumannStencil::Compact, EllipticBackend::ConjugateGradient);
  ScalarField f = random_rough(g, 7, true);
  ScalarField ud = direct.solve(f);
  ScalarField uc = cg.solve(f);
  CHECK(l2_err(uc, ud) <= 1e-7 * l2_norm(ud));
}

TEST_CASE("projection annihilates gradients and fixes divergence-free fields") {
  Grid g(32, 32, 1.0, 1.0);
  HelmholtzProjector proj(g);

  ScalarField p = random_neumann_smooth(g, 21);
  VectorField gp = gradient(p);
  auto res = proj.project(gp);
  CHECK(l2_norm(res.w) <= 1e-10 * l2_norm(gp));

  VectorField v = random_tangent(g, 22);
  VectorField w = proj.project(v).w;  // discrete divergence-free by construction
  auto again = proj.project(w);
  VectorField diff = again.w;
  diff.u1 -= w.u1;
  diff.u2 -= w.u2;
  CHECK(l2_norm(diff) <= 1e-10 * l2_norm(w));
  CHECK(l2_norm(again.q) <= 1e-10 * l2_norm(w));
}

TEST_CASE("projection idempotence and orthogonality on random fields") {
  Grid g(32, 32, 1.0, 1.0);
  HelmholtzProjector proj(g);
  for (uint64_t seed = 0; seed < 5; ++seed) {
    VectorField v = random_tangent(g, 100 + seed);
    auto r1 = proj.project(v);
    auto r2 = proj.project(r1.w);
    VectorField diff = r2.w;
    diff.u1 -= r1.w.u1;
    diff.u2 -= r1.w.u2;
    CHECK(l2_norm(diff) <= 1e-10 * l2_norm(v));

    // L2-orthogonality against an arbitrary Neumann gradient.
    ScalarField q = random_neumann_smooth(g, 200 + seed);
    VectorField gq = gradient(q);
    const double ip = l2_inner(r1.w, gq);
    CHECK(std::abs(ip) <= 1e-8 * l2_norm(r1.w) * l2_norm(gq));

    // The projected field stays wall-tangent: its divergence still sums to
    // zero exactly.
    CHECK(std::abs(divergence(r1.w).mean()) <= 1e-11 * l2_norm(r1.w));
  }
}

TEST_CASE("projection is linear") {
  Grid g(24, 24, 1.0, 1.0);
  HelmholtzProjector proj(g);
  VectorField a = random_tangent(g, 31), b = random_tangent(g, 32);
  VectorField combo(g);
  apply_parity_bc(combo);
  combo.u1 = 2.0 * a.u1 - 0.5 * b.u1;
  combo.u2 = 2.0 * a.u2 - 0.5 * b.u2;
  VectorField wc = proj.project(combo).w;
  VectorField wa = proj.project(a).w, wb = proj.project(b).w;
  VectorField want(g);
  want.u1 = 2.0 * wa.u1 - 0.5 * wb.u1;
  want.u2 = 2.0 * wa.u2 - 0.5 * wb.u2;
  wc.u1 -= want.u1;
  wc.u2 -= want.u2;
  CHECK(l2_norm(wc) <= 1e-10 * (l2_norm(a) + l2_norm(b)));
}

TEST_SUITE_END();

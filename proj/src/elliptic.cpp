#include "qchns/elliptic.hpp"

#include <cmath>

#include "qchns/errors.hpp"
#include "qchns/stencil_probe.hpp"

namespace qchns {

namespace {

Eigen::Map<const Eigen::VectorXd> as_vector(const Array2d& a) {
  return {a.data(), a.size()};
}

constexpr double kDirectCellLimit = 256.0 * 256.0;
constexpr double kCgTol = 1e-10;

}  // namespace

NeumannPoissonSolver::NeumannPoissonSolver(const Grid& g, NeumannStencil stencil,
                                           EllipticBackend backend)
    : grid_(g), stencil_(stencil) {
  const int n = g.cells();
  const int radius = (stencil == NeumannStencil::Compact) ? 1 : 2;
  lap_ = probe_stencil_matrix(g, 1, 1, radius, [this](const std::vector<Array2d>& in,
                                                      std::vector<Array2d>& out) {
    if (stencil_ == NeumannStencil::Compact) {
      ScalarField f(grid_, in[0], ScalarBc::Neumann);
      out[0] = laplacian(f).values;
    } else {
      const GhostSigma mx = GhostSigma::constant(grid_.ny, 1.0);
      const GhostSigma my = GhostSigma::constant(grid_.nx, 1.0);
      const GhostSigma ax = GhostSigma::constant(grid_.ny, -1.0);
      const GhostSigma ay = GhostSigma::constant(grid_.nx, -1.0);
      out[0] = dx_central(dx_central(in[0], grid_.hx(), mx), grid_.hx(), ax) +
               dy_central(dy_central(in[0], grid_.hy(), my), grid_.hy(), ay);
    }
  });

  use_direct_ = (backend == EllipticBackend::Direct) ||
                (backend == EllipticBackend::Auto && n <= kDirectCellLimit);
  if (use_direct_) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(lap_.nonZeros() + 2 * n);
    for (int k = 0; k < lap_.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(lap_, k); it; ++it)
        trip.emplace_back(it.row(), it.col(), it.value());
    for (int i = 0; i < n; ++i) {
      trip.emplace_back(n, i, 1.0);
      trip.emplace_back(i, n, 1.0);
    }
    augmented_.resize(n + 1, n + 1);
    augmented_.setFromTriplets(trip.begin(), trip.end());
    lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu_->compute(augmented_);
    if (lu_->info() != Eigen::Success)
      throw SingularSystem("NeumannPoissonSolver: factorization of the pinned system failed");
  } else {
    jacobi_inv_.resize(n);
    for (int i = 0; i < n; ++i) {
      const double d = lap_.coeff(i, i);
      jacobi_inv_(i) = (d != 0.0) ? 1.0 / std::abs(d) : 1.0;
    }
  }
}

ScalarField NeumannPoissonSolver::apply(const ScalarField& f) const {
  ScalarField out(grid_, ScalarBc::Neumann);
  Eigen::VectorXd y = lap_ * as_vector(f.values);
  out.values = Eigen::Map<const Array2d>(y.data(), grid_.nx, grid_.ny);
  return out;
}

ScalarField NeumannPoissonSolver::solve(const ScalarField& f) const {
  if (!f.finite()) throw NonFiniteInput("NeumannPoissonSolver::solve: non-finite rhs");
  const int n = grid_.cells();
  const double rms = std::sqrt(f.values.square().sum() / n);
  const double mean = f.mean();
  if (rms == 0.0 && mean == 0.0) return ScalarField(grid_, ScalarBc::Neumann);
  if (std::abs(mean) > 1e-10 * rms)
    throw CompatibilityViolated("NeumannPoissonSolver::solve: rhs mean exceeds 1e-10 * ||rhs||");

  Eigen::VectorXd rhs = as_vector(f.values);
  rhs.array() -= mean;

  ScalarField u = use_direct_ ? solve_direct(rhs) : solve_cg(rhs);
  u.values -= u.values.mean();
  return u;
}

ScalarField NeumannPoissonSolver::solve_direct(const Eigen::VectorXd& rhs) const {
  const int n = grid_.cells();
  Eigen::VectorXd b(n + 1);
  b.head(n) = rhs;
  b(n) = 0.0;
  Eigen::VectorXd x = lu_->solve(b);
  if (lu_->info() != Eigen::Success)
    throw SolverDiverged("NeumannPoissonSolver: direct solve failed");
  // One refinement pass keeps the residual at rounding level.
  Eigen::VectorXd r = b - augmented_ * x;
  x += lu_->solve(r);
  ScalarField u(grid_, ScalarBc::Neumann);
  u.values = Eigen::Map<const Array2d>(x.data(), grid_.nx, grid_.ny);
  return u;
}

ScalarField NeumannPoissonSolver::solve_cg(const Eigen::VectorXd& rhs) const {
  // CG on -lap (positive semidefinite, compatible rhs), mean projected out of
  // every iterate so the singular direction never enters.
  const int n = grid_.cells();
  auto project = [n](Eigen::VectorXd& v) { v.array() -= v.mean(); };

  Eigen::VectorXd b = -rhs;
  project(b);
  const double bnorm = b.norm();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = b;
  Eigen::VectorXd z = jacobi_inv_.cwiseProduct(r);
  project(z);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  const int max_iters = 20 * n;
  double best = r.norm() / bnorm;
  int stalled = 0;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd q = -(lap_ * p);
    project(q);
    const double pq = p.dot(q);
    if (pq <= 0.0) throw SolverDiverged("NeumannPoissonSolver: CG lost positive definiteness");
    const double alpha = rz / pq;
    x += alpha * p;
    r -= alpha * q;
    const double rel = r.norm() / bnorm;
    if (rel < kCgTol) {
      ScalarField u(grid_, ScalarBc::Neumann);
      u.values = Eigen::Map<const Array2d>(x.data(), grid_.nx, grid_.ny);
      return u;
    }
    if (rel < 0.999 * best) {
      best = rel;
      stalled = 0;
    } else if (++stalled > 200) {
      throw SolverDiverged("NeumannPoissonSolver: CG residual stalled above tolerance");
    }
    z = jacobi_inv_.cwiseProduct(r);
    project(z);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  throw SolverDiverged("NeumannPoissonSolver: CG iteration limit reached");
}

double h_minus1_inner(const NeumannPoissonSolver& compact, const ScalarField& f,
                      const ScalarField& g) {
  ScalarField gf = compact.solve(f);
  gf.values = -gf.values;
  return l2_inner(gf, g);
}

HelmholtzProjector::Result HelmholtzProjector::project(const VectorField& v) const {
  if (!v.finite()) throw NonFiniteInput("HelmholtzProjector: non-finite input");
  ScalarField d = divergence(v);
  // Wall tangency makes the divergence sum to zero exactly; scrub the
  // rounding residue so the compatibility guard stays strict for callers
  // that pass genuinely incompatible data.
  d.values -= d.values.mean();
  Result res;
  res.q = solver_.solve(d);
  const VectorField grad_q = gradient(res.q);
  res.w = v;
  res.w.u1 -= grad_q.u1;
  res.w.u2 -= grad_q.u2;
  apply_parity_bc(res.w);
  return res;
}

}  // namespace qchns

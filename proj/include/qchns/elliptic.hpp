#pragma once

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <memory>

#include "qchns/grid.hpp"
#include "qchns/operators.hpp"

namespace qchns {

/// Which discrete Laplacian the solver inverts.
///
/// Compact: the 5-point Neumann Laplacian; realizes G = inverse of the weak
/// Neumann Laplacian, the H^-1 metric, and the constraint residual.
///
/// Composed: divergence(gradient(.)) built from the centered first-difference
/// operators. The Helmholtz projection must invert exactly this composition,
/// otherwise P is only idempotent up to discretization error.
enum class NeumannStencil { Compact, Composed };

enum class EllipticBackend { Auto, Direct, ConjugateGradient };

/// Solver for the Neumann Poisson problem on mean-zero data. The singular
/// mean mode is pinned by a rank-one augmentation (appended constraint row),
/// which keeps the factorized system symmetric in pattern and the returned
/// solution mean-free.
class NeumannPoissonSolver {
 public:
  explicit NeumannPoissonSolver(const Grid& g, NeumannStencil stencil = NeumannStencil::Compact,
                                EllipticBackend backend = EllipticBackend::Auto);

  /// Solve lap(u) = f for mean-zero f. Throws CompatibilityViolated when the
  /// mean of f exceeds 1e-10 * ||f||, SolverDiverged when the iterative
  /// backend stalls. The result has mean zero to rounding.
  ScalarField solve(const ScalarField& f) const;

  /// Action of the discrete Laplacian this solver inverts.
  ScalarField apply(const ScalarField& f) const;

  const Grid& grid() const { return grid_; }
  NeumannStencil stencil() const { return stencil_; }
  const Eigen::SparseMatrix<double>& matrix() const { return lap_; }

 private:
  ScalarField solve_direct(const Eigen::VectorXd& rhs) const;
  ScalarField solve_cg(const Eigen::VectorXd& rhs) const;

  Grid grid_;
  NeumannStencil stencil_;
  bool use_direct_ = true;
  Eigen::SparseMatrix<double> lap_;        // n x n discrete Laplacian
  Eigen::SparseMatrix<double> augmented_;  // (n+1) x (n+1) with constraint row
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
  Eigen::VectorXd jacobi_inv_;  // preconditioner for the CG path
};

/// Discrete H^-1 inner product <f,g> = (-G f, g)_L2 on mean-zero fields,
/// with G from the compact solver.
double h_minus1_inner(const NeumannPoissonSolver& compact, const ScalarField& f,
                      const ScalarField& g);

/// Helmholtz projection P u = u - grad(q), q = (div grad)^{-1} div u.
/// Holds the factorization of the composed operator so repeated projections
/// are cheap and algebraically idempotent.
class HelmholtzProjector {
 public:
  explicit HelmholtzProjector(const Grid& g, EllipticBackend backend = EllipticBackend::Auto)
      : solver_(g, NeumannStencil::Composed, backend) {}

  struct Result {
    VectorField w;  // divergence-free, wall-tangent part
    ScalarField q;  // potential of the gradient part
  };

  /// v must be wall-tangent (normal ghosts antisymmetric), which makes the
  /// divergence sum to zero exactly.
  Result project(const VectorField& v) const;

  const NeumannPoissonSolver& solver() const { return solver_; }

 private:
  NeumannPoissonSolver solver_;
};

}  // namespace qchns

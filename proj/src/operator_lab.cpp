#include "qchns/operator_lab.hpp"

#include <Eigen/SparseLU>
#include <array>
#include <cmath>
#include <complex>
#include <random>
#include <sstream>

#include "qchns/errors.hpp"
#include "qchns/stencil_probe.hpp"

namespace qchns {

namespace {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m, double* defect) {
  const double d = (m - m.transpose()).norm() / std::max(m.norm(), 1e-300);
  if (defect) *defect = d;
  return 0.5 * (m + m.transpose());
}

/// Largest eigenvalue of KD^{-1} KH by power iteration (both sparse SPD);
/// the reciprocal is the smallest generalized eigenvalue of (KD, KH).
double min_generalized_eig(const Eigen::SparseMatrix<double>& kd,
                           const Eigen::SparseMatrix<double>& kh) {
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(kd);
  if (lu.info() != Eigen::Success) throw SingularSystem("korn: factorization failed");
  const int n = static_cast<int>(kd.rows());
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  for (int i = 0; i < n; ++i) x(i) += 0.3 * std::sin(1.0 + 0.7 * i);
  x.normalize();
  double ray = 0.0;
  for (int it = 0; it < 3000; ++it) {
    Eigen::VectorXd y = lu.solve(kh * x);
    const double ray_new = x.dot(kh * y) / x.dot(kh * x);
    y.normalize();
    const bool settled = std::abs(ray_new - ray) <= 1e-12 * std::abs(ray_new) && it > 10;
    ray = ray_new;
    x = y;
    if (settled) break;
  }
  return 1.0 / ray;
}

struct Fold {
  int i, j;
  double s;
};

// Single-layer ghost folds under the wall-tangency parity rules.
inline Fold fold_u1(int i, int j, int nx, int ny) {  // antisym in x, mirror in y
  Fold f{i, j, 1.0};
  if (f.i < 0) { f.i = 0; f.s = -f.s; } else if (f.i >= nx) { f.i = nx - 1; f.s = -f.s; }
  if (f.j < 0) f.j = 0; else if (f.j >= ny) f.j = ny - 1;
  return f;
}
inline Fold fold_u2(int i, int j, int nx, int ny) {  // mirror in x, antisym in y
  Fold f{i, j, 1.0};
  if (f.i < 0) f.i = 0; else if (f.i >= nx) f.i = nx - 1;
  if (f.j < 0) { f.j = 0; f.s = -f.s; } else if (f.j >= ny) { f.j = ny - 1; f.s = -f.s; }
  return f;
}

/// One local sampling functional: value = sum_k s_k * u_{c_k}; scattering the
/// same list back keeps the assembled form exactly symmetric.
struct Sample {
  // component (0 = u1, 1 = u2), fold per tap
  std::array<int, 8> comp{};
  std::array<Fold, 8> taps{};
  std::array<double, 8> w{};
  int count = 0;

  void add(int component, const Fold& f, double weight) {
    comp[count] = component;
    taps[count] = f;
    w[count] = weight * f.s;
    ++count;
  }
  double gather(const Array2d& u1, const Array2d& u2) const {
    double v = 0.0;
    for (int k = 0; k < count; ++k)
      v += w[k] * ((comp[k] == 0) ? u1(taps[k].i, taps[k].j) : u2(taps[k].i, taps[k].j));
    return v;
  }
  void scatter(double v, Array2d& o1, Array2d& o2) const {
    for (int k = 0; k < count; ++k)
      ((comp[k] == 0) ? o1 : o2)(taps[k].i, taps[k].j) += w[k] * v;
  }
};

/// Compact deformation-tensor sampling: D11 on x-faces, D22 on y-faces, D12
/// on cell corners, divergence on cells. Visit each sample with its
/// quadrature weight.
template <typename F11, typename F22, typename F12, typename Fdiv>
void visit_deformation_samples(const Grid& g, F11&& on_d11, F22&& on_d22, F12&& on_d12,
                               Fdiv&& on_div) {
  const int nx = g.nx, ny = g.ny;
  const double hx = g.hx(), hy = g.hy(), da = g.cell_area();
  for (int j = 0; j < ny; ++j)
    for (int fi = 0; fi <= nx; ++fi) {
      Sample s;
      s.add(0, fold_u1(fi, j, nx, ny), 1.0 / hx);
      s.add(0, fold_u1(fi - 1, j, nx, ny), -1.0 / hx);
      const double w = (fi == 0 || fi == nx) ? 0.5 * da : da;
      on_d11(s, w, fi == 0 ? 0 : (fi == nx ? nx - 1 : -1), j);
    }
  for (int fj = 0; fj <= ny; ++fj)
    for (int i = 0; i < nx; ++i) {
      Sample s;
      s.add(1, fold_u2(i, fj, nx, ny), 1.0 / hy);
      s.add(1, fold_u2(i, fj - 1, nx, ny), -1.0 / hy);
      const double w = (fj == 0 || fj == ny) ? 0.5 * da : da;
      on_d22(s, w, i, fj == 0 ? 0 : (fj == ny ? ny - 1 : -1));
    }
  for (int cj = 0; cj <= ny; ++cj)
    for (int ci = 0; ci <= nx; ++ci) {
      Sample s;
      // d(u1)/dy averaged over the corner's x-neighbours
      s.add(0, fold_u1(ci - 1, cj, nx, ny), 0.25 / hy);
      s.add(0, fold_u1(ci, cj, nx, ny), 0.25 / hy);
      s.add(0, fold_u1(ci - 1, cj - 1, nx, ny), -0.25 / hy);
      s.add(0, fold_u1(ci, cj - 1, nx, ny), -0.25 / hy);
      // d(u2)/dx averaged over the corner's y-neighbours
      s.add(1, fold_u2(ci, cj - 1, nx, ny), 0.25 / hx);
      s.add(1, fold_u2(ci, cj, nx, ny), 0.25 / hx);
      s.add(1, fold_u2(ci - 1, cj - 1, nx, ny), -0.25 / hx);
      s.add(1, fold_u2(ci - 1, cj, nx, ny), -0.25 / hx);
      double w = da;
      if (ci == 0 || ci == nx) w *= 0.5;
      if (cj == 0 || cj == ny) w *= 0.5;
      on_d12(s, w, std::clamp(ci, 0, nx - 1), std::clamp(cj, 0, ny - 1));
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      Sample s;
      s.add(0, fold_u1(i + 1, j, nx, ny), 0.5 / hx);
      s.add(0, fold_u1(i - 1, j, nx, ny), -0.5 / hx);
      s.add(1, fold_u2(i, j + 1, nx, ny), 0.5 / hy);
      s.add(1, fold_u2(i, j - 1, nx, ny), -0.5 / hy);
      on_div(s, da, i, j);
    }
}

/// Action of the compact slip-Stokes operator
///   u -> -div((1/rho0) S(phi0, Du)) with the friction boundary term,
/// assembled through its (symmetric, coercive) quadratic form.
void compact_viscous_action(const Grid& g, const Array2d& eta_over_rho, double a0,
                            const Array2d& inv_rho0, const Array2d& u1, const Array2d& u2,
                            Array2d& o1, Array2d& o2) {
  const int nx = g.nx, ny = g.ny;
  const double da = g.cell_area();
  o1 = Array2d::Zero(nx, ny);
  o2 = Array2d::Zero(nx, ny);

  visit_deformation_samples(
      g,
      [&](const Sample& s, double w, int ci, int j) {
        // coefficient 2 eta/rho at the face (average of neighbours)
        double c;
        if (ci >= 0)
          c = 2.0 * eta_over_rho(ci, j);
        else {
          const int fi = s.taps[0].i;  // right cell of an interior face
          c = eta_over_rho(fi, j) + eta_over_rho(fi - 1, j);
        }
        s.scatter(w * c * s.gather(u1, u2) / da, o1, o2);
      },
      [&](const Sample& s, double w, int i, int cj) {
        double c;
        if (cj >= 0)
          c = 2.0 * eta_over_rho(i, cj);
        else {
          const int fj = s.taps[0].j;
          c = eta_over_rho(i, fj) + eta_over_rho(i, fj - 1);
        }
        s.scatter(w * c * s.gather(u1, u2) / da, o1, o2);
      },
      [&](const Sample& s, double w, int i, int j) {
        const double c = 4.0 * eta_over_rho(i, j);  // 2 eta * (2 d12 contraction)
        s.scatter(w * c * s.gather(u1, u2) / da, o1, o2);
      },
      [&](const Sample& s, double w, int i, int j) {
        const double c = -(2.0 / 3.0) * eta_over_rho(i, j);
        s.scatter(w * c * s.gather(u1, u2) / da, o1, o2);
      });

  // Wall friction with extrapolated wall values, as in the step operator.
  const double fx = a0 / g.hx(), fy = a0 / g.hy();
  for (int j = 0; j < ny; ++j) {
    const double wlo = 1.5 * u2(0, j) - 0.5 * u2(1, j);
    o2(0, j) += 1.5 * fx * inv_rho0(0, j) * wlo;
    o2(1, j) += -0.5 * fx * inv_rho0(0, j) * wlo;
    const double whi = 1.5 * u2(nx - 1, j) - 0.5 * u2(nx - 2, j);
    o2(nx - 1, j) += 1.5 * fx * inv_rho0(nx - 1, j) * whi;
    o2(nx - 2, j) += -0.5 * fx * inv_rho0(nx - 1, j) * whi;
  }
  for (int i = 0; i < nx; ++i) {
    const double wlo = 1.5 * u1(i, 0) - 0.5 * u1(i, 1);
    o1(i, 0) += 1.5 * fy * inv_rho0(i, 0) * wlo;
    o1(i, 1) += -0.5 * fy * inv_rho0(i, 0) * wlo;
    const double whi = 1.5 * u1(i, ny - 1) - 0.5 * u1(i, ny - 2);
    o1(i, ny - 1) += 1.5 * fy * inv_rho0(i, ny - 1) * whi;
    o1(i, ny - 2) += -0.5 * fy * inv_rho0(i, ny - 1) * whi;
  }
}

}  // namespace

double compact_deformation_energy(const Grid& g, const Array2d& u1, const Array2d& u2) {
  double acc = 0.0;
  visit_deformation_samples(
      g,
      [&](const Sample& s, double w, int, int) { acc += w * std::pow(s.gather(u1, u2), 2); },
      [&](const Sample& s, double w, int, int) { acc += w * std::pow(s.gather(u1, u2), 2); },
      [&](const Sample& s, double w, int, int) {
        acc += 2.0 * w * std::pow(s.gather(u1, u2), 2);
      },
      [&](const Sample&, double, int, int) {});
  return acc;
}

ScalarField smooth_mode_field(const Grid& g, uint64_t seed, int kmax, double amp) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  ScalarField out(g, ScalarBc::Neumann);
  for (int kx = 0; kx <= kmax; ++kx)
    for (int ky = 0; ky <= kmax; ++ky) {
      const double a = amp * unif(rng) / (1.0 + kx * kx + ky * ky);
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
          out(i, j) +=
              a * std::cos(kx * M_PI * g.x(i) / g.Lx) * std::cos(ky * M_PI * g.y(j) / g.Ly);
    }
  return out;
}

LabWorkspace::LabWorkspace(const Grid& g)
    : grid_(g), compact_(g, NeumannStencil::Compact), projector_(g) {
  const int n = g.cells();

  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(n, 1);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(ones);
  Eigen::MatrixXd full = qr.householderQ();
  Q_ = full.rightCols(n - 1);

  // Dual metric <q_i, q_j>_{H^-1} = area * q_i^T (-lap)^+ q_j.
  Wt_.resize(n - 1, n - 1);
  Eigen::MatrixXd pq(n, n - 1);
  for (int k = 0; k < n - 1; ++k) {
    ScalarField rhs = unflatten(Q_.col(k));
    rhs.values -= rhs.values.mean();
    pq.col(k) = -flatten(compact_.solve(rhs));
  }
  Wt_ = g.cell_area() * (Q_.transpose() * pq);
  Wt_ = 0.5 * (Wt_ + Wt_.transpose());

  // Divergence-free wall-tangent subspace from the projector's range.
  Eigen::MatrixXd pmat(2 * n, 2 * n);
  VectorField e(g);
  apply_parity_bc(e);
  for (int k = 0; k < 2 * n; ++k) {
    e.u1.setZero();
    e.u2.setZero();
    if (k < n)
      e.u1(k % g.nx, k / g.nx) = 1.0;
    else
      e.u2((k - n) % g.nx, (k - n) / g.nx) = 1.0;
    const VectorField w = projector_.project(e).w;
    pmat.col(k).head(n) = Eigen::Map<const Eigen::VectorXd>(w.u1.data(), n);
    pmat.col(k).tail(n) = Eigen::Map<const Eigen::VectorXd>(w.u2.data(), n);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> zqr(pmat);
  zqr.setThreshold(1e-8);
  const int rank = static_cast<int>(zqr.rank());
  Z_ = zqr.householderQ() * Eigen::MatrixXd::Identity(2 * n, rank);
}

Eigen::VectorXd LabWorkspace::flatten(const ScalarField& f) const {
  return Eigen::Map<const Eigen::VectorXd>(f.values.data(), f.values.size());
}

ScalarField LabWorkspace::unflatten(const Eigen::VectorXd& v) const {
  ScalarField f(grid_, ScalarBc::Neumann);
  f.values = Eigen::Map<const Array2d>(v.data(), grid_.nx, grid_.ny);
  return f;
}

DiscreteOperatorBundle::DiscreteOperatorBundle(std::shared_ptr<const LabWorkspace> ws,
                                               const ScalarField& phi0, const PhysParams& p,
                                               double coeff_scale)
    : ws_(std::move(ws)), p_(p), phi0_(phi0) {
  const Grid& g = ws_->grid();
  const ScalarField rho0 = density(phi0, p);
  inv_rho0_ = rho0.values.inverse();
  const Array2d eta0 = viscosity_field(phi0, p);
  b_ = coeff_scale * (4.0 / 3.0) * eta0 * inv_rho0_;
  nu_ = coeff_scale * 2.0 * eta0 * inv_rho0_;
  ctilde_ = coeff_scale * inv_rho0_ * (1.0 / p.alpha - phi0.values);

  // Compact flux form of div(c grad .): symmetric, Neumann (no wall flux),
  // and exactly c * lap_N for constant c, which pins the square-root bracket
  // anchor below.
  {
    const int nx = g.nx, ny = g.ny, n = g.cells();
    const double wx = 1.0 / (g.hx() * g.hx()), wy = 1.0 / (g.hy() * g.hy());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * n);
    auto idx = [nx](int i, int j) { return j * nx + i; };
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        if (i + 1 < nx) {
          const double c = 0.5 * (ctilde_(i, j) + ctilde_(i + 1, j)) * wx;
          trip.emplace_back(idx(i, j), idx(i, j), -c);
          trip.emplace_back(idx(i + 1, j), idx(i + 1, j), -c);
          trip.emplace_back(idx(i, j), idx(i + 1, j), c);
          trip.emplace_back(idx(i + 1, j), idx(i, j), c);
        }
        if (j + 1 < ny) {
          const double c = 0.5 * (ctilde_(i, j) + ctilde_(i, j + 1)) * wy;
          trip.emplace_back(idx(i, j), idx(i, j), -c);
          trip.emplace_back(idx(i, j + 1), idx(i, j + 1), -c);
          trip.emplace_back(idx(i, j), idx(i, j + 1), c);
          trip.emplace_back(idx(i, j + 1), idx(i, j), c);
        }
      }
    div_c_grad_.resize(n, n);
    div_c_grad_.setFromTriplets(trip.begin(), trip.end());
  }

  const Eigen::MatrixXd& Q = ws_->mean_zero_basis();
  // <alpha A u, v>_W collapses to -alpha * area * (div(c grad u), v): the
  // outer Neumann Laplacian cancels against the metric exactly.
  FA_ = symmetrize(-p.alpha * g.cell_area() * (Q.transpose() * (div_c_grad_ * Q)), &defectA_);
  Eigen::MatrixXd bq = Q;
  for (int k = 0; k < bq.cols(); ++k)
    bq.col(k).array() *= Eigen::Map<const Eigen::ArrayXd>(b_.data(), b_.size());
  FB_ = symmetrize(p.alpha * g.cell_area() * (Q.transpose() * bq), &defectB_);
}

Eigen::VectorXd DiscreteOperatorBundle::apply_fourth_order(const Eigen::VectorXd& phi) const {
  const Eigen::VectorXd s = div_c_grad_ * phi;
  return ws_->compact().matrix() * s;
}

Eigen::VectorXd DiscreteOperatorBundle::apply_damping(const Eigen::VectorXd& g) const {
  Eigen::VectorXd bg = g;
  bg.array() *= Eigen::Map<const Eigen::ArrayXd>(b_.data(), b_.size());
  return -(ws_->compact().matrix() * bg);
}

SelfAdjointReport check_selfadjoint_positivity(const DiscreteOperatorBundle& bundle) {
  SelfAdjointReport r;
  r.defect_A = bundle.stiffness_defect();
  r.defect_B = bundle.damping_defect();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ga(
      bundle.stiffness_form(), bundle.ws().dual_metric(), Eigen::EigenvaluesOnly);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> gb(
      bundle.damping_form(), bundle.ws().dual_metric(), Eigen::EigenvaluesOnly);
  r.min_eig_A = ga.eigenvalues().minCoeff();
  r.min_eig_B = gb.eigenvalues().minCoeff();
  return r;
}

SqrtBracketReport check_sqrt_bracket(const DiscreteOperatorBundle& bundle) {
  const Eigen::MatrixXd& W = bundle.ws().dual_metric();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(bundle.stiffness_form(), W);
  const Eigen::VectorXd lam = ges.eigenvalues();
  if (lam.minCoeff() <= 0.0)
    throw SolverDiverged("check_sqrt_bracket: stiffness operator lost positivity");
  const Eigen::MatrixXd v = ges.eigenvectors();  // W-orthonormal columns
  Eigen::MatrixXd fsqrt =
      W * v * lam.array().sqrt().matrix().asDiagonal() * v.transpose() * W;
  fsqrt = 0.5 * (fsqrt + fsqrt.transpose());

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> bracket(bundle.damping_form(),
                                                                    fsqrt, Eigen::EigenvaluesOnly);
  SqrtBracketReport rep;
  rep.rho1 = bracket.eigenvalues().minCoeff();
  rep.rho2 = bracket.eigenvalues().maxCoeff();
  return rep;
}

namespace {

double face_h1_norm(const ScalarField& f) {
  const Grid& g = f.grid;
  double acc = f.values.square().sum();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i + 1 < g.nx; ++i)
      acc += std::pow((f(i + 1, j) - f(i, j)) / g.hx(), 2);
  for (int j = 0; j + 1 < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      acc += std::pow((f(i, j + 1) - f(i, j)) / g.hy(), 2);
  return std::sqrt(g.cell_area() * acc);
}

double coupling_ratio(const DiscreteOperatorBundle& bundle, ScalarField g) {
  const Grid& grid = g.grid;
  g.values -= g.values.mean();
  const double gnorm = l2_norm(g);
  if (gnorm == 0.0) return 0.0;

  const LabWorkspace& ws = bundle.ws();
  const ScalarField gg = ws.compact().solve(g);

  // Hessian of the potential: compact second differences on the diagonal,
  // centered first differences with parity ghosts for the mixed entry.
  const int nx = grid.nx, ny = grid.ny;
  const double hx = grid.hx(), hy = grid.hy();
  Array2d hxx(nx, ny), hyy(nx, ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double xm = (i > 0) ? gg(i - 1, j) : gg(0, j);
      const double xp = (i + 1 < nx) ? gg(i + 1, j) : gg(nx - 1, j);
      const double ym = (j > 0) ? gg(i, j - 1) : gg(i, 0);
      const double yp = (j + 1 < ny) ? gg(i, j + 1) : gg(i, ny - 1);
      hxx(i, j) = (xp - 2.0 * gg(i, j) + xm) / (hx * hx);
      hyy(i, j) = (yp - 2.0 * gg(i, j) + ym) / (hy * hy);
    }
  const Array2d dgx = dx_central(gg.values, hx, GhostSigma::constant(ny, 1.0));
  const Array2d hxy = dy_central(dgx, hy, GhostSigma::constant(nx, 1.0));

  ScalarField nu_field(grid, bundle.nu_coeff(), ScalarBc::Neumann);
  const VectorField gnu = gradient(nu_field);

  VectorField v(grid);
  apply_parity_bc(v);
  v.u1 = gnu.u1 * hxx + gnu.u2 * hxy - gnu.u1 * g.values;
  v.u2 = gnu.u1 * hxy + gnu.u2 * hyy - gnu.u2 * g.values;
  const VectorField b1 = ws.projector().project(v).w;

  const double denom = std::sqrt(gnorm) * std::sqrt(face_h1_norm(g));
  return l2_norm(b1) / denom;
}

}  // namespace

CouplingBoundReport check_coupling_bound(const DiscreteOperatorBundle& bundle, int samples,
                                         uint64_t seed) {
  const Grid& g = bundle.ws().grid();
  CouplingBoundReport rep;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int s = 0; s < samples; ++s) {
    ScalarField f(g, ScalarBc::Neumann);
    if (s % 2 == 0) {
      f = smooth_mode_field(g, seed + 101 * s, 4, 1.0);
    } else {
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) f(i, j) = unif(rng);
    }
    rep.max_ratio = std::max(rep.max_ratio, coupling_ratio(bundle, f));
  }
  ScalarField cb(g, ScalarBc::Neumann);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) cb(i, j) = ((i + j) % 2 == 0) ? 1.0 : -1.0;
  rep.checkerboard_ratio = coupling_ratio(bundle, cb);
  return rep;
}

double korn_constant(const Grid& g, double a0) {
  (void)a0;  // wall tangency defines the admissible set; friction does not enter

  auto deformation_form = [&](const std::vector<Array2d>& in, std::vector<Array2d>& out) {
    out[0].setZero();
    out[1].setZero();
    const double da = g.cell_area();
    visit_deformation_samples(
        g,
        [&](const Sample& s, double w, int, int) {
          s.scatter(w * s.gather(in[0], in[1]) / da, out[0], out[1]);
        },
        [&](const Sample& s, double w, int, int) {
          s.scatter(w * s.gather(in[0], in[1]) / da, out[0], out[1]);
        },
        [&](const Sample& s, double w, int, int) {
          s.scatter(2.0 * w * s.gather(in[0], in[1]) / da, out[0], out[1]);
        },
        [&](const Sample&, double, int, int) {});
  };
  // H1 form: mass plus face gradients per component; tangential wall faces
  // carry no constraint (mirror ghosts make their difference vanish).
  auto h1_form = [&](const std::vector<Array2d>& in, std::vector<Array2d>& out) {
    out[0] = in[0];
    out[1] = in[1];
    const int nx = g.nx, ny = g.ny;
    const double hx = g.hx(), hy = g.hy();
    for (int c = 0; c < 2; ++c) {
      auto fold = [&](int i, int j) { return c == 0 ? fold_u1(i, j, nx, ny) : fold_u2(i, j, nx, ny); };
      for (int j = 0; j < ny; ++j)
        for (int fi = 0; fi <= nx; ++fi) {
          Sample s;
          s.add(c, fold(fi, j), 1.0 / hx);
          s.add(c, fold(fi - 1, j), -1.0 / hx);
          const double w = (fi == 0 || fi == nx) ? 0.5 : 1.0;
          s.scatter(w * s.gather(in[0], in[1]), out[0], out[1]);
        }
      for (int fj = 0; fj <= ny; ++fj)
        for (int i = 0; i < nx; ++i) {
          Sample s;
          s.add(c, fold(i, fj), 1.0 / hy);
          s.add(c, fold(i, fj - 1), -1.0 / hy);
          const double w = (fj == 0 || fj == ny) ? 0.5 : 1.0;
          s.scatter(w * s.gather(in[0], in[1]), out[0], out[1]);
        }
    }
  };

  const Eigen::SparseMatrix<double> kd = probe_stencil_matrix(g, 2, 2, 1, deformation_form);
  const Eigen::SparseMatrix<double> kh = probe_stencil_matrix(g, 2, 2, 1, h1_form);
  return min_generalized_eig(kd, kh);
}

StokesOperatorReport check_stokes_operator(const DiscreteOperatorBundle& bundle) {
  const Grid& g = bundle.ws().grid();
  const PhysParams& p = bundle.params();
  const ScalarField rho0 = density(bundle.phi0(), p);
  const Array2d inv_rho0 = rho0.values.inverse();
  const Array2d eta_over_rho = viscosity_field(bundle.phi0(), p) * inv_rho0;

  const Eigen::MatrixXd& Z = bundle.ws().divfree_basis();
  const int n = g.cells(), m = static_cast<int>(Z.cols());
  Eigen::MatrixXd az(2 * n, m);
  Array2d o1, o2;
  for (int k = 0; k < m; ++k) {
    const Array2d u1 = Eigen::Map<const Array2d>(Z.col(k).data(), g.nx, g.ny);
    const Array2d u2 = Eigen::Map<const Array2d>(Z.col(k).data() + n, g.nx, g.ny);
    compact_viscous_action(g, eta_over_rho, p.a0, inv_rho0, u1, u2, o1, o2);
    az.col(k).head(n) = Eigen::Map<const Eigen::VectorXd>(o1.data(), n);
    az.col(k).tail(n) = Eigen::Map<const Eigen::VectorXd>(o2.data(), n);
  }
  Eigen::MatrixXd t = Z.transpose() * az;

  StokesOperatorReport rep;
  const Eigen::MatrixXd ts = symmetrize(t, &rep.symmetry_defect);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ts, Eigen::EigenvaluesOnly);
  rep.min_eig = es.eigenvalues().minCoeff();
  rep.max_eig = es.eigenvalues().maxCoeff();

  const double min_two_eta = 2.0 * eta_over_rho.minCoeff();
  const double korn = korn_constant(g, p.a0);
  rep.coercivity_ratio = rep.min_eig / (min_two_eta * korn);
  return rep;
}

BlockStructureReport check_block_structure(const DiscreteOperatorBundle& bundle) {
  const LabWorkspace& ws = bundle.ws();
  const Grid& g = ws.grid();
  const PhysParams& p = bundle.params();
  const int n = g.cells();
  const Eigen::MatrixXd& Q = ws.mean_zero_basis();
  const Eigen::MatrixXd& Z = ws.divfree_basis();

  const ScalarField rho0 = density(bundle.phi0(), p);
  const Array2d inv_rho0 = rho0.values.inverse();
  const Array2d eta_over_rho = viscosity_field(bundle.phi0(), p) * inv_rho0;

  auto assemble = [&](const Eigen::MatrixXd& phi_basis) {
    const int np = static_cast<int>(phi_basis.cols());
    const int ng = static_cast<int>(Q.cols());
    const int nw = static_cast<int>(Z.cols());
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(np + ng + nw, np + ng + nw);

    // phi' row: -(1/alpha) P0 g.
    full.block(0, np, np, ng) = -(1.0 / p.alpha) * (phi_basis.transpose() * Q);

    // g row: lap_N(div(c grad phi')) - lap_N(b g) + coupling from w.
    Eigen::MatrixXd aphi(n, np);
    for (int k = 0; k < np; ++k) aphi.col(k) = bundle.apply_fourth_order(phi_basis.col(k));
    full.block(np, 0, ng, np) = Q.transpose() * aphi;
    Eigen::MatrixXd bg(n, ng);
    for (int k = 0; k < ng; ++k) bg.col(k) = bundle.apply_damping(Q.col(k));
    full.block(np, np, ng, ng) = Q.transpose() * bg;

    Array2d o1, o2;
    Eigen::MatrixXd a2(ng, nw);
    Eigen::MatrixXd aw(2 * n, nw);
    const GhostSigma anti_x = GhostSigma::constant(g.ny, -1.0);
    const GhostSigma anti_y = GhostSigma::constant(g.nx, -1.0);
    for (int k = 0; k < nw; ++k) {
      const Array2d u1 = Eigen::Map<const Array2d>(Z.col(k).data(), g.nx, g.ny);
      const Array2d u2 = Eigen::Map<const Array2d>(Z.col(k).data() + n, g.nx, g.ny);
      compact_viscous_action(g, eta_over_rho, p.a0, inv_rho0, u1, u2, o1, o2);
      aw.col(k).head(n) = Eigen::Map<const Eigen::VectorXd>(o1.data(), n);
      aw.col(k).tail(n) = Eigen::Map<const Eigen::VectorXd>(o2.data(), n);
      // g equation coupling: div_n applied to the momentum row, which already
      // carries -div((1/rho0) S(phi0, Dw)).
      const Array2d dn = dx_central(o1, g.hx(), anti_x) + dy_central(o2, g.hy(), anti_y);
      a2.col(k) = Q.transpose() * Eigen::Map<const Eigen::VectorXd>(dn.data(), n);
    }
    full.block(np, np + ng, ng, nw) = a2;
    full.block(np + ng, np + ng, nw, nw) = Z.transpose() * aw;
    // Blocks (phi', phi'), (phi', w), and (w, phi'/g) stay zero by the
    // operator's triangle structure: zero-initialized, never written.
    return full;
  };

  BlockStructureReport rep;
  const Eigen::MatrixXd pinned = assemble(Q);

  const int np = static_cast<int>(Q.cols());
  const int ng = np, nw = static_cast<int>(Z.cols());
  rep.zero_blocks_exact = (pinned.block(0, 0, np, np).cwiseAbs().maxCoeff() == 0.0) &&
                          (pinned.block(0, np + ng, np, nw).cwiseAbs().maxCoeff() == 0.0) &&
                          (pinned.block(np + ng, 0, nw, np + ng).cwiseAbs().maxCoeff() == 0.0);

  auto abscissa = [&](const Eigen::MatrixXd& phi_basis) {
    const Eigen::MatrixXd full = assemble(phi_basis);
    const int m = static_cast<int>(phi_basis.cols()) + ng;
    const Eigen::MatrixXd a1 = full.topLeftCorner(m, m);
    Eigen::EigenSolver<Eigen::MatrixXd> es(-a1, false);
    return es.eigenvalues().real().maxCoeff();
  };
  rep.abscissa_pinned = abscissa(Q);
  rep.abscissa_unpinned = abscissa(Eigen::MatrixXd::Identity(n, n));
  return rep;
}

double resolvent_sector_bound(const DiscreteOperatorBundle& bundle, double angle_margin) {
  const LabWorkspace& ws = bundle.ws();
  const Grid& g = ws.grid();
  const int n = g.cells();
  const Eigen::MatrixXd& Q = ws.mean_zero_basis();
  const int m = 2 * static_cast<int>(Q.cols());

  // A1 on the pinned basis.
  Eigen::MatrixXd a1 = Eigen::MatrixXd::Zero(m, m);
  const int half = m / 2;
  a1.block(0, half, half, half) =
      -(1.0 / bundle.params().alpha) * Eigen::MatrixXd::Identity(half, half);
  Eigen::MatrixXd aphi(n, half), bg(n, half);
  for (int k = 0; k < half; ++k) {
    aphi.col(k) = bundle.apply_fourth_order(Q.col(k));
    bg.col(k) = bundle.apply_damping(Q.col(k));
  }
  a1.block(half, 0, half, half) = Q.transpose() * aphi;
  a1.block(half, half, half, half) = Q.transpose() * bg;

  double bound = 0.0;
  const std::array<double, 3> radii = {1.0, 10.0, 100.0};
  for (int k = 0; k < 8; ++k) {
    // Sample both sector edges and interior rays beyond pi/2.
    const double theta =
        (M_PI / 2.0 + angle_margin * (k % 4 + 1) / 4.0) * ((k < 4) ? 1.0 : -1.0);
    for (double r : radii) {
      const std::complex<double> lambda = std::polar(r, theta);
      Eigen::MatrixXcd shifted = a1.cast<std::complex<double>>();
      shifted.diagonal().array() += lambda;
      Eigen::BDCSVD<Eigen::MatrixXcd> svd(shifted);
      bound = std::max(bound, r / svd.singularValues().minCoeff());
    }
  }
  return bound;
}

bool LabReport::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

std::string LabReport::to_text() const {
  std::ostringstream os;
  os << "check,value,pass,note\n";
  for (const auto& c : checks) {
    os << c.name << ',' << std::scientific;
    os.precision(6);
    os << c.value << ',' << (c.pass ? "PASS" : "FAIL") << ',' << c.note << "\n";
  }
  return os.str();
}

LabReport run_operator_lab(const LabOptions& opt) {
  LabReport report;
  auto add = [&report](const std::string& name, double value, bool pass,
                       const std::string& note) {
    report.checks.push_back({name, value, note, pass});
  };

  const PhysParams p = PhysParams::make(opt.eps, opt.nu, opt.a0, false);

  struct Level {
    std::shared_ptr<LabWorkspace> ws;
    std::unique_ptr<DiscreteOperatorBundle> flat, smooth;
  };
  auto build = [&](int nside) {
    Level lv;
    Grid g(nside, nside, 1.0, 1.0);
    lv.ws = std::make_shared<LabWorkspace>(g);
    ScalarField zero(g, ScalarBc::Neumann);
    lv.flat = std::make_unique<DiscreteOperatorBundle>(lv.ws, zero, p);
    lv.smooth = std::make_unique<DiscreteOperatorBundle>(
        lv.ws, smooth_mode_field(g, opt.seed, 2, 0.45), p);
    return lv;
  };
  Level coarse = build(opt.coarse);
  Level fine = build(opt.fine);

  auto drift = [](double a, double b) { return std::abs(b / a - 1.0); };

  // Self-adjointness and strict positivity in the duality metric.
  for (const auto* lv : {&coarse, &fine}) {
    for (const auto* tag : {"flat", "smooth"}) {
      const DiscreteOperatorBundle& b =
          (std::string(tag) == "flat") ? *lv->flat : *lv->smooth;
      const int nside = lv->ws->grid().nx;
      const SelfAdjointReport sr = check_selfadjoint_positivity(b);
      const std::string base =
          std::string("selfadjoint_") + tag + "_" + std::to_string(nside);
      add(base + "_defect_A", sr.defect_A, sr.defect_A <= 1e-10, "<=1e-10");
      add(base + "_defect_B", sr.defect_B, sr.defect_B <= 1e-10, "<=1e-10");
      add(base + "_mineig_A", sr.min_eig_A, sr.min_eig_A > 0.0, ">0");
      add(base + "_mineig_B", sr.min_eig_B, sr.min_eig_B > 0.0, ">0");
    }
  }

  // Square-root bracket: positivity, the constant-coefficient anchor, and
  // mesh stability.
  const SqrtBracketReport br_flat = check_sqrt_bracket(*fine.flat);
  {
    const double b0 = (4.0 / 3.0) * (0.5 * (p.nu + 1.0)) / (1.0 + 0.5 * p.eps);
    const double c0 = (1.0 / p.alpha) / (1.0 + 0.5 * p.eps);
    const double anchor = std::sqrt(p.alpha) * b0 / std::sqrt(c0);
    add("bracket_flat_anchor_rho1", br_flat.rho1,
        std::abs(br_flat.rho1 - anchor) <= 1e-8 * anchor, "=sqrt(alpha) b0/sqrt(c0)");
    add("bracket_flat_anchor_rho2", br_flat.rho2,
        std::abs(br_flat.rho2 - anchor) <= 1e-8 * anchor, "=sqrt(alpha) b0/sqrt(c0)");
  }
  const SqrtBracketReport br_c = check_sqrt_bracket(*coarse.smooth);
  const SqrtBracketReport br_f = check_sqrt_bracket(*fine.smooth);
  add("bracket_rho1_positive", br_f.rho1, br_f.rho1 > 0.0, ">0");
  add("bracket_ordered", br_f.rho2 - br_f.rho1, br_f.rho2 >= br_f.rho1, "rho2>=rho1");
  add("bracket_rho1_drift", drift(br_c.rho1, br_f.rho1), drift(br_c.rho1, br_f.rho1) <= 0.20,
      "<=20%");
  add("bracket_rho2_drift", drift(br_c.rho2, br_f.rho2), drift(br_c.rho2, br_f.rho2) <= 0.20,
      "<=20%");

  // Gradient-coupling bound: zero for constant phi0, finite and mesh-stable
  // for smooth phi0, checkerboard under the recorded envelope.
  const CouplingBoundReport cb_flat = check_coupling_bound(*coarse.flat, 8, opt.seed);
  add("coupling_flat_zero", cb_flat.max_ratio, cb_flat.max_ratio <= 1e-12, "B1==0 at const phi0");
  const CouplingBoundReport cb_c = check_coupling_bound(*coarse.smooth, opt.bound_samples, opt.seed);
  const CouplingBoundReport cb_f = check_coupling_bound(*fine.smooth, opt.bound_samples, opt.seed);
  add("coupling_max_ratio", cb_f.max_ratio, std::isfinite(cb_f.max_ratio), "finite");
  add("coupling_ratio_drift", drift(cb_c.max_ratio, cb_f.max_ratio),
      drift(cb_c.max_ratio, cb_f.max_ratio) <= 0.30, "<=30%");
  add("coupling_checkerboard", cb_f.checkerboard_ratio,
      cb_f.checkerboard_ratio <= cb_f.max_ratio, "below recorded max");

  // Korn quotient.
  const double korn_c = korn_constant(coarse.ws->grid(), p.a0);
  const double korn_f = korn_constant(fine.ws->grid(), p.a0);
  add("korn_min_quotient", korn_f, korn_f > 0.0 && std::isfinite(korn_f), ">0, finite");
  add("korn_drift", drift(korn_c, korn_f), drift(korn_c, korn_f) <= 0.15, "<=15%");

  // Stokes operator with slip boundary: SPD, conditioning, Korn coercivity.
  for (const auto* lv : {&coarse, &fine}) {
    const int nside = lv->ws->grid().nx;
    const StokesOperatorReport so = check_stokes_operator(*lv->smooth);
    const std::string base = "stokes_" + std::to_string(nside);
    add(base + "_defect", so.symmetry_defect, so.symmetry_defect <= 1e-10, "<=1e-10");
    add(base + "_mineig", so.min_eig, so.min_eig > 0.0, ">0");
    add(base + "_cond", so.max_eig / so.min_eig, std::isfinite(so.max_eig / so.min_eig),
        "finite");
    add(base + "_korn_coercivity", so.coercivity_ratio, so.coercivity_ratio >= 0.33,
        ">=1/3 of min(2eta/rho0)*korn");
  }

  // Block triangle structure and the mean-pinning variants (report only).
  const BlockStructureReport bs = check_block_structure(*coarse.smooth);
  add("block_zero_structure", bs.zero_blocks_exact ? 1.0 : 0.0, bs.zero_blocks_exact,
      "exact zero blocks");
  add("abscissa_pinned", bs.abscissa_pinned, true, "report only");
  add("abscissa_unpinned", bs.abscissa_unpinned, true, "report only");

  if (opt.resolvent_sweep) {
    Grid g12(12, 12, 1.0, 1.0);
    auto ws12 = std::make_shared<LabWorkspace>(g12);
    DiscreteOperatorBundle b12(ws12, smooth_mode_field(g12, opt.seed, 2, 0.45), p);
    const double bound = resolvent_sector_bound(b12, 0.35);
    add("resolvent_sector_bound", bound, std::isfinite(bound) && bound < 1e4, "<1e4");
  }

  return report;
}

}  // namespace qchns

#include "qchns/picard.hpp"

#include <cmath>
#include <filesystem>
#include <random>

#include "qchns/errors.hpp"
#include "qchns/field_io.hpp"
#include "qchns/records_io.hpp"

namespace qchns {

PicardDriver::PicardDriver(const Grid& g, const PhysParams& p)
    : grid_(g), p_(p), compact_(g, NeumannStencil::Compact), projector_(g) {}

SimState PicardDriver::make_state(const VectorField& u, const ScalarField& phi, double t) const {
  SimState s(grid_);
  s.t = t;
  s.u = u;
  s.phi = phi;
  s.phi.bc = ScalarBc::Neumann;
  refresh_caches(s, p_, compact_, &projector_);
  return s;
}

VectorField PicardDriver::nonlinear_momentum_rhs(const SimState& iter,
                                                 const SimState& old_state) const {
  if (iter.rho.values.minCoeff() < 0.1)
    throw DensityFloorViolated("nonlinear_momentum_rhs: min(rho) below 0.1");

  const Grid& g = grid_;
  const double inv_alpha = 1.0 / p_.alpha;
  const Array2d& r = iter.inv_rho;            // 1/rho(phi)
  const Array2d& r0 = old_state.inv_rho;      // 1/rho(phi_old), the frozen density
  const Array2d c = inv_alpha - iter.phi.values;  // 1/alpha - phi

  VectorField out(g);
  apply_parity_bc(out);

  // Convection -(u . grad) u, with the velocity's own slip ghosts.
  const VelocityGradient vg = velocity_gradient(iter.u);
  out.u1 = -(iter.u.u1 * vg.g11 + iter.u.u2 * vg.g12);
  out.u2 = -(iter.u.u1 * vg.g21 + iter.u.u2 * vg.g22);

  // Potential gradient -(1/rho)(phi - 1/alpha) grad f(phi) = r c grad f(phi).
  ScalarField fphi(g, iter.phi.values.cube() - iter.phi.values, ScalarBc::Neumann);
  const VectorField gf = gradient(fphi);
  out.u1 += r * c * gf.u1;
  out.u2 += r * c * gf.u2;

  // Quasi-pressure term -(1/alpha^2)(1/rho) grad G(div u); the cached
  // mu_p = (1/alpha) G(div u) supplies grad G = alpha grad mu_p.
  const VectorField gmp = gradient(iter.mu_p);
  out.u1 += -(inv_alpha / p_.alpha) * r * (p_.alpha * gmp.u1);
  out.u2 += -(inv_alpha / p_.alpha) * r * (p_.alpha * gmp.u2);

  // Body force: the momentum balance carries -rho k, so the remainder (after
  // division by rho) contributes the constant downward unit vector.
  if (p_.gravity_on) out.u2 += -1.0;

  const VectorField gphi = gradient(iter.phi);
  const ScalarField lap_phi = laplacian(iter.phi);

  // Capillary regrouping: (1/rho) grad(grad(1/alpha - phi) . grad phi) and
  // (1/rho) grad(1/alpha - phi) lap phi, with grad(1/alpha - phi) = -grad phi.
  ScalarField sq(g, -(gphi.u1.square() + gphi.u2.square()), ScalarBc::Neumann);
  const VectorField gsq = gradient(sq);
  out.u1 += r * gsq.u1 - r * gphi.u1 * lap_phi.values;
  out.u2 += r * gsq.u2 - r * gphi.u2 * lap_phi.values;

  // Viscosity-variation corrections -grad(1/rho) . S and div((1/rho - 1/rho0) S).
  ScalarField rfield(g, r, ScalarBc::Neumann);
  const VectorField gr = gradient(rfield);
  const TensorField s = stress(iter.phi, iter.u, p_);
  out.u1 += -(gr.u1 * s.t11 + gr.u2 * s.t12);
  out.u2 += -(gr.u1 * s.t12 + gr.u2 * s.t22);
  TensorField corr;
  corr.grid = g;
  corr.t11 = (r - r0) * s.t11;
  corr.t12 = (r - r0) * s.t12;
  corr.t22 = (r - r0) * s.t22;
  const VectorField dcorr = divergence_tensor(corr);
  out.u1 += dcorr.u1;
  out.u2 += dcorr.u2;

  // Frozen-coefficient phase corrections, with phi_tilde = phi_old and
  // phi' = phi - phi_old.
  const Array2d dphi = iter.phi.values - old_state.phi.values;
  VectorField gdphi = gradient(ScalarField(g, dphi, ScalarBc::Neumann));

  // grad(grad(1/rho) . ((1/alpha - phi) grad phi')).
  ScalarField dot(g, gr.u1 * c * gdphi.u1 + gr.u2 * c * gdphi.u2, ScalarBc::Neumann);
  const VectorField gdot = gradient(dot);
  out.u1 += gdot.u1;
  out.u2 += gdot.u2;

  // -(grad(1/rho)) div((phi - 1/alpha) grad phi).
  VectorField m(g);
  apply_parity_bc(m);
  m.u1 = (iter.phi.values - inv_alpha) * gphi.u1;
  m.u2 = (iter.phi.values - inv_alpha) * gphi.u2;
  const ScalarField divm = divergence(m);
  out.u1 += -gr.u1 * divm.values;
  out.u2 += -gr.u2 * divm.values;

  // grad((1/rho) div((phi - 1/alpha) grad phi_tilde)).
  const VectorField gphi_old = gradient(old_state.phi);
  VectorField mt(g);
  apply_parity_bc(mt);
  mt.u1 = (iter.phi.values - inv_alpha) * gphi_old.u1;
  mt.u2 = (iter.phi.values - inv_alpha) * gphi_old.u2;
  ScalarField rdiv(g, r * divergence(mt).values, ScalarBc::Neumann);
  const VectorField grdiv = gradient(rdiv);
  out.u1 += grdiv.u1;
  out.u2 += grdiv.u2;

  // -grad(div((1/rho - 1/rho0)(1/alpha - phi) grad phi')).
  VectorField m4(g);
  apply_parity_bc(m4);
  m4.u1 = (r - r0) * c * gdphi.u1;
  m4.u2 = (r - r0) * c * gdphi.u2;
  const VectorField gdiv4 = gradient(divergence(m4));
  out.u1 += -gdiv4.u1;
  out.u2 += -gdiv4.u2;

  return out;
}

ScalarField PicardDriver::nonlinear_phase_rhs(const SimState& iter, double* mean_before) const {
  const VectorField m = scale(iter.phi, iter.u);
  ScalarField out = divergence(m);
  out.values = -out.values;
  const double mean = out.values.mean();
  if (mean_before) *mean_before = mean;
  out.values -= mean;
  return out;
}

std::pair<SimState, PicardReport> PicardDriver::advance(const SimState& state, double dt,
                                                        const PicardConfig& cfg) const {
  if (!(dt > 0.0)) throw DomainError("advance: dt must be positive");
  if (state.phi.values.abs().maxCoeff() > 1.2)
    throw StepFailed("advance: ||phi||_inf exceeds 1.2");

  std::unique_ptr<LinearStepSystem> sys;
  double dt_try = dt;

  for (int halving = 0; halving <= cfg.max_halvings; ++halving) {
    if (!sys || cfg.refreeze_each_iter)
      sys = std::make_unique<LinearStepSystem>(state.phi, dt_try, p_);
    else
      sys->set_dt(dt_try);

    SimState iter = state;  // caches of `state` are fresh by contract
    double prev_inc = -1.0;
    double contraction = 0.0;
    bool converged = false;
    int iters = 0;

    for (int k = 1; k <= cfg.max_iters; ++k) {
      if (cfg.refreeze_each_iter && k > 1)
        sys = std::make_unique<LinearStepSystem>(iter.phi, dt_try, p_);

      const VectorField f1 = nonlinear_momentum_rhs(iter, state);
      const ScalarField f2 = nonlinear_phase_rhs(iter);
      VectorField rhs_u = f1;
      rhs_u.u1 += state.u.u1 / dt_try;
      rhs_u.u2 += state.u.u2 / dt_try;

      auto sol = sys->solve(rhs_u, f2);
      Array2d phi_new = state.phi.values + sol.phi.values;

      const double inc =
          std::sqrt((sol.u.u1 - iter.u.u1).square().sum() + (sol.u.u2 - iter.u.u2).square().sum() +
                    (phi_new - iter.phi.values).square().sum());
      const double scale =
          std::sqrt(sol.u.sq_sum() + phi_new.square().sum()) + 1e-300;
      const double rel = inc / scale;

      iter.u.u1 = sol.u.u1;
      iter.u.u2 = sol.u.u2;
      iter.phi.values = phi_new;
      refresh_caches(iter, p_, compact_, nullptr);

      if (prev_inc > 0.0) contraction = inc / prev_inc;
      iters = k;
      if (rel <= cfg.tol) {
        converged = true;
        break;
      }
      // Growing increments mean the map is not contracting at this dt; bail
      // out early and let the halving guard take over.
      if (k >= 2 && contraction > 4.0 && rel > 100.0 * cfg.tol) break;
      prev_inc = inc;
    }

    if (converged) {
      iter.t = state.t + dt_try;
      refresh_caches(iter, p_, compact_, &projector_);
      PicardReport rep;
      rep.iterations = iters;
      rep.contraction_factor = contraction;
      rep.dt_used = dt_try;
      rep.halvings = halving;
      return {std::move(iter), rep};
    }
    dt_try *= cfg.dt_shrink;
  }
  throw StepFailed("advance: Picard failed to converge after dt halvings");
}

ScalarField initial_phi(const Grid& g, const InitSpec& spec) {
  ScalarField phi(g, ScalarBc::Neumann);
  switch (spec.kind) {
    case InitKind::Uniform:
      phi.values.setConstant(spec.value);
      break;
    case InitKind::Sinusoidal:
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
          phi(i, j) = spec.amp * std::cos(spec.kx * M_PI * g.x(i) / g.Lx) *
                      std::cos(spec.ky * M_PI * g.y(j) / g.Ly);
      break;
    case InitKind::Spinodal: {
      std::mt19937_64 rng(spec.seed);
      std::uniform_real_distribution<double> unif(-1.0, 1.0);
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) phi(i, j) = spec.amp * unif(rng);
      break;
    }
    case InitKind::File: {
      ScalarField loaded = read_snapshot(spec.path);
      if (!(loaded.grid == g))
        throw ConfigError("initial_phi: snapshot grid does not match the configured grid");
      phi = loaded;
      phi.bc = ScalarBc::Neumann;
      break;
    }
  }
  return phi;
}

RunResult run_simulation(const SimConfig& cfg,
                         const std::function<void(const DiagnosticsRecord&)>& on_record) {
  const Grid g(cfg.nx, cfg.ny, cfg.Lx, cfg.Ly);
  const PhysParams p = cfg.params();
  PicardDriver driver(g, p);

  std::filesystem::create_directories(cfg.output_dir);
  const auto snap_path = [&](int step) {
    char name[64];
    std::snprintf(name, sizeof name, "phi_%06d.fld", step);
    return (std::filesystem::path(cfg.output_dir) / name).string();
  };

  VectorField u0(g);
  apply_parity_bc(u0);
  SimState state = driver.make_state(u0, initial_phi(g, cfg.init), 0.0);

  PicardConfig pc;
  pc.tol = cfg.picard_tol;
  pc.max_iters = cfg.picard_max_iters;

  RecordWriter writer((std::filesystem::path(cfg.output_dir) / "records.csv").string());
  RunResult result{{}, state, 0};

  auto emit = [&](const SimState& s, int iters, double contraction) {
    DiagnosticsRecord r = make_record(s, p, iters, contraction);
    writer.append(r);
    result.records.push_back(r);
    if (on_record) on_record(r);
  };

  emit(state, 0, 0.0);
  if (cfg.snapshot_interval > 0) write_snapshot(snap_path(0), state.phi);

  int step = 0;
  const double t_end = cfg.T;
  try {
    while (state.t < t_end - 1e-14 * std::max(1.0, t_end)) {
      const double dt_step = std::min(cfg.dt, t_end - state.t);
      auto [next, rep] = driver.advance(state, dt_step, pc);
      state = std::move(next);
      ++step;
      emit(state, rep.iterations, rep.contraction_factor);
      if (cfg.snapshot_interval > 0 && step % cfg.snapshot_interval == 0)
        write_snapshot(snap_path(step), state.phi);
      if (state.phi.values.abs().maxCoeff() > 1.2)
        throw StepFailed("run: ||phi||_inf exceeded 1.2");
    }
  } catch (const StepFailed&) {
    // Records up to the failure are already flushed; snapshot the partial
    // state for post-mortems and rethrow for the caller's exit code.
    write_snapshot(snap_path(step), state.phi);
    throw;
  }

  if (cfg.snapshot_interval > 0 && step % cfg.snapshot_interval != 0)
    write_snapshot(snap_path(step), state.phi);
  result.final_state = state;
  result.steps = step;
  return result;
}

}  // namespace qchns

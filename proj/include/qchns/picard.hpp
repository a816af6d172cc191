#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "qchns/config.hpp"
#include "qchns/diagnostics.hpp"
#include "qchns/linear_step.hpp"
#include "qchns/state.hpp"

namespace qchns {

struct PicardConfig {
  double tol = 1e-8;            // relative stacked-increment tolerance
  int max_iters = 50;
  double dt_shrink = 0.5;       // factor applied on non-convergence
  int max_halvings = 5;
  int contraction_window = 3;   // increments kept for rate estimation
  bool refreeze_each_iter = false;  // reassemble the step matrix per iterate
};

struct PicardReport {
  int iterations = 0;
  double contraction_factor = 0.0;  // last increment ratio
  double final_increment = 0.0;     // relative
  double dt_used = 0.0;
  int halvings = 0;
};

/// Per-grid driver for the semi-implicit fixed-point step: freeze the step
/// operator at the previous phase field, move every nonlinear term to the
/// right-hand side, and iterate solves until the relative increment settles.
/// The phase unknown of the inner solve is the in-step increment
/// phi - phi_old; the full field is reconstructed after each solve.
class PicardDriver {
 public:
  PicardDriver(const Grid& g, const PhysParams& p);

  /// Momentum remainder at the current iterate: convection, the potential
  /// gradient and quasi-pressure terms, gravity, the capillary regrouping,
  /// viscosity-variation corrections, and the frozen-coefficient phase
  /// corrections. `old_state` supplies the step's frozen fields.
  VectorField nonlinear_momentum_rhs(const SimState& iter, const SimState& old_state) const;

  /// Phase remainder -div(phi u), mean-removed; the pre-removal mean (a
  /// rounding-level boundary-flux residual) is reported on request.
  ScalarField nonlinear_phase_rhs(const SimState& iter, double* mean_before = nullptr) const;

  /// One accepted time step: Picard iteration with dt halving on
  /// non-convergence. Throws StepFailed after max_halvings.
  std::pair<SimState, PicardReport> advance(const SimState& state, double dt,
                                            const PicardConfig& cfg) const;

  SimState make_state(const VectorField& u, const ScalarField& phi, double t = 0.0) const;

  const NeumannPoissonSolver& compact_solver() const { return compact_; }
  const HelmholtzProjector& projector() const { return projector_; }
  const PhysParams& params() const { return p_; }

 private:
  Grid grid_;
  PhysParams p_;
  NeumannPoissonSolver compact_;
  HelmholtzProjector projector_;
};

struct RunResult {
  std::vector<DiagnosticsRecord> records;
  SimState final_state;
  int steps = 0;
};

/// Outer time loop: builds the initial state from the config descriptor,
/// advances to T, streams records (and phi snapshots) into the output
/// directory, and aborts cleanly on StepFailed after flushing.
RunResult run_simulation(const SimConfig& cfg,
                         const std::function<void(const DiagnosticsRecord&)>& on_record = {});

/// Initial phase field for a config descriptor (uniform, sinusoidal cosine
/// modes, seeded spinodal noise, or a snapshot file).
ScalarField initial_phi(const Grid& g, const InitSpec& spec);

}  // namespace qchns

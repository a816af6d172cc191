#pragma once

#include <cstdint>
#include <string>

#include "qchns/phase.hpp"

namespace qchns {

enum class InitKind { Uniform, Sinusoidal, Spinodal, File };

struct InitSpec {
  InitKind kind = InitKind::Uniform;
  double value = 0.0;  // uniform level
  double amp = 0.0;    // sinusoidal / spinodal amplitude
  int kx = 1, ky = 1;  // sinusoidal mode counts
  uint64_t seed = 0;   // spinodal noise seed
  std::string path;    // snapshot file
};

/// Run configuration, parsed from line-oriented `key = value` text with `#`
/// comments. Unknown keys are errors; a missing required key is reported by
/// name.
struct SimConfig {
  int nx = 0, ny = 0;
  double Lx = 1.0, Ly = 1.0;
  double eps = -0.5;
  double nu = 1.0;
  double a0 = 1.0;
  bool gravity_on = false;
  double dt = 0.0;
  double T = 0.0;
  double picard_tol = 1e-8;
  int picard_max_iters = 50;
  int snapshot_interval = 0;  // steps between phi snapshots, 0 disables
  InitSpec init;
  std::string output_dir;

  PhysParams params() const { return PhysParams::make(eps, nu, a0, gravity_on); }
};

SimConfig parse_config(const std::string& text);
SimConfig load_config(const std::string& path);

}  // namespace qchns

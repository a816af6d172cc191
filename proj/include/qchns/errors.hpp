#pragma once

#include <stdexcept>
#include <string>

namespace qchns {

/// Base class for all solver errors so callers can catch the family at once.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct DomainError : Error {
  using Error::Error;
};

struct NonFiniteInput : Error {
  using Error::Error;
};

/// Right-hand side of the Neumann problem had a nonzero mean beyond tolerance.
struct CompatibilityViolated : Error {
  using Error::Error;
};

struct SolverDiverged : Error {
  using Error::Error;
};

struct ViscosityNonpositive : Error {
  using Error::Error;
};

/// Mixture density dropped below the runtime floor (0.1).
struct DensityFloorViolated : Error {
  using Error::Error;
};

/// 1/alpha - phi_ref lost positivity somewhere; the step matrix would be
/// indefinite in the phase block.
struct CoefficientSignError : Error {
  using Error::Error;
};

struct AssemblyNaN : Error {
  using Error::Error;
};

struct SingularSystem : Error {
  using Error::Error;
};

/// Picard loop failed to converge after the configured number of dt halvings.
struct StepFailed : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace qchns

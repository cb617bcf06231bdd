#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flatres/quadrotor2d.hpp"

namespace flatres {

struct SuiteResult {
  std::string name;
  bool pass = false;
  double metric = 0.0;  // worst observed violation (suite-specific units)
  double tol = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::vector<SuiteResult> suites;
  bool all_pass() const;
  std::string text() const;  // one line per suite, stable across reruns
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  ModelFault fault = ModelFault::None;  // deliberate-fault mode for testing
};

/// Runs every property suite: inverse identities, jet chain rule vs finite
/// differences, MLP gradient vs finite differences, triangular Jacobian
/// zeros, recursion-vs-closed-form thrust map, diffeomorphism dynamic
/// consistency, on-reference controller/open-loop input consistency,
/// double-integrator OCP vs a Riccati recursion, and seeded bitwise
/// reproducibility of training and simulation.
VerifyReport run_verify(const VerifyOptions& opts = {});

}  // namespace flatres

#pragma once

#include <string>

namespace cartanflow {

/// Numerical tolerances used across the library. Relative tolerances are
/// scaled by (1 + norm of the operand) at the point of use.
struct Tolerances {
  double eps_member = 1e-10;    // membership residual, relative
  double eps_group = 1e-8;      // group-invariant residual of K elements
  double eps_solve = 1e-8;      // solve/reconstruction residual, relative
  double cluster_tol = 1e-8;    // eigenvalue clustering, relative
  double face_tol = 1e-6;       // face classification, relative (looser than eps_solve)
  double gap_min = 1e-10;       // default floor for ad_inverse denominators
  double gap_min_flow = 1e-6;   // default gap floor for ODE flows, relative
  double fd_step = 1e-5;        // default finite-difference step for oracles

  /// Apply a "key=value" override; throws InputError on unknown keys.
  void set(const std::string& key, double value);
};

inline Tolerances default_tolerances() { return {}; }

}  // namespace cartanflow

#pragma once

#include <stdexcept>
#include <string>

namespace cartanflow {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeMismatch : Error {
  using Error::Error;
};

struct UnsupportedFamily : Error {
  using Error::Error;
};

struct SolverFailure : Error {
  using Error::Error;
};

/// Raised when a restricted inverse of ad_x is requested at a point whose
/// spectral gap is below the caller's threshold, or when an ODE flow reaches
/// such a point. Carries the offending parameter value when known.
struct NearSingularPoint : Error {
  explicit NearSingularPoint(const std::string& msg, double where = 0.0)
      : Error(msg), t(where) {}
  double t;
};

struct NotInImage : Error {
  using Error::Error;
};

struct NotCommuting : Error {
  using Error::Error;
};

struct NotInChamber : Error {
  using Error::Error;
};

struct ClusterMismatch : Error {
  using Error::Error;
};

struct TooLarge : Error {
  using Error::Error;
};

struct UnknownName : Error {
  using Error::Error;
};

struct OutOfDomain : Error {
  using Error::Error;
};

struct InputError : Error {
  using Error::Error;
};

}  // namespace cartanflow

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cartanflow/lie_ops.hpp"
#include "cartanflow/weyl.hpp"

namespace cartanflow {

/// A path of p elements: explicit samples (evaluated through a local cubic
/// interpolant), a trigonometric polynomial, or a named closed-form builtin.
struct PathSpec {
  enum class Kind { Samples, TrigPoly, Builtin };

  Family family;
  Kind kind = Kind::Builtin;
  double t_start = 0.0;
  double t_end = 1.0;

  // Samples
  std::vector<double> times;
  std::vector<Mat> samples;

  // TrigPoly: rho(t) = const + sum_j cos(j t) cos_coeffs[j-1] + sin(j t) sin_coeffs[j-1]
  Mat const_coeff;
  std::vector<Mat> cos_coeffs;
  std::vector<Mat> sin_coeffs;

  // Builtin
  std::string builtin_name;

  /// Sampled paths may declare their interpolated derivative unusable.
  bool sample_derivative = true;

  bool has_derivative() const;
  /// Membership residual over all coefficient/sample matrices.
  double validate() const;
};

/// The named closed-form path on its natural domain. Throws UnknownName.
PathSpec builtin_spec(const std::string& name);
std::vector<std::string> builtin_names();

std::vector<double> make_grid(double a, double b, int n);

struct PathPoint {
  PElement value;
  std::optional<PElement> derivative;
};

/// Value and (when available) derivative at t. Throws OutOfDomain.
PathPoint eval_path(const PathSpec& spec, double t);

/// Per-sample diagonalization results along a grid. Vectors are either empty
/// or grid-sized; per-sample failures are flagged in `failed`.
struct DiagonalizedPath {
  Family family;
  std::vector<double> times;
  std::vector<Vec> lambda_sorted;
  std::vector<Vec> lambda_lift;
  std::vector<Vec> mu;
  std::vector<KElement> u;
  std::vector<weyl::FaceLabel> face;
  std::vector<double> residual_offdiag;
  std::vector<double> residual_group;
  std::vector<int> failed;       // sample indices where the solver failed
  int match_ambiguous = 0;       // tied jet matches seen during a lift sweep
  double ae_match_fraction = -1; // measurable_curve derivative report
};

/// Canonical sorted curve: per-sample diagonalize + chamber sort + face label.
/// Embarrassingly parallel across samples.
DiagonalizedPath sorted_curve(const PathSpec& spec,
                              const std::vector<double>& grid,
                              const Tolerances& tol = {});

struct PointwiseJet {
  AVector lambda;
  AVector mu;
  KElement u;
};

/// The derivative jet at t: U simultaneously diagonalizes rho and the
/// commutant projection of rho', giving lambda and mu = Ad_U^{-1} Pi_rho rho'.
PointwiseJet pointwise_derivative(const PathSpec& spec, double t,
                                  const Tolerances& tol = {});

/// Differentiable lift across eigenvalue crossings: a sequential sweep that
/// glues per-sample jets with match_jet (derivative weight beta = local step).
DiagonalizedPath c1_lift(const PathSpec& spec, const std::vector<double>& grid,
                         const Tolerances& tol = {});

/// Integrates the diagonalizing group ODE U' = k(t) U with a classical
/// 4-stage explicit step and per-step polar retraction to the group.
/// gap_min <= 0 selects the default floor gap_min_flow * (1 + |rho|).
/// Throws NearSingularPoint(t) when the spectral gap drops below the floor.
DiagonalizedPath analytic_flow(const PathSpec& spec,
                               const std::vector<double>& grid,
                               double gap_min = -1.0,
                               const Tolerances& tol = {});
/// Same, from a caller-provided initial group element (must diagonalize
/// rho(grid[0])).
DiagonalizedPath analytic_flow_from(const PathSpec& spec,
                                    const std::vector<double>& grid,
                                    const KElement& u0, double gap_min = -1.0,
                                    const Tolerances& tol = {});

struct SimultaneousResult {
  KElement u;
  std::vector<AVector> lambdas;
  std::vector<double> residuals;  // off-pattern residual per input
};

/// Joint diagonalization of a commuting tuple by recursive refinement over
/// eigenvalue clusters; the output coordinates are ordered lexicographically
/// by (lambda_1, lambda_2, ...), descending.
SimultaneousResult simultaneous_diagonalize(const std::vector<PElement>& xs,
                                            double commute_tol,
                                            const Tolerances& tol = {});

/// Per-sample measurable diagonalization: (U, lambda, face) with no
/// cross-sample continuity; when derivatives exist also mu, plus the fraction
/// of regular interior samples where the sorted finite difference matches the
/// multiset of mu.
DiagonalizedPath measurable_curve(const PathSpec& spec,
                                  const std::vector<double>& grid,
                                  const Tolerances& tol = {});

/// Defect of the eigenprojection-derivative identity: the flow generator
/// k(t), mapped to the ambient operator picture, against the central
/// finite-difference of 1/2 sum [P_k', P_k]. O(h_fd^2) + solver noise.
double resolvent_crosscheck(const PathSpec& spec, double t, double h_fd,
                            const Tolerances& tol = {});

namespace detail {
void parallel_for(int n, const std::function<void(int)>& fn);
}

}  // namespace cartanflow

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cartanflow/path.hpp"

namespace cartanflow::oracles {

/// Deterministic 64-bit generator (splitmix64: adds the golden-gamma
/// 0x9E3779B97F4A7C15 and mixes with shifts/multiplies). Identical seeds
/// reproduce identical streams on every platform; normal deviates come from
/// an explicit Box-Muller transform, never from std:: distributions.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Standard normal via Box-Muller.
  double gauss() {
    double u1 = uniform(), u2 = uniform();
    if (u1 <= 0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }
};

enum class SpectralProfile { Generic, Clustered, CrossingEngineered };

/// Reproducible random instances per family. `Generic` draws chamber
/// coordinates with a guaranteed separation (gap bounded away from zero) and
/// conjugates by a random group element; `Clustered` plants repeated
/// coordinates.
struct InstanceGenerator {
  Family family;
  std::uint64_t seed;
  SpectralProfile profile = SpectralProfile::Generic;

  PElement random_p(SplitMix64& rng) const;
  KElement random_k(SplitMix64& rng) const;
  AVector random_a(SplitMix64& rng) const;

  /// A trig-poly path built around a well-separated base point; stays regular
  /// on [0, 1] for the default amplitude.
  PathSpec random_trig_path(SplitMix64& rng, int harmonics = 2,
                            double amplitude = 0.05) const;

  /// CrossingEngineered only: a trig-poly path whose middle two coordinate
  /// curves cross exactly once in (0.2, 0.8), with the crossing time and the
  /// derivative-jump magnitude of the sorted curve returned.
  struct CrossingPath {
    PathSpec spec;
    double t_cross;
    double sorted_jump;  // |d/dt| jump of the sorted curve at the crossing
  };
  CrossingPath crossing_path(SplitMix64& rng) const;
};

/// Exact minimum of ||u - w v|| over the whole Weyl group by exhaustive
/// enumeration (permutations x signs). Throws TooLarge for r > 6.
double brute_force_weyl_min(const AVector& u, const AVector& v);

/// Eigenprojections of the associated Hermitian operator at t and their
/// central finite-difference derivatives, with clusters matched across the
/// stencil by nearest distinct value. Throws ClusterMismatch when the stencil
/// cluster counts disagree. With `richardson` the h and h/2 stencils are
/// extrapolated, cancelling the leading O(h^2) term.
struct ProjectorDerivatives {
  Vec values;                    // distinct values at t, descending
  std::vector<Mat> projections;  // P_k(t)
  std::vector<Mat> derivatives;  // (P_k(t+h) - P_k(t-h)) / (2h)
};

ProjectorDerivatives finite_diff_projectors(const PathSpec& spec, double t,
                                            double h,
                                            const Tolerances& tol = {},
                                            bool richardson = false);

/// Named closed-form paths: "rellich", "kriegl-like", "chamber-cross",
/// "rotation-flow". Throws UnknownName.
PathSpec corpus(const std::string& name);
std::vector<std::string> corpus_names();

}  // namespace cartanflow::oracles

#pragma once

#include <vector>

#include "cartanflow/family.hpp"

namespace cartanflow {

/// Tangent vector in the Lie algebra of K. EVD families use `left`
/// (skew-symmetric / skew-Hermitian n x n); SVD families carry the pair
/// (left: skew p x p, right: skew q x q) acting as Y -> left Y - Y right.
struct KTangent {
  Family family;
  Mat left;
  Mat right;  // empty for EVD families

  double frob() const {
    double l = left.squaredNorm();
    double r = right.size() ? right.squaredNorm() : 0.0;
    return std::sqrt(l + r);
  }
};

/// Spectral data of the associated Hermitian operator of a p element:
/// clustered distinct eigenvalues, their orthogonal eigenprojections, the
/// smallest root value over the distinct spectrum (the "gap", which bounds
/// every ad-inverse denominator), and a regularity flag evaluated on the raw
/// coordinates (all root values nonzero).
struct EigenStructure {
  Family family;
  Vec distinct_values;           // descending
  std::vector<Mat> projections;  // same order; sum to the identity
  Vec a_coords;                  // canonical coordinates (chamber order)
  double gap = 0.0;
  bool regular_point = false;

  bool regular() const { return regular_point; }
};

/// Commutator of two p elements, expressed in K-tangent coordinates.
KTangent bracket_pp(const PElement& x, const PElement& y);

/// ad_k(x) = [k, x]; lands back in p.
PElement bracket_kp(const KTangent& k, const PElement& x);

KTangent k_tangent_zero(const Family& f);
KTangent add(const KTangent& a, const KTangent& b);
KTangent scale(const KTangent& a, double s);

/// Skewness/shape residual of a K-tangent.
double validate_k_tangent(const KTangent& k);

/// Eigenvalues of the associated Hermitian operator clustered at relative
/// tolerance cluster_tol, with per-cluster projections. The gap is the
/// minimum of the family's root values evaluated at the canonical
/// coordinates: differences (type A), plus sums and magnitudes (type B),
/// plus sums only (type D).
EigenStructure eigen_structure(const PElement& x, double cluster_tol);

/// Orthogonal projection onto the commutant of x in p:
/// Pi_x(b) = sum_k P_k b P_k in the associated Hermitian picture.
PElement commutant_projection(const EigenStructure& es, const PElement& b);
PElement commutant_projection(const PElement& x, const PElement& b,
                              double cluster_tol = 1e-8);

/// Complement Pi_x^perp(b) = b - Pi_x(b).
PElement complement_projection(const EigenStructure& es, const PElement& b);

/// Restricted inverse of ad: the unique k orthogonal to the stabilizer
/// algebra with bracket_kp(k, x) = c, computed through eigenprojections as
/// -sum_{k != l} P_k c P_l / (h_k - h_l). Requires c (numerically) in the
/// image of ad_x and gap(x) >= gap_min.
KTangent ad_inverse(const EigenStructure& es, const PElement& c,
                    double gap_min, const Tolerances& tol = {});
KTangent ad_inverse(const PElement& x, const PElement& c, double gap_min,
                    const Tolerances& tol = {});

}  // namespace cartanflow

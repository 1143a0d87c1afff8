#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cartanflow/config.hpp"
#include "cartanflow/errors.hpp"
#include "cartanflow/types.hpp"

namespace cartanflow {

// ---------------------------------------------------------------------------
// Family registry
//
// Each supported decomposition is a symmetric-pair family: a flat space p of
// structured matrices acted on by a compact group K, with a maximal Abelian
// subspace a ("the diagonals") and a finite Weyl group of residual symmetries.
// ---------------------------------------------------------------------------

enum class FamilyId : std::uint8_t {
  RealSymEvd,   // traceless real symmetric n x n, K = SO(n)
  HermEvd,      // traceless Hermitian n x n, K = SU(n)
  RealSvd,      // real p x q, K = S(O(p) x O(q))
  ComplexSvd,   // complex p x q, K = S(U(p) x U(q))
  SkewSymEvd,   // real skew-symmetric n x n, K = SO(n)
};

enum class WeylType : std::uint8_t {
  PermA,        // permutations
  SignedPermB,  // signed permutations
  SignedPermD,  // signed permutations with even sign count
};

enum class ScalarField : std::uint8_t { Real, Complex };

struct Family {
  FamilyId id;
  int rows = 0;
  int cols = 0;

  int a_dim() const;
  WeylType weyl_type() const;
  ScalarField scalar_field() const;
  /// Dimension of the associated Hermitian operator picture (rows for EVD
  /// families, rows+cols for SVD families).
  int herm_dim() const;
  bool is_svd() const { return id == FamilyId::RealSvd || id == FamilyId::ComplexSvd; }
  bool is_real() const { return scalar_field() == ScalarField::Real; }

  bool operator==(const Family&) const = default;
};

Family real_sym_evd(int n);
Family herm_evd(int n);
Family real_svd(int p, int q);
Family complex_svd(int p, int q);
Family skew_sym_evd(int n);

/// Parse/format the serialized identifiers, e.g. "herm-evd:4", "real-svd:3x2".
Family parse_family(const std::string& s);
std::string to_string(const Family& f);

// ---------------------------------------------------------------------------
// Elements
// ---------------------------------------------------------------------------

/// An element of the flat space p, stored densely. Real families keep a zero
/// imaginary part; validate_p reports any violation.
struct PElement {
  Family family;
  Mat data;
};

/// Canonical coordinates on the maximal Abelian subspace a: eigenvalues,
/// singular values, or skew block parameters.
struct AVector {
  Family family;
  Vec coords;

  /// Norm induced by the Frobenius norm of the embedded matrix (so that
  /// distances on a agree with distances on p).
  double induced_norm() const;
};

/// A diagonalizing group element. EVD families use `left` only (acting by
/// conjugation); SVD families act as Y -> left * Y * right^*.
struct KElement {
  Family family;
  Mat left;
  Mat right;           // empty for EVD families
  bool det_relaxed = false;  // set when only |det| = 1 could be enforced
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Max-norm residual of the family membership constraints (symmetry, trace,
/// realness, ...). Zero means exact membership. Throws ShapeMismatch.
double validate_p(const PElement& x);

/// Residual of the group invariants of U (unitarity/orthogonality blocks and
/// the determinant condition, skipped when det_relaxed is set).
double validate_k(const KElement& u);

/// The concrete matrix representing a canonical coordinate vector.
PElement embed_a(const AVector& v);

/// Left inverse of embed_a: extracted coordinates plus the max-norm
/// off-pattern residual ||x - embed_a(coords)||.
std::pair<AVector, double> project_a(const PElement& x);

struct DiagonalizeResult {
  KElement u;
  AVector lambda;  // in the closed Weyl chamber
};

/// Family-specific dense diagonalization: Ad_U^{-1}(x) = embed_a(lambda) with
/// lambda in the closed Weyl chamber and U satisfying the group invariants.
DiagonalizeResult diagonalize_point(const PElement& x,
                                    const Tolerances& tol = {});

/// Adjoint action of U on x: U x U^{-1} for EVD families, U_L Y U_R^* for SVD
/// families.
PElement adjoint_action(const KElement& u, const PElement& x);

/// Composition of group elements (acting left to right: uv acts as u after v).
KElement compose(const KElement& u, const KElement& v);
KElement k_identity(const Family& f);
KElement k_inverse(const KElement& u);

namespace detail {
/// Associated Hermitian operator of a p element: x itself (Hermitian EVD
/// families), -i x (skew-symmetric), or the (p+q) embedding [[0,Y],[Y*,0]].
Mat to_herm_picture(const PElement& x);
/// Inverse of to_herm_picture.
Mat p_from_herm_picture(const Family& f, const Mat& h);
void check_shape(const Family& f, const Mat& m);
/// Enforce the determinant condition on a diagonalizer, negating trailing
/// canonical coordinates where the family requires it. kernel_dims tells the
/// skew-symmetric repair whether a determinant flip is free.
void repair_determinant(KElement& u, Vec& lambda, int kernel_dims);
/// Stable descending sort permutation.
std::vector<int> descending_order(const Vec& values);
}  // namespace detail

}  // namespace cartanflow

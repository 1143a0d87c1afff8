#pragma once

#include <string>
#include <vector>

#include "cartanflow/family.hpp"

namespace cartanflow::weyl {

/// A signed permutation: coordinate j of the input lands in slot perm[j] with
/// sign signs[perm[j]], i.e. (w.v)_i = signs[i] * v_{perm^{-1}(i)}.
/// PermA keeps all signs +1; SignedPermD keeps the sign product +1.
struct WeylElement {
  WeylType type = WeylType::PermA;
  std::vector<int> perm;
  std::vector<int> signs;

  int rank() const { return static_cast<int>(perm.size()); }
  bool is_identity() const;
  bool operator==(const WeylElement&) const = default;
};

WeylElement identity(WeylType type, int r);
WeylElement inverse(const WeylElement& w);
/// Group composition: apply(compose(a, b), v) == apply(a, apply(b, v)).
WeylElement compose(const WeylElement& a, const WeylElement& b);
/// Strict ordering by (perm sequence, signs with +1 before -1); used for
/// deterministic tie-breaking.
bool lex_less(const WeylElement& a, const WeylElement& b);

Vec apply(const WeylElement& w, const Vec& v);
AVector apply(const WeylElement& w, const AVector& v);

struct SortResult {
  AVector sorted;
  WeylElement w;  // sorted = w . v, exactly
};

/// Canonical representative in the closed Weyl chamber: non-increasing
/// (PermA), non-increasing and nonnegative (SignedPermB), non-increasing with
/// the last coordinate allowed negative up to magnitude (SignedPermD).
SortResult chamber_sort(const AVector& v);

bool in_chamber(const AVector& v, double tol);

/// Face of the closed chamber: which root equalities hold at v, i.e. the
/// grouping of coordinates into equality classes plus zero/sign pinning.
struct FaceLabel {
  std::vector<int> class_sizes;   // sizes of the equality classes, in order
  int zero_class = -1;            // index of the zero/sign-ambiguous class
  std::string hash;               // e.g. "A:{12}{3}", "B:{1}{2:0}"

  bool regular() const;
  bool operator==(const FaceLabel&) const = default;
};

FaceLabel face_of(const AVector& v, double tol);

/// Matches a jet (value, derivative) against a predecessor by minimizing
/// ||w.value - prev.value||^2 + beta ||w.deriv - prev.deriv||^2 over the Weyl
/// group, solved as a linear assignment on (index, sign) pairs.
struct JetMatch {
  WeylElement w;
  double cost = 0.0;
  bool ambiguous = false;  // an (essentially) tied optimum was detected
};

JetMatch match_jet(WeylType type, const Vec& prev_value, const Vec& prev_deriv,
                   const Vec& next_value, const Vec& next_deriv, double beta);

namespace detail {
/// O(r^3) solver for the rectangular assignment problem (square here).
/// Returns the column assigned to each row.
std::vector<int> solve_assignment(const RMat& cost);
}  // namespace detail

}  // namespace cartanflow::weyl

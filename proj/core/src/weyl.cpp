#include "cartanflow/weyl.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

namespace cartanflow::weyl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int sign_of(double x) { return x < 0 ? -1 : 1; }

void check_rank(const WeylElement& w, const Vec& v) {
  if (w.rank() != v.size())
    throw ShapeMismatch("Weyl element rank " + std::to_string(w.rank()) +
                        " does not match vector length " +
                        std::to_string(v.size()));
}

}  // namespace

bool WeylElement::is_identity() const {
  for (int j = 0; j < rank(); ++j)
    if (perm[j] != j || signs[j] != 1) return false;
  return true;
}

WeylElement identity(WeylType type, int r) {
  WeylElement w;
  w.type = type;
  w.perm.resize(r);
  std::iota(w.perm.begin(), w.perm.end(), 0);
  w.signs.assign(r, 1);
  return w;
}

WeylElement inverse(const WeylElement& w) {
  WeylElement out = identity(w.type, w.rank());
  for (int j = 0; j < w.rank(); ++j) {
    out.perm[w.perm[j]] = j;
    out.signs[j] = w.signs[w.perm[j]];
  }
  return out;
}

WeylElement compose(const WeylElement& a, const WeylElement& b) {
  if (a.rank() != b.rank()) throw ShapeMismatch("compose: rank mismatch");
  WeylElement out = identity(a.type, a.rank());
  for (int j = 0; j < a.rank(); ++j) out.perm[j] = a.perm[b.perm[j]];
  WeylElement ainv = inverse(a);
  for (int i = 0; i < a.rank(); ++i)
    out.signs[i] = a.signs[i] * b.signs[ainv.perm[i]];
  return out;
}

bool lex_less(const WeylElement& a, const WeylElement& b) {
  if (a.perm != b.perm) return a.perm < b.perm;
  // +1 sorts before -1
  for (int i = 0; i < a.rank(); ++i)
    if (a.signs[i] != b.signs[i]) return a.signs[i] > b.signs[i];
  return false;
}

Vec apply(const WeylElement& w, const Vec& v) {
  check_rank(w, v);
  Vec out(v.size());
  for (int j = 0; j < w.rank(); ++j)
    out[w.perm[j]] = w.signs[w.perm[j]] * v[j];
  return out;
}

AVector apply(const WeylElement& w, const AVector& v) {
  return {v.family, apply(w, v.coords)};
}

// --- chamber ----------------------------------------------------------------

SortResult chamber_sort(const AVector& v) {
  const WeylType type = v.family.weyl_type();
  const int r = static_cast<int>(v.coords.size());
  std::vector<int> order(r);
  std::iota(order.begin(), order.end(), 0);

  if (type == WeylType::PermA) {
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return v.coords[a] > v.coords[b];
    });
  } else {
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return std::abs(v.coords[a]) > std::abs(v.coords[b]);
    });
  }

  WeylElement w = identity(type, r);
  Vec sorted(r);
  for (int slot = 0; slot < r; ++slot) {
    int j = order[slot];
    w.perm[j] = slot;
    if (type == WeylType::PermA) {
      w.signs[slot] = 1;
      sorted[slot] = v.coords[j];
    } else {
      w.signs[slot] = sign_of(v.coords[j]);
      sorted[slot] = w.signs[slot] * v.coords[j];
    }
  }

  if (type == WeylType::SignedPermD) {
    int prod = 1;
    for (int s : w.signs) prod *= s;
    if (prod < 0) {
      // Negate the smallest-magnitude slot to restore the even sign count.
      w.signs[r - 1] = -w.signs[r - 1];
      sorted[r - 1] = -sorted[r - 1];
    }
  }
  return {AVector{v.family, std::move(sorted)}, std::move(w)};
}

bool in_chamber(const AVector& v, double tol) {
  const WeylType type = v.family.weyl_type();
  const int r = static_cast<int>(v.coords.size());
  const auto& c = v.coords;
  for (int i = 0; i + 1 < r; ++i) {
    double next = c[i + 1];
    if (type == WeylType::SignedPermD && i + 1 == r - 1)
      next = std::abs(c[i + 1]);
    if (c[i] < next - tol) return false;
  }
  if (type == WeylType::SignedPermB && r > 0 && c[r - 1] < -tol) return false;
  return true;
}

bool FaceLabel::regular() const {
  for (int s : class_sizes)
    if (s != 1) return false;
  return zero_class < 0;
}

FaceLabel face_of(const AVector& v, double tol) {
  const WeylType type = v.family.weyl_type();
  const int r = static_cast<int>(v.coords.size());
  const double scale = tol * (1.0 + v.coords.norm());
  if (!in_chamber(v, scale))
    throw NotInChamber("face_of requires a chamber representative");

  // Magnitudes are what clusters: only the last type-D coordinate may be
  // negative in the chamber.
  Vec m = v.coords.cwiseAbs();
  if (type == WeylType::PermA) m = v.coords;

  FaceLabel label;
  std::vector<std::pair<int, int>> classes;  // (begin, size)
  int begin = 0;
  for (int i = 1; i <= r; ++i) {
    if (i == r || std::abs(m[i - 1] - m[i]) > scale) {
      classes.push_back({begin, i - begin});
      begin = i;
    }
  }

  int zero_class = -1;
  if (type == WeylType::SignedPermB && !classes.empty()) {
    auto [b, s] = classes.back();
    if (std::abs(m[b]) <= scale) zero_class = static_cast<int>(classes.size()) - 1;
  }
  bool d_zero = false, d_paired = false;
  if (type == WeylType::SignedPermD && r >= 1) {
    d_zero = std::abs(v.coords[r - 1]) <= scale;
    // v_{r-1} + v_r ~ 0 with v_r < 0: the second type-D wall.
    d_paired = r >= 2 && v.coords[r - 1] < -scale &&
               classes.back().second >= 2;
    if ((d_zero && classes.back().second >= 2) || d_paired)
      zero_class = static_cast<int>(classes.size()) - 1;
  }

  std::string h;
  switch (type) {
    case WeylType::PermA: h = "A:"; break;
    case WeylType::SignedPermB: h = "B:"; break;
    case WeylType::SignedPermD: h = "D:"; break;
  }
  const char* sep = r > 9 ? "," : "";
  for (size_t ci = 0; ci < classes.size(); ++ci) {
    h += "{";
    for (int k = 0; k < classes[ci].second; ++k) {
      if (k > 0) h += sep;
      h += std::to_string(classes[ci].first + k + 1);
    }
    if (static_cast<int>(ci) == zero_class) h += ":0";
    else if (type == WeylType::SignedPermD && ci + 1 == classes.size() && d_zero)
      h += ":0";  // sign-ambiguous representative, stabilizer still trivial
    h += "}";
  }

  label.zero_class = zero_class;
  label.hash = std::move(h);
  label.class_sizes.reserve(classes.size());
  for (auto& [b, s] : classes) label.class_sizes.push_back(s);
  return label;
}

// --- assignment -------------------------------------------------------------

namespace detail {

std::vector<int> solve_assignment(const RMat& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace detail

// --- jet matching -----------------------------------------------------------

JetMatch match_jet(WeylType type, const Vec& prev_value, const Vec& prev_deriv,
                   const Vec& next_value, const Vec& next_deriv, double beta) {
  const int r = static_cast<int>(prev_value.size());
  if (prev_deriv.size() != r || next_value.size() != r ||
      next_deriv.size() != r)
    throw ShapeMismatch("match_jet: jet lengths differ");

  double big = std::max({max_norm(prev_value), max_norm(prev_deriv),
                         max_norm(next_value), max_norm(next_deriv), 1.0});
  const double tie_eps = 1e-12 * big * big;

  auto slot_cost = [&](int j, int i, int s) {
    double dv = s * next_value[j] - prev_value[i];
    double dd = s * next_deriv[j] - prev_deriv[i];
    return dv * dv + beta * dd * dd;
  };

  // Best sign per (source, slot) pair; the assignment then decouples over W.
  RMat cost(r, r);
  Eigen::MatrixXi best_sign(r, r);
  for (int j = 0; j < r; ++j) {
    for (int i = 0; i < r; ++i) {
      if (type == WeylType::PermA) {
        cost(j, i) = slot_cost(j, i, 1);
        best_sign(j, i) = 1;
      } else {
        double cp = slot_cost(j, i, 1), cm = slot_cost(j, i, -1);
        cost(j, i) = std::min(cp, cm);
        best_sign(j, i) = cp <= cm ? 1 : -1;
      }
    }
  }

  std::vector<int> perm = detail::solve_assignment(cost);
  bool sign_tie = false;
  if (type != WeylType::PermA) {
    // only ties on cells the assignment actually uses are ambiguous
    for (int j = 0; j < r; ++j) {
      double cp = slot_cost(j, perm[j], 1), cm = slot_cost(j, perm[j], -1);
      if (std::abs(cp - cm) <= tie_eps) sign_tie = true;
    }
  }

  WeylElement w = identity(type, r);
  w.perm = perm;
  for (int j = 0; j < r; ++j) w.signs[perm[j]] = best_sign(j, perm[j]);

  // Deterministic tie-breaking: sources with identical jets are interchangeable;
  // give the smallest source index the smallest slot.
  bool dup = false;
  {
    std::vector<int> order(r);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      if (next_value[a] != next_value[b]) return next_value[a] < next_value[b];
      return next_deriv[a] < next_deriv[b];
    });
    int gb = 0;
    auto same = [&](int a, int b) {
      return std::abs(next_value[a] - next_value[b]) <= tie_eps &&
             std::abs(next_deriv[a] - next_deriv[b]) <= tie_eps;
    };
    for (int i = 1; i <= r; ++i) {
      if (i == r || !same(order[i - 1], order[i])) {
        if (i - gb > 1) {
          dup = true;
          std::vector<int> group(order.begin() + gb, order.begin() + i);
          std::sort(group.begin(), group.end());
          std::vector<int> slots;
          for (int j : group) slots.push_back(w.perm[j]);
          std::sort(slots.begin(), slots.end());
          for (size_t k = 0; k < group.size(); ++k) w.perm[group[k]] = slots[k];
        }
        gb = i;
      }
    }
  }

  // Zero jets carry no sign information; pin them to +1.
  if (type != WeylType::PermA) {
    for (int j = 0; j < r; ++j)
      if (std::abs(next_value[j]) <= tie_eps && std::abs(next_deriv[j]) <= tie_eps)
        w.signs[w.perm[j]] = 1;
  }

  double total = 0.0;
  for (int j = 0; j < r; ++j) total += slot_cost(j, w.perm[j], w.signs[w.perm[j]]);

  if (type == WeylType::SignedPermD) {
    int prod = 1;
    for (int s : w.signs) prod *= s;
    if (prod < 0) {
      // Flip the sign whose flip raises the cost least; prefer the largest
      // slot index among ties so that -1 lands as late as possible.
      int best = -1;
      double best_delta = kInf;
      for (int j = 0; j < r; ++j) {
        int i = w.perm[j];
        double delta = slot_cost(j, i, -w.signs[i]) - slot_cost(j, i, w.signs[i]);
        if (delta < best_delta - tie_eps ||
            (delta <= best_delta + tie_eps && i >= (best < 0 ? -1 : w.perm[best]))) {
          best_delta = delta;
          best = j;
        }
      }
      w.signs[w.perm[best]] = -w.signs[w.perm[best]];
      total += best_delta;

      // The single-flip repair can be beaten by a different permutation; at
      // small rank recover the exact optimum exhaustively.
      if (r <= 6) {
        std::vector<int> perm2(r);
        std::iota(perm2.begin(), perm2.end(), 0);
        do {
          for (unsigned mask = 0; mask < (1u << r); ++mask) {
            if (std::popcount(mask) % 2 != 0) continue;
            double c = 0.0;
            for (int j = 0; j < r; ++j) {
              int s = (mask >> perm2[j]) & 1u ? -1 : 1;
              c += slot_cost(j, perm2[j], s);
              if (c >= total) break;
            }
            if (c < total - tie_eps) {
              total = c;
              w.perm = perm2;
              for (int j = 0; j < r; ++j)
                w.signs[perm2[j]] = (mask >> perm2[j]) & 1u ? -1 : 1;
            }
          }
        } while (std::next_permutation(perm2.begin(), perm2.end()));
      }
    }
  }

  return {std::move(w), total, sign_tie || dup};
}

}  // namespace cartanflow::weyl

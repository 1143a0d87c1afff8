#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cartanflow/oracles.hpp"
#include "cartanflow/weyl.hpp"

using namespace cartanflow;
using namespace cartanflow::weyl;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

WeylElement random_element(WeylType type, int r, oracles::SplitMix64& rng) {
  WeylElement w = identity(type, r);
  // Fisher-Yates on the slots
  for (int i = r - 1; i > 0; --i) {
    int j = static_cast<int>(rng.uniform() * (i + 1));
    std::swap(w.perm[i], w.perm[j]);
  }
  if (type != WeylType::PermA) {
    int prod = 1;
    for (int i = 0; i < r; ++i) {
      w.signs[i] = rng.uniform() < 0.5 ? -1 : 1;
      prod *= w.signs[i];
    }
    if (type == WeylType::SignedPermD && prod < 0) w.signs[0] = -w.signs[0];
  }
  return w;
}

// Exhaustive enumeration of the group for small ranks.
std::vector<WeylElement> enumerate_group(WeylType type, int r) {
  std::vector<WeylElement> out;
  std::vector<int> perm(r);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    unsigned masks = type == WeylType::PermA ? 1u : (1u << r);
    for (unsigned mask = 0; mask < masks; ++mask) {
      int prod = 1;
      for (int i = 0; i < r; ++i)
        if ((mask >> i) & 1u) prod = -prod;
      if (type == WeylType::SignedPermD && prod < 0) continue;
      WeylElement w = identity(type, r);
      w.perm = perm;
      for (int i = 0; i < r; ++i) w.signs[i] = ((mask >> i) & 1u) ? -1 : 1;
      out.push_back(std::move(w));
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

const Family kA = herm_evd(4);          // PermA(4)
const Family kB = real_svd(5, 4);       // SignedPermB(4)
const Family kD = skew_sym_evd(8);      // SignedPermD(4)

Family family_for(WeylType t, int r) {
  switch (t) {
    case WeylType::PermA: return herm_evd(r);
    case WeylType::SignedPermB: return real_svd(r + 1, r);
    case WeylType::SignedPermD: return skew_sym_evd(2 * r);
  }
  return herm_evd(r);
}

}  // namespace

TEST_CASE("chamber_sort examples") {
  {
    auto [sorted, w] = chamber_sort({herm_evd(3), vec({3, 2, 1})});
    CHECK(sorted.coords == vec({3, 2, 1}));
    CHECK(w.is_identity());
  }
  {
    auto [sorted, w] = chamber_sort({herm_evd(3), vec({1, 3, 2})});
    CHECK(sorted.coords == vec({3, 2, 1}));
    CHECK(apply(w, vec({1, 3, 2})) == sorted.coords);
  }
  {
    // type D, r = 2: both signs flip, product stays +1
    auto [sorted, w] = chamber_sort({skew_sym_evd(4), vec({-5, 1})});
    CHECK(sorted.coords == vec({5, -1}));
    CHECK(w.signs[0] * w.signs[1] == 1);
    CHECK(apply(w, vec({-5, 1})) == sorted.coords);
  }
  {
    // type B: magnitudes, all nonnegative
    auto [sorted, w] = chamber_sort({real_svd(3, 2), vec({-1, 3})});
    CHECK(sorted.coords == vec({3, 1}));
  }
}

TEST_CASE("in_chamber") {
  CHECK(in_chamber({herm_evd(3), vec({0, 0, 0})}, 0.0));
  CHECK_FALSE(in_chamber({herm_evd(2), vec({1, 2})}, 1e-9));
  CHECK_FALSE(in_chamber({real_svd(3, 2), vec({2, -1})}, 1e-9));
  CHECK(in_chamber({skew_sym_evd(4), vec({2, -1})}, 0.0));   // D allows it
  CHECK_FALSE(in_chamber({skew_sym_evd(4), vec({1, -2})}, 1e-9));
}

TEST_CASE("face_of examples") {
  CHECK(face_of({herm_evd(3), vec({3, 2, 1})}, 1e-6).hash == "A:{1}{2}{3}");
  CHECK(face_of({herm_evd(3), vec({3, 2, 1})}, 1e-6).regular());
  CHECK(face_of({herm_evd(3), vec({1, 1, -2})}, 1e-6).hash == "A:{12}{3}");
  CHECK_FALSE(face_of({herm_evd(3), vec({1, 1, -2})}, 1e-6).regular());
  auto b = face_of({real_svd(3, 2), vec({2, 0})}, 1e-6);
  CHECK(b.hash == "B:{1}{2:0}");
  CHECK(b.zero_class == 1);
  CHECK_THROWS_AS(face_of({herm_evd(2), vec({1, 2})}, 1e-9), NotInChamber);
}

TEST_CASE("apply: examples and group laws") {
  oracles::SplitMix64 rng(5);
  {
    WeylElement w = identity(WeylType::PermA, 3);
    CHECK(apply(w, vec({1, 2, 3})) == vec({1, 2, 3}));
    std::swap(w.perm[0], w.perm[1]);  // swap slots of sources 0, 1
    CHECK(apply(w, vec({5, 7, 9})) == vec({7, 5, 9}));
  }
  for (WeylType type :
       {WeylType::PermA, WeylType::SignedPermB, WeylType::SignedPermD}) {
    for (int trial = 0; trial < 50; ++trial) {
      int r = 2 + static_cast<int>(rng.uniform() * 5);
      WeylElement w1 = random_element(type, r, rng);
      WeylElement w2 = random_element(type, r, rng);
      Vec v(r);
      for (int i = 0; i < r; ++i) v[i] = rng.gauss();
      // action law and inverses, exactly
      CHECK(apply(compose(w1, w2), v) == apply(w1, apply(w2, v)));
      CHECK(apply(inverse(w1), apply(w1, v)) == v);
      CHECK(compose(w1, inverse(w1)).is_identity());
      // isometry
      Vec u(r);
      for (int i = 0; i < r; ++i) u[i] = rng.gauss();
      CHECK((apply(w1, u) - apply(w1, v)).norm() ==
            doctest::Approx((u - v).norm()).epsilon(1e-15));
    }
  }
}

TEST_CASE("chamber_sort: idempotent, achieves the orbit, nonexpansive") {
  oracles::SplitMix64 rng(41);
  for (const Family& f : {kA, kB, kD}) {
    for (int trial = 0; trial < 2000; ++trial) {
      Vec v(f.a_dim()), u(f.a_dim());
      for (int i = 0; i < f.a_dim(); ++i) {
        v[i] = rng.gauss();
        u[i] = rng.gauss();
      }
      auto sv = chamber_sort({f, v});
      auto su = chamber_sort({f, u});
      CHECK(in_chamber(sv.sorted, 0.0));
      CHECK(apply(sv.w, v) == sv.sorted.coords);  // exact
      CHECK(chamber_sort(sv.sorted).w.is_identity());
      // nonexpansive, and exactly the orbit distance for small rank
      double lhs = (su.sorted.coords - sv.sorted.coords).norm();
      CHECK(lhs <= (u - v).norm() + 1e-12);
    }
  }
}

TEST_CASE("chamber distance equals the brute-force Weyl minimum (r <= 5)") {
  oracles::SplitMix64 rng(43);
  for (WeylType type :
       {WeylType::PermA, WeylType::SignedPermB, WeylType::SignedPermD}) {
    for (int r : {2, 3, 5}) {
      Family f = family_for(type, r);
      for (int trial = 0; trial < 300; ++trial) {
        Vec v(r), u(r);
        for (int i = 0; i < r; ++i) {
          v[i] = rng.gauss();
          u[i] = rng.gauss();
        }
        double sorted_dist = (chamber_sort({f, u}).sorted.coords -
                              chamber_sort({f, v}).sorted.coords)
                                 .norm();
        double brute = oracles::brute_force_weyl_min({f, u}, {f, v});
        REQUIRE(std::abs(sorted_dist - brute) <= 1e-12);
      }
    }
  }
}

TEST_CASE("match_jet: examples") {
  {
    Vec v = vec({1, -1}), d = vec({1, -1});
    auto m = match_jet(WeylType::PermA, v, d, v, d, 1e-3);
    CHECK(m.w.is_identity());
    CHECK(m.cost == doctest::Approx(0.0));
  }
  {
    // identity wins when values track
    auto m = match_jet(WeylType::PermA, vec({1, -1}), vec({1, -1}),
                       vec({1.1, -1.1}), vec({1, -1}), 1e-3);
    CHECK(m.w.is_identity());
  }
  {
    // crossing: the swap recovers the straight lines
    double eps = 1e-8;
    auto m = match_jet(WeylType::PermA, vec({eps, -eps}), vec({1, -1}),
                       vec({eps, -eps}), vec({-1, 1}), 1e-3);
    CHECK_FALSE(m.w.is_identity());
    CHECK(apply(m.w, vec({eps, -eps})) == vec({-eps, eps}));
  }
}

TEST_CASE("match_jet: optimal against brute force for r <= 5") {
  oracles::SplitMix64 rng(47);
  for (WeylType type :
       {WeylType::PermA, WeylType::SignedPermB, WeylType::SignedPermD}) {
    for (int r : {2, 3, 4, 5}) {
      auto group = enumerate_group(type, r);
      for (int trial = 0; trial < 120; ++trial) {
        Vec pv(r), pd(r), nv(r), nd(r);
        for (int i = 0; i < r; ++i) {
          pv[i] = rng.gauss();
          pd[i] = rng.gauss();
          // with some probability, derive next from prev to create near-ties
          if (rng.uniform() < 0.5) {
            nv[i] = pv[i] + 0.01 * rng.gauss();
            nd[i] = pd[i] + 0.01 * rng.gauss();
          } else {
            nv[i] = rng.gauss();
            nd[i] = rng.gauss();
          }
        }
        double beta = 0.01;
        auto m = match_jet(type, pv, pd, nv, nd, beta);
        double best = std::numeric_limits<double>::infinity();
        for (const WeylElement& w : group) {
          double c = (apply(w, nv) - pv).squaredNorm() +
                     beta * (apply(w, nd) - pd).squaredNorm();
          best = std::min(best, c);
        }
        REQUIRE(m.cost <= best + 1e-10 * (1.0 + best));
        // and m.w actually achieves the reported cost
        double check = (apply(m.w, nv) - pv).squaredNorm() +
                       beta * (apply(m.w, nd) - pd).squaredNorm();
        REQUIRE(std::abs(check - m.cost) <= 1e-10 * (1.0 + best));
      }
    }
  }
}

TEST_CASE("lex_less orders by permutation, then +1 before -1") {
  WeylElement id = identity(WeylType::SignedPermB, 2);
  WeylElement swap = id;
  std::swap(swap.perm[0], swap.perm[1]);
  WeylElement flipped = id;
  flipped.signs[1] = -1;
  CHECK(lex_less(id, swap));
  CHECK(lex_less(id, flipped));
  CHECK_FALSE(lex_less(flipped, id));
  CHECK_FALSE(lex_less(id, id));
}

TEST_CASE("match_jet: degenerate jets are matched deterministically") {
  Vec z = vec({0, 0, 0});
  auto m1 = match_jet(WeylType::SignedPermB, z, z, z, z, 1e-3);
  auto m2 = match_jet(WeylType::SignedPermB, z, z, z, z, 1e-3);
  CHECK(m1.w == m2.w);
  CHECK(m1.w.is_identity());  // lexicographically smallest optimum
  CHECK(m1.ambiguous);
}

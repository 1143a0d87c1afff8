// Acceptance suite: one line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "cartanflow/oracles.hpp"
#include "cartanflow/path.hpp"

using namespace cartanflow;
using oracles::InstanceGenerator;
using oracles::SplitMix64;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int idx, const std::string& name, bool pass,
            const std::string& detail) {
  std::printf("[%s] criterion %2d: %-28s %s\n", pass ? "PASS" : "FAIL", idx,
              name.c_str(), detail.c_str());
  if (!pass) ++g_failures;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

const std::vector<Family> kFamilies = {
    real_sym_evd(5), herm_evd(4), real_svd(4, 3), complex_svd(3, 2),
    skew_sym_evd(5),
};

PElement random_raw_point(const Family& f, InstanceGenerator& gen,
                          SplitMix64& rng) {
  // Arbitrary spectrum (no gap floor): gaussian chamber coordinates.
  Vec c(f.a_dim());
  for (int i = 0; i < c.size(); ++i) c[i] = rng.gauss();
  if (f.weyl_type() == WeylType::PermA) c.array() -= c.mean();
  return adjoint_action(gen.random_k(rng), embed_a({f, c}));
}

KTangent conj_tangent(const KElement& u, const KTangent& k) {
  if (k.family.is_svd())
    return {k.family, u.left * k.left * u.left.adjoint(),
            u.right * k.right * u.right.adjoint()};
  return {k.family, u.left * k.left * u.left.adjoint(), Mat{}};
}

// --- criteria ------------------------------------------------------------------

void criterion_1() {
  auto t0 = Clock::now();
  PathSpec spec = builtin_spec("rellich");
  auto grid = make_grid(-1, 1, 2001);
  DiagonalizedPath path = sorted_curve(spec, grid);
  double worst = 0;
  for (int i = 0; i < 2001; ++i) {
    double t = grid[i];
    double f = t == 0 ? 0.0 : std::exp(-1.0 / (t * t));
    worst = std::max(worst, std::abs(path.lambda_sorted[i][0] - f));
    worst = std::max(worst, std::abs(path.lambda_sorted[i][1] + f));
  }
  double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  report(1, "rellich eigenvalues", worst <= 1e-12 && secs < 1.0,
         "max err " + fmt(worst) + ", " + fmt(secs) + " s");
}

void criterion_2() {
  PathSpec spec = builtin_spec("rellich");
  bool raised = false;
  try {
    analytic_flow(spec, make_grid(-1, 1, 2001));
  } catch (const NearSingularPoint&) {
    raised = true;
  }
  DiagonalizedPath ok = analytic_flow(spec, make_grid(0.3, 1.0, 701));
  double worst = 0;
  for (double r : ok.residual_offdiag) worst = std::max(worst, r);
  report(2, "near-singular behavior", raised && worst <= 1e-6,
         std::string(raised ? "raised on [-1,1]" : "NO raise") +
             ", restricted residual " + fmt(worst));
}

void criterion_3() {
  bool pass = true;
  std::string detail;
  {
    PathSpec spec = builtin_spec("rotation-flow");
    const double two_pi = 6.283185307179586477;
    const int n = static_cast<int>(two_pi / 1e-3) + 2;
    auto grid = make_grid(0, two_pi, n);
    DiagonalizedPath path = analytic_flow(spec, grid);
    double off = 0, grp = 0, lift = 0, udev = 0;
    for (int i = 0; i < n; ++i) {
      off = std::max(off, path.residual_offdiag[i]);
      grp = std::max(grp, path.residual_group[i]);
      lift = std::max(lift, std::abs(path.lambda_lift[i][0] - 2.0) +
                                std::abs(path.lambda_lift[i][1] + 2.0));
      Mat r(2, 2);
      r << std::cos(grid[i]), -std::sin(grid[i]), std::sin(grid[i]),
          std::cos(grid[i]);
      udev = std::max(udev, max_norm(Mat(path.u[i].left - r * path.u[0].left)));
    }
    pass = pass && off <= 1e-8 && grp <= 1e-8 && lift <= 1e-8 && udev <= 1e-6;
    detail = "rotation off " + fmt(off) + " grp " + fmt(grp) + " lift " +
             fmt(lift) + " U " + fmt(udev);
  }
  double worst_rand = 0;
  for (const Family& f : {herm_evd(4), real_svd(3, 2)}) {
    for (int seed = 1; seed <= 20; ++seed) {
      SplitMix64 rng(seed);
      InstanceGenerator gen{f, static_cast<std::uint64_t>(seed)};
      PathSpec spec = gen.random_trig_path(rng);
      DiagonalizedPath path = analytic_flow(spec, make_grid(0, 1, 1001));
      for (double r : path.residual_offdiag) worst_rand = std::max(worst_rand, r);
    }
  }
  pass = pass && worst_rand <= 1e-6;
  report(3, "analytic flow", pass,
         detail + "; random paths off " + fmt(worst_rand));
}

void criterion_4() {
  const double h = 1e-4;
  double worst = 0;
  std::vector<double> ratios;
  for (const Family& f : kFamilies) {
    SplitMix64 rng(1000 + f.rows);
    InstanceGenerator gen{f, 77};
    for (int trial = 0; trial < 20; ++trial) {
      PathSpec spec = gen.random_trig_path(rng);
      double t = rng.uniform(0.2, 0.8);
      PointwiseJet jet = pointwise_derivative(spec, t);
      auto fd_err = [&](double hh) {
        Vec p = pointwise_derivative(spec, t + hh).lambda.coords;
        Vec m = pointwise_derivative(spec, t - hh).lambda.coords;
        return max_norm(Vec((p - m) / (2 * hh) - jet.mu.coords));
      };
      worst = std::max(worst, fd_err(h));
      // order-2 check, run where truncation dominates roundoff
      double e1 = fd_err(10 * h), e2 = fd_err(5 * h);
      if (e1 > 1e-9) ratios.push_back(e1 / e2);
    }
  }
  std::sort(ratios.begin(), ratios.end());
  double median = ratios.empty() ? 0.0 : ratios[ratios.size() / 2];
  bool pass = worst <= 1e-6 && ratios.size() >= 50 && median >= 3.5;
  report(4, "derivative formula", pass,
         "max err " + fmt(worst) + ", median halving ratio " + fmt(median) +
             " over " + std::to_string(ratios.size()) + " pts");
}

void criterion_5() {
  const std::vector<Family> fams = {real_sym_evd(8), herm_evd(6),
                                    real_svd(5, 4), complex_svd(4, 3),
                                    skew_sym_evd(8)};
  double worst_gap = -1e9;
  for (const Family& f : fams) {
    SplitMix64 rng(5000 + f.rows);
    InstanceGenerator gen{f, 5};
    for (int trial = 0; trial < 10000; ++trial) {
      PElement x = random_raw_point(f, gen, rng);
      PElement y = random_raw_point(f, gen, rng);
      AVector lx = diagonalize_point(x).lambda;
      AVector ly = diagonalize_point(y).lambda;
      AVector diff{f, lx.coords - ly.coords};
      worst_gap = std::max(
          worst_gap, diff.induced_norm() - (x.data - y.data).norm());
    }
  }
  // exactness against the exhaustive Weyl minimum at small rank
  double worst_exact = 0;
  for (const Family& f :
       {real_sym_evd(5), real_svd(5, 4), skew_sym_evd(8)}) {
    SplitMix64 rng(7000 + f.rows);
    for (int trial = 0; trial < 10000; ++trial) {
      const int r = f.a_dim();
      Vec u(r), v(r);
      for (int i = 0; i < r; ++i) {
        u[i] = rng.gauss();
        v[i] = rng.gauss();
      }
      double sorted = (weyl::chamber_sort({f, u}).sorted.coords -
                       weyl::chamber_sort({f, v}).sorted.coords)
                          .norm();
      double brute = oracles::brute_force_weyl_min({f, u}, {f, v});
      worst_exact = std::max(worst_exact, std::abs(sorted - brute));
    }
  }
  bool pass = worst_gap <= 1e-10 && worst_exact <= 1e-12;
  report(5, "nonexpansiveness", pass,
         "max excess " + fmt(worst_gap) + ", brute-force dev " +
             fmt(worst_exact));
}

void criterion_6() {
  bool pass = true;
  std::string detail;
  {
    PathSpec spec = builtin_spec("chamber-cross");
    auto grid = make_grid(-1, 1, 401);
    DiagonalizedPath path = c1_lift(spec, grid);
    double s = path.lambda_lift[0][0] < 0 ? 1.0 : -1.0;
    double worst = 0;
    for (size_t i = 0; i < grid.size(); ++i) {
      worst = std::max(worst, std::abs(path.lambda_lift[i][0] - s * grid[i]));
      worst = std::max(worst, std::abs(path.lambda_lift[i][1] + s * grid[i]));
    }
    pass = pass && worst <= 1e-10;
    detail = "chamber-cross dev " + fmt(worst);
  }
  const double h = 1e-3;
  double worst_lift = 0, least_sorted = 1e9;
  for (int seed = 1; seed <= 10; ++seed) {
    SplitMix64 rng(seed);
    InstanceGenerator gen{herm_evd(4), static_cast<std::uint64_t>(seed),
                          oracles::SpectralProfile::CrossingEngineered};
    auto cp = gen.crossing_path(rng);
    auto grid = make_grid(0, 1, 1001);
    DiagonalizedPath path = c1_lift(cp.spec, grid);
    double lift_jump = 0, sort_jump = 0;
    for (size_t i = 1; i + 1 < grid.size(); ++i) {
      lift_jump = std::max(
          lift_jump, max_norm(Vec((path.lambda_lift[i + 1] -
                                   2.0 * path.lambda_lift[i] +
                                   path.lambda_lift[i - 1]) / h)));
      sort_jump = std::max(
          sort_jump, max_norm(Vec((path.lambda_sorted[i + 1] -
                                   2.0 * path.lambda_sorted[i] +
                                   path.lambda_sorted[i - 1]) / h)));
    }
    worst_lift = std::max(worst_lift, lift_jump);
    least_sorted = std::min(least_sorted, sort_jump);
  }
  pass = pass && worst_lift <= 10 * h && least_sorted >= 100 * h;
  report(6, "C1 lift at crossings", pass,
         detail + "; lift jump " + fmt(worst_lift) + " <= " + fmt(10 * h) +
             ", sorted jump " + fmt(least_sorted) + " >= " + fmt(100 * h));
}

void criterion_7() {
  double worst = 0;
  {
    PathSpec spec = builtin_spec("rotation-flow");
    worst = std::max(worst, resolvent_crosscheck(spec, 1.0, 1e-5));
  }
  for (const Family& f : kFamilies) {
    SplitMix64 rng(400 + f.rows);
    InstanceGenerator gen{f, 4};
    for (int trial = 0; trial < 4; ++trial) {
      PathSpec spec = gen.random_trig_path(rng);
      double t = rng.uniform(0.2, 0.8);
      worst = std::max(worst, resolvent_crosscheck(spec, t, 1e-5));
    }
  }
  // second-order shrink, measured where truncation dominates roundoff
  double worst_ratio = 1e9;
  for (int seed = 1; seed <= 5; ++seed) {
    SplitMix64 rng(seed);
    InstanceGenerator gen{herm_evd(4), static_cast<std::uint64_t>(seed)};
    PathSpec spec = gen.random_trig_path(rng);
    double t = rng.uniform(0.2, 0.8);
    double e1 = resolvent_crosscheck(spec, t, 1e-3);
    double e2 = resolvent_crosscheck(spec, t, 5e-4);
    if (e1 > 1e-11) worst_ratio = std::min(worst_ratio, e1 / e2);
  }
  bool pass = worst <= 1e-7 && worst_ratio >= 3.5;
  report(7, "resolvent identity", pass,
         "max " + fmt(worst) + ", min halving ratio " + fmt(worst_ratio));
}

void criterion_8() {
  double worst = 0;
  for (const Family& f : kFamilies) {
    SplitMix64 rng(800 + f.rows);
    InstanceGenerator gen{f, 8};
    for (int trial = 0; trial < 1000; ++trial) {
      PElement x = gen.random_p(rng);
      PElement b = gen.random_p(rng);
      KElement u = gen.random_k(rng);
      PElement ux = adjoint_action(u, x);
      PElement ub = adjoint_action(u, b);
      EigenStructure es = eigen_structure(x, 1e-8);
      EigenStructure ues = eigen_structure(ux, 1e-8);

      // (i) ad: Ad_U [b, x]_pp = [Ad_U b, Ad_U x]_pp
      KTangent lhs1 = conj_tangent(u, bracket_pp(b, x));
      KTangent rhs1 = bracket_pp(ub, ux);
      worst = std::max(worst, add(lhs1, scale(rhs1, -1.0)).frob());

      // (iii)/(iv) projections
      PElement lhs3 = adjoint_action(u, commutant_projection(es, b));
      PElement rhs3 = commutant_projection(ues, ub);
      worst = std::max(worst, (lhs3.data - rhs3.data).norm());
      PElement lhs4 = adjoint_action(u, complement_projection(es, b));
      PElement rhs4 = complement_projection(ues, ub);
      worst = std::max(worst, (lhs4.data - rhs4.data).norm());

      // (ii) ad-inverse on the image
      PElement c = complement_projection(es, b);
      KTangent lhs2 = conj_tangent(u, ad_inverse(es, c, 1e-6));
      KTangent rhs2 = ad_inverse(ues, adjoint_action(u, c), 1e-6);
      worst = std::max(worst, add(lhs2, scale(rhs2, -1.0)).frob());
    }
  }
  report(8, "equivariance suite", worst <= 1e-10, "max dev " + fmt(worst));
}

void criterion_9() {
  double worst = 0;
  bool rejected = true;
  for (int seed = 1; seed <= 10; ++seed) {
    SplitMix64 rng(seed);
    InstanceGenerator gen{herm_evd(6), static_cast<std::uint64_t>(seed)};
    // nested degeneracies: x1 has two triple clusters, x2 splits them into
    // pairs, x3 breaks the remaining ties
    Vec d1(6), d2(6), d3(6);
    double a = rng.uniform(0.5, 2.0);
    d1 << a, a, a, -a, -a, -a;
    double b = rng.uniform(0.5, 2.0);
    d2 << b, b, -2 * b, b, b, -2 * b;
    double c = rng.uniform(0.5, 2.0);
    d3 << c, -c, 0, c, -c, 0;
    KElement v = gen.random_k(rng);
    std::vector<PElement> xs = {
        adjoint_action(v, embed_a({herm_evd(6), d1})),
        adjoint_action(v, embed_a({herm_evd(6), d2})),
        adjoint_action(v, embed_a({herm_evd(6), d3}))};
    SimultaneousResult sim = simultaneous_diagonalize(xs, 1e-8);
    for (double r : sim.residuals) worst = std::max(worst, r);

    try {
      simultaneous_diagonalize({xs[0], gen.random_p(rng)}, 1e-8);
      rejected = false;
    } catch (const NotCommuting&) {
    }
  }
  report(9, "simultaneous diagonalization", worst <= 1e-8 && rejected,
         "max residual " + fmt(worst) +
             (rejected ? ", non-commuting rejected" : ", REJECTION MISSED"));
}

void criterion_10() {
  double worst = 0;
  for (int seed = 1; seed <= 5; ++seed) {
    SplitMix64 rng(seed);
    InstanceGenerator gen{herm_evd(4), static_cast<std::uint64_t>(seed)};
    PathSpec spec = gen.random_trig_path(rng);
    auto grid = make_grid(0, 1, 501);
    DiagonalizedPath flow1 = analytic_flow(spec, grid);

    // second valid initial element: permute the eigenbasis
    KElement u0 = flow1.u[0];
    Mat p = Mat::Zero(4, 4);
    p(0, 2) = 1;
    p(1, 0) = 1;
    p(2, 3) = 1;
    p(3, 1) = 1;
    if (std::abs(p.determinant() - Complex(1, 0)) > 0.5) p.col(0) *= -1.0;
    KElement u0b{herm_evd(4), u0.left * p, Mat{}, false};
    DiagonalizedPath flow2 = analytic_flow_from(spec, grid, u0b);

    weyl::JetMatch w0 = weyl::match_jet(
        WeylType::PermA, flow1.lambda_lift[0], Vec::Zero(4),
        flow2.lambda_lift[0], Vec::Zero(4), 0.0);
    for (size_t i = 0; i < grid.size(); ++i) {
      Vec mapped = weyl::apply(w0.w, flow2.lambda_lift[i]);
      worst = std::max(worst, max_norm(Vec(mapped - flow1.lambda_lift[i])));
    }
  }
  report(10, "Weyl-global uniqueness", worst <= 1e-8, "max dev " + fmt(worst));
}

void criterion_11() {
  SplitMix64 rng(11);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    double phi = rng.uniform(0, 6.283185307179586);
    double a = rng.gauss(), b = rng.gauss();
    Mat o(2, 2);
    o << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
    KElement u{real_sym_evd(2), o, Mat{}, false};
    Mat m(2, 2);
    m << a, b, b, -a;
    PElement y = adjoint_action(u, {real_sym_evd(2), m});
    Complex lhs(y.data(0, 0).real(), y.data(0, 1).real());
    Complex rhs = std::polar(1.0, 2 * phi) * Complex(a, b);
    worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(rhs)));
  }
  report(11, "polar-decomposition identity", worst <= 1e-12,
         "max rel dev " + fmt(worst));
}

}  // namespace

int main() {
  auto t0 = Clock::now();
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  criterion_11();
  double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  std::printf("%d/11 criteria passed in %.1f s\n", 11 - g_failures, secs);
  return g_failures == 0 ? 0 : 1;
}

#include "cartanflow/oracles.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace cartanflow::oracles {

// --- brute-force Weyl minimum -------------------------------------------------

double brute_force_weyl_min(const AVector& u, const AVector& v) {
  if (!(u.family == v.family))
    throw ShapeMismatch("brute_force_weyl_min: family mismatch");
  const int r = static_cast<int>(u.coords.size());
  if (r > 6) throw TooLarge("brute_force_weyl_min: rank > 6");
  const WeylType wt = u.family.weyl_type();

  std::vector<int> perm(r);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    const unsigned masks =
        wt == WeylType::PermA ? 1u : (1u << static_cast<unsigned>(r));
    for (unsigned mask = 0; mask < masks; ++mask) {
      if (wt == WeylType::SignedPermD && (std::popcount(mask) % 2) != 0)
        continue;
      double acc = 0.0;
      for (int i = 0; i < r; ++i) {
        double s = (mask >> i) & 1u ? -1.0 : 1.0;
        double d = u.coords[i] - s * v.coords[perm[i]];
        acc += d * d;
      }
      best = std::min(best, acc);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best);
}

// --- finite-difference projectors -----------------------------------------------

namespace {

struct SpectralSnapshot {
  Vec values;                    // distinct cluster means, descending
  std::vector<Mat> projections;  // matching order
};

// Independent of lie_ops: its own eigensolve and clustering.
SpectralSnapshot snapshot(const PathSpec& spec, double t,
                          const Tolerances& tol) {
  PElement rho = eval_path(spec, t).value;
  Mat h = detail::to_herm_picture(rho);
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  if (es.info() != Eigen::Success)
    throw SolverFailure("finite_diff_projectors: eigensolve failed");
  const int n = static_cast<int>(h.rows());
  const double thr = tol.cluster_tol * (1.0 + rho.data.norm());

  Vec vals(n);
  Mat vecs(n, n);
  for (int i = 0; i < n; ++i) {
    vals[i] = es.eigenvalues()[n - 1 - i];
    vecs.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  SpectralSnapshot out;
  int begin = 0;
  for (int i = 1; i <= n; ++i) {
    if (i == n || vals[i - 1] - vals[i] > thr) {
      int len = i - begin;
      out.projections.push_back(vecs.middleCols(begin, len) *
                                vecs.middleCols(begin, len).adjoint());
      Vec seg = vals.segment(begin, len);
      out.values.conservativeResize(out.values.size() + 1);
      out.values[out.values.size() - 1] = seg.mean();
      begin = i;
    }
  }
  return out;
}

}  // namespace

ProjectorDerivatives finite_diff_projectors(const PathSpec& spec, double t,
                                            double h, const Tolerances& tol,
                                            bool richardson) {
  if (richardson) {
    ProjectorDerivatives coarse = finite_diff_projectors(spec, t, h, tol);
    ProjectorDerivatives fine = finite_diff_projectors(spec, t, h / 2, tol);
    if (coarse.derivatives.size() != fine.derivatives.size())
      throw ClusterMismatch("cluster count changes between refinement levels");
    for (size_t k = 0; k < fine.derivatives.size(); ++k)
      fine.derivatives[k] =
          (4.0 * fine.derivatives[k] - coarse.derivatives[k]) / 3.0;
    return fine;
  }

  SpectralSnapshot mid = snapshot(spec, t, tol);
  SpectralSnapshot plus = snapshot(spec, t + h, tol);
  SpectralSnapshot minus = snapshot(spec, t - h, tol);

  const size_t m = mid.projections.size();
  if (plus.projections.size() != m || minus.projections.size() != m)
    throw ClusterMismatch("cluster count changes across the stencil at t = " +
                          std::to_string(t));

  // Nearest-value matching; with equal counts and descending order this is
  // index matching, verified against half the local gap.
  for (size_t k = 0; k < m; ++k) {
    double gap = std::numeric_limits<double>::infinity();
    if (k > 0) gap = std::min(gap, mid.values[k - 1] - mid.values[k]);
    if (k + 1 < m) gap = std::min(gap, mid.values[k] - mid.values[k + 1]);
    if (std::abs(plus.values[k] - mid.values[k]) > gap / 2 ||
        std::abs(minus.values[k] - mid.values[k]) > gap / 2)
      throw ClusterMismatch("clusters drift too far across the stencil");
  }

  ProjectorDerivatives out;
  out.values = mid.values;
  out.projections = std::move(mid.projections);
  out.derivatives.reserve(m);
  for (size_t k = 0; k < m; ++k)
    out.derivatives.push_back(
        (plus.projections[k] - minus.projections[k]) / (2.0 * h));
  return out;
}

// --- corpus ----------------------------------------------------------------------

PathSpec corpus(const std::string& name) { return builtin_spec(name); }

std::vector<std::string> corpus_names() { return builtin_names(); }

// --- instance generator -------------------------------------------------------------

namespace {

// Unstructured member of p: Gaussian entries projected onto the family's
// linear constraints, Frobenius-normalized.
Mat gaussian_p_raw(const Family& f, SplitMix64& rng) {
  const bool cx = !f.is_real();
  Mat g(f.rows, f.cols);
  for (int i = 0; i < f.rows; ++i)
    for (int j = 0; j < f.cols; ++j)
      g(i, j) = Complex(rng.gauss(), cx ? rng.gauss() : 0.0);
  switch (f.id) {
    case FamilyId::RealSymEvd:
    case FamilyId::HermEvd: {
      Mat s = 0.5 * (g + Mat(g.adjoint()));
      s -= (s.trace() / static_cast<double>(f.rows)) *
           Mat::Identity(f.rows, f.rows);
      g = s;
      break;
    }
    case FamilyId::SkewSymEvd:
      g = 0.5 * (g - Mat(g.transpose()));
      break;
    default:
      break;
  }
  double n = g.norm();
  if (n > 0) g /= n;
  return g;
}

Mat haar_unitary(int n, bool cx, SplitMix64& rng) {
  Mat g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      g(i, j) = Complex(rng.gauss(), cx ? rng.gauss() : 0.0);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    Complex d = r(j, j);
    double a = std::abs(d);
    q.col(j) *= a > 0 ? d / a : Complex(1.0, 0.0);
  }
  return q;
}

}  // namespace

AVector InstanceGenerator::random_a(SplitMix64& rng) const {
  const int r = family.a_dim();
  const WeylType wt = family.weyl_type();
  Vec c(r);
  if (profile == SpectralProfile::Clustered) {
    // Planted exact degeneracies: duplicate in pairs where possible.
    double level = 0.0;
    int i = 0;
    while (i < r) {
      level += rng.uniform(0.5, 1.5);
      int reps = std::min(r - i, rng.uniform() < 0.5 ? 2 : 1);
      for (int k = 0; k < reps; ++k) c[i++] = level;
    }
    std::reverse(c.begin(), c.end());  // descending
  } else {
    // Well-separated coordinates: every root value stays >= 0.3.
    c[r - 1] = 0.3 + rng.uniform(0.0, 0.7);
    for (int i = r - 2; i >= 0; --i)
      c[i] = c[i + 1] + 0.3 + rng.uniform(0.0, 0.7);
  }
  if (wt == WeylType::PermA) c.array() -= c.mean();
  return {family, std::move(c)};
}

KElement InstanceGenerator::random_k(SplitMix64& rng) const {
  const bool cx = !family.is_real();
  if (family.is_svd()) {
    KElement u{family, haar_unitary(family.rows, cx, rng),
               haar_unitary(family.cols, cx, rng), false};
    Complex d = u.left.determinant() * u.right.determinant();
    if (cx) {
      double theta = -std::arg(d) / 2.0;
      Complex phase = std::polar(1.0, theta);
      u.left.col(0) *= phase;
      u.right.col(0) *= phase;
    } else if (d.real() < 0) {
      u.right.col(family.cols - 1) *= -1.0;
    }
    return u;
  }
  KElement u{family, haar_unitary(family.rows, cx, rng), Mat{}, false};
  Complex d = u.left.determinant();
  if (cx) {
    u.left.col(0) *= std::conj(d) / std::abs(d);
  } else if (d.real() < 0) {
    u.left.col(family.rows - 1) *= -1.0;
  }
  return u;
}

PElement InstanceGenerator::random_p(SplitMix64& rng) const {
  AVector a = random_a(rng);
  KElement v = random_k(rng);
  return adjoint_action(v, embed_a(a));
}

PathSpec InstanceGenerator::random_trig_path(SplitMix64& rng, int harmonics,
                                             double amplitude) const {
  PathSpec spec;
  spec.family = family;
  spec.kind = PathSpec::Kind::TrigPoly;
  spec.t_start = 0.0;
  spec.t_end = 1.0;
  spec.const_coeff = random_p(rng).data;
  for (int j = 1; j <= harmonics; ++j) {
    double fall = amplitude / static_cast<double>(j * j);
    spec.cos_coeffs.push_back(fall * gaussian_p_raw(family, rng));
    spec.sin_coeffs.push_back(fall * gaussian_p_raw(family, rng));
  }
  return spec;
}

InstanceGenerator::CrossingPath InstanceGenerator::crossing_path(
    SplitMix64& rng) const {
  if (family.weyl_type() != WeylType::PermA || family.rows != 4)
    throw UnsupportedFamily(
        "crossing_path is built for 4x4 permutation-type families");

  // Coordinate curves a + b cos t + c sin t: an outer anchor, a crossing pair
  // c(t) +- kappa sin(t - t*), and a trace-balancing curve.
  const double t_cross = rng.uniform(0.25, 0.75);
  const double kappa = rng.uniform(0.5, 1.0);
  const double h1 = rng.uniform(2.5, 3.5);
  const double amp1 = rng.uniform(0.1, 0.3);
  const double phi1 = rng.uniform(0.0, 6.28);
  const double amp2 = rng.uniform(0.05, 0.2);
  const double phi2 = rng.uniform(0.0, 6.28);

  Vec a(4), b(4), c(4);
  // d1 = h1 + amp1 cos(t + phi1)
  a[0] = h1;
  b[0] = amp1 * std::cos(phi1);
  c[0] = -amp1 * std::sin(phi1);
  // d2/d3 = amp2 cos(t + phi2) +- kappa sin(t - t*)
  double bc = amp2 * std::cos(phi2), cc = -amp2 * std::sin(phi2);
  double bs = -kappa * std::sin(t_cross), cs = kappa * std::cos(t_cross);
  a[1] = 0.0;
  b[1] = bc + bs;
  c[1] = cc + cs;
  a[2] = 0.0;
  b[2] = bc - bs;
  c[2] = cc - cs;
  // d4 balances the trace.
  a[3] = -(a[0] + a[1] + a[2]);
  b[3] = -(b[0] + b[1] + b[2]);
  c[3] = -(c[0] + c[1] + c[2]);

  KElement u0 = random_k(rng);
  auto conjugated = [&](const Vec& diag) {
    Mat d = Mat::Zero(4, 4);
    for (int i = 0; i < 4; ++i) d(i, i) = diag[i];
    return Mat(u0.left * d * u0.left.adjoint());
  };

  CrossingPath out;
  out.spec.family = family;
  out.spec.kind = PathSpec::Kind::TrigPoly;
  out.spec.t_start = 0.0;
  out.spec.t_end = 1.0;
  out.spec.const_coeff = conjugated(a);
  out.spec.cos_coeffs.push_back(conjugated(b));
  out.spec.sin_coeffs.push_back(conjugated(c));
  out.t_cross = t_cross;
  out.sorted_jump = 2.0 * kappa;
  return out;
}

}  // namespace cartanflow::oracles

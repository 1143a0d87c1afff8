#include "cartanflow/lie_ops.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

namespace cartanflow {

namespace {

void check_same_family(const Family& a, const Family& b, const char* op) {
  if (!(a == b))
    throw ShapeMismatch(std::string(op) + ": families " + to_string(a) +
                        " and " + to_string(b) + " differ");
}

}  // namespace

KTangent k_tangent_zero(const Family& f) {
  if (f.is_svd())
    return {f, Mat::Zero(f.rows, f.rows), Mat::Zero(f.cols, f.cols)};
  return {f, Mat::Zero(f.rows, f.rows), Mat{}};
}

KTangent add(const KTangent& a, const KTangent& b) {
  check_same_family(a.family, b.family, "add");
  if (a.family.is_svd()) return {a.family, a.left + b.left, a.right + b.right};
  return {a.family, a.left + b.left, Mat{}};
}

KTangent scale(const KTangent& a, double s) {
  if (a.family.is_svd()) return {a.family, s * a.left, s * a.right};
  return {a.family, s * a.left, Mat{}};
}

double validate_k_tangent(const KTangent& k) {
  const Family& f = k.family;
  auto skew_res = [](const Mat& m) {
    return max_norm(Mat(m + m.adjoint()));
  };
  if (f.is_svd()) {
    double r = std::max(skew_res(k.left), skew_res(k.right));
    if (f.id == FamilyId::ComplexSvd)
      r = std::max(r, std::abs(k.left.trace() + k.right.trace()));
    if (f.is_real())
      r = std::max({r, max_norm(Mat(k.left.imag().cast<Complex>())),
                    max_norm(Mat(k.right.imag().cast<Complex>()))});
    return r;
  }
  double r = skew_res(k.left);
  if (f.id == FamilyId::HermEvd) r = std::max(r, std::abs(k.left.trace()));
  if (f.is_real())
    r = std::max(r, max_norm(Mat(k.left.imag().cast<Complex>())));
  return r;
}

KTangent bracket_pp(const PElement& x, const PElement& y) {
  check_same_family(x.family, y.family, "bracket_pp");
  detail::check_shape(x.family, x.data);
  detail::check_shape(y.family, y.data);
  const Family& f = x.family;
  if (f.is_svd()) {
    // Blocks of the ambient commutator [[0,X],[X*,0]] [[0,Y],[Y*,0]].
    Mat l = x.data * y.data.adjoint() - y.data * x.data.adjoint();
    Mat r = x.data.adjoint() * y.data - y.data.adjoint() * x.data;
    return {f, std::move(l), std::move(r)};
  }
  return {f, x.data * y.data - y.data * x.data, Mat{}};
}

PElement bracket_kp(const KTangent& k, const PElement& x) {
  check_same_family(k.family, x.family, "bracket_kp");
  detail::check_shape(x.family, x.data);
  const Family& f = x.family;
  if (f.is_svd()) return {f, k.left * x.data - x.data * k.right};
  return {f, k.left * x.data - x.data * k.left};
}

// --- eigenstructure ---------------------------------------------------------

EigenStructure eigen_structure(const PElement& x, double cluster_tol) {
  detail::check_shape(x.family, x.data);
  const Family& f = x.family;
  Mat h = detail::to_herm_picture(x);
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  if (es.info() != Eigen::Success)
    throw SolverFailure("eigendecomposition failed in eigen_structure");

  const int n = f.herm_dim();
  // Descending, like the chamber order.
  Vec vals(n);
  Mat vecs(n, n);
  for (int i = 0; i < n; ++i) {
    vals[i] = es.eigenvalues()[n - 1 - i];
    vecs.col(i) = es.eigenvectors().col(n - 1 - i);
  }

  const double threshold = cluster_tol * (1.0 + x.data.norm());
  EigenStructure out;
  out.family = f;

  // Single-linkage clustering of the sorted spectrum.
  std::vector<int> starts{0};
  for (int i = 1; i < n; ++i)
    if (vals[i - 1] - vals[i] > threshold) starts.push_back(i);
  starts.push_back(n);

  const int m = static_cast<int>(starts.size()) - 1;
  out.distinct_values.resize(m);
  out.projections.reserve(m);
  for (int c = 0; c < m; ++c) {
    int b = starts[c], e = starts[c + 1];
    out.distinct_values[c] =
        vals.segment(b, e - b).sum() / static_cast<double>(e - b);
    out.projections.push_back(vecs.middleCols(b, e - b) *
                              vecs.middleCols(b, e - b).adjoint());
  }

  // Canonical coordinates: leading a_dim eigenvalues of the Hermitian picture
  // (eigenvalues, singular values, or block parameters).
  const int r = f.a_dim();
  out.a_coords = vals.head(r);

  // Root values of the family's restricted root system at the canonical
  // coordinates. The gap is the smallest nonzero value (zero when every root
  // vanishes, infinite when the family has no roots); the point is regular
  // iff no root vanishes.
  const WeylType wt = f.weyl_type();
  std::vector<double> roots;
  const Vec& c = out.a_coords;
  for (int i = 0; i < r; ++i) {
    for (int j = i + 1; j < r; ++j) {
      roots.push_back(std::abs(c[i] - c[j]));
      if (wt != WeylType::PermA) roots.push_back(std::abs(c[i] + c[j]));
    }
    if (wt == WeylType::SignedPermB) roots.push_back(std::abs(c[i]));
  }
  double gap = std::numeric_limits<double>::infinity();
  bool any_zero = false;
  for (double v : roots) {
    if (v > threshold)
      gap = std::min(gap, v);
    else
      any_zero = true;
  }
  if (std::isinf(gap) && !roots.empty()) gap = 0.0;
  out.gap = gap;
  out.regular_point = !any_zero;
  return out;
}

PElement commutant_projection(const EigenStructure& es, const PElement& b) {
  check_same_family(es.family, b.family, "commutant_projection");
  detail::check_shape(b.family, b.data);
  Mat bh = detail::to_herm_picture(b);
  Mat acc = Mat::Zero(bh.rows(), bh.cols());
  for (const Mat& p : es.projections) acc += p * bh * p;
  return {b.family, detail::p_from_herm_picture(b.family, acc)};
}

PElement commutant_projection(const PElement& x, const PElement& b,
                              double cluster_tol) {
  return commutant_projection(eigen_structure(x, cluster_tol), b);
}

PElement complement_projection(const EigenStructure& es, const PElement& b) {
  PElement pi = commutant_projection(es, b);
  return {b.family, b.data - pi.data};
}

KTangent ad_inverse(const EigenStructure& es, const PElement& c,
                    double gap_min, const Tolerances& tol) {
  check_same_family(es.family, c.family, "ad_inverse");
  if (es.gap < gap_min)
    throw NearSingularPoint("ad_inverse: gap " + std::to_string(es.gap) +
                            " below threshold " + std::to_string(gap_min));

  const double cnorm = c.data.norm();
  PElement ker_part = commutant_projection(es, c);
  if (ker_part.data.norm() > 10.0 * tol.eps_solve * (cnorm + 1e-300))
    throw NotInImage(
        "ad_inverse: operand has a commutant component of relative size " +
        std::to_string(ker_part.data.norm() / (cnorm + 1e-300)));

  Mat ch = detail::to_herm_picture(c);
  const int n = static_cast<int>(ch.rows());
  Mat acc = Mat::Zero(n, n);
  const int m = static_cast<int>(es.distinct_values.size());
  // Structurally-zero couplings (non-root cluster pairs) are skipped before
  // dividing; their numerators are solver noise.
  const double skip = 1e-13 * (ch.norm() + 1e-300);
  for (int k = 0; k < m; ++k) {
    for (int l = 0; l < m; ++l) {
      if (k == l) continue;
      Mat num = es.projections[k] * ch * es.projections[l];
      if (num.norm() <= skip) continue;
      acc -= num / (es.distinct_values[k] - es.distinct_values[l]);
    }
  }

  const Family& f = es.family;
  if (f.is_svd()) {
    const int p = f.rows, q = f.cols;
    return {f, acc.topLeftCorner(p, p), acc.bottomRightCorner(q, q)};
  }
  return {f, std::move(acc), Mat{}};
}

KTangent ad_inverse(const PElement& x, const PElement& c, double gap_min,
                    const Tolerances& tol) {
  return ad_inverse(eigen_structure(x, tol.cluster_tol), c, gap_min, tol);
}

}  // namespace cartanflow

#include "cartanflow/family.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace cartanflow {

namespace {

int skew_rank(int n) { return n / 2; }

[[noreturn]] void bad_family(const std::string& what) {
  throw UnsupportedFamily("unsupported family: " + what);
}

}  // namespace

// --- descriptor -------------------------------------------------------------

int Family::a_dim() const {
  switch (id) {
    case FamilyId::RealSymEvd:
    case FamilyId::HermEvd:
      return rows;
    case FamilyId::RealSvd:
    case FamilyId::ComplexSvd:
      return cols;
    case FamilyId::SkewSymEvd:
      return skew_rank(rows);
  }
  return 0;
}

WeylType Family::weyl_type() const {
  switch (id) {
    case FamilyId::RealSymEvd:
    case FamilyId::HermEvd:
      return WeylType::PermA;
    case FamilyId::RealSvd:
    case FamilyId::ComplexSvd:
      return WeylType::SignedPermB;
    case FamilyId::SkewSymEvd:
      return rows % 2 == 1 ? WeylType::SignedPermB : WeylType::SignedPermD;
  }
  return WeylType::PermA;
}

ScalarField Family::scalar_field() const {
  switch (id) {
    case FamilyId::HermEvd:
    case FamilyId::ComplexSvd:
      return ScalarField::Complex;
    default:
      return ScalarField::Real;
  }
}

int Family::herm_dim() const { return is_svd() ? rows + cols : rows; }

Family real_sym_evd(int n) {
  if (n < 2) bad_family("real-sym-evd needs n >= 2");
  return {FamilyId::RealSymEvd, n, n};
}

Family herm_evd(int n) {
  if (n < 2) bad_family("herm-evd needs n >= 2");
  return {FamilyId::HermEvd, n, n};
}

Family real_svd(int p, int q) {
  if (q < 1 || p < q) bad_family("real-svd needs p >= q >= 1");
  return {FamilyId::RealSvd, p, q};
}

Family complex_svd(int p, int q) {
  if (q < 1 || p < q) bad_family("complex-svd needs p >= q >= 1");
  return {FamilyId::ComplexSvd, p, q};
}

Family skew_sym_evd(int n) {
  if (n < 2) bad_family("skew-evd needs n >= 2");
  return {FamilyId::SkewSymEvd, n, n};
}

Family parse_family(const std::string& s) {
  auto colon = s.find(':');
  if (colon == std::string::npos) bad_family(s);
  const std::string name = s.substr(0, colon);
  const std::string dims = s.substr(colon + 1);
  auto parse_int = [&](const std::string& t) {
    try {
      size_t used = 0;
      int v = std::stoi(t, &used);
      if (used != t.size() || v <= 0) bad_family(s);
      return v;
    } catch (const std::exception&) {
      bad_family(s);
    }
  };
  if (name == "real-sym-evd") return real_sym_evd(parse_int(dims));
  if (name == "herm-evd") return herm_evd(parse_int(dims));
  if (name == "skew-evd") return skew_sym_evd(parse_int(dims));
  if (name == "real-svd" || name == "complex-svd") {
    auto x = dims.find('x');
    if (x == std::string::npos) bad_family(s);
    int p = parse_int(dims.substr(0, x));
    int q = parse_int(dims.substr(x + 1));
    return name == "real-svd" ? real_svd(p, q) : complex_svd(p, q);
  }
  // Recognized but unimplemented decomposition types.
  for (const char* stub : {"quat-evd", "quat-svd", "takagi", "takagi-skew",
                           "real-ham-evd", "herm-ham-evd"})
    if (name == stub)
      throw UnsupportedFamily("family " + name +
                              " is recognized but not supported");
  bad_family(s);
}

std::string to_string(const Family& f) {
  switch (f.id) {
    case FamilyId::RealSymEvd:
      return "real-sym-evd:" + std::to_string(f.rows);
    case FamilyId::HermEvd:
      return "herm-evd:" + std::to_string(f.rows);
    case FamilyId::SkewSymEvd:
      return "skew-evd:" + std::to_string(f.rows);
    case FamilyId::RealSvd:
      return "real-svd:" + std::to_string(f.rows) + "x" + std::to_string(f.cols);
    case FamilyId::ComplexSvd:
      return "complex-svd:" + std::to_string(f.rows) + "x" +
             std::to_string(f.cols);
  }
  return "?";
}

// --- elements ---------------------------------------------------------------

double AVector::induced_norm() const {
  double n2 = coords.norm();
  return family.id == FamilyId::SkewSymEvd ? std::sqrt(2.0) * n2 : n2;
}

namespace detail {

void check_shape(const Family& f, const Mat& m) {
  if (m.rows() != f.rows || m.cols() != f.cols)
    throw ShapeMismatch("matrix is " + std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()) + ", family " + to_string(f) +
                        " expects " + std::to_string(f.rows) + "x" +
                        std::to_string(f.cols));
}

Mat to_herm_picture(const PElement& x) {
  check_shape(x.family, x.data);
  switch (x.family.id) {
    case FamilyId::RealSymEvd:
    case FamilyId::HermEvd:
      return x.data;
    case FamilyId::SkewSymEvd:
      return Complex(0, -1) * x.data;
    case FamilyId::RealSvd:
    case FamilyId::ComplexSvd: {
      const int p = x.family.rows, q = x.family.cols;
      Mat h = Mat::Zero(p + q, p + q);
      h.topRightCorner(p, q) = x.data;
      h.bottomLeftCorner(q, p) = x.data.adjoint();
      return h;
    }
  }
  return {};
}

Mat p_from_herm_picture(const Family& f, const Mat& h) {
  switch (f.id) {
    case FamilyId::RealSymEvd:
    case FamilyId::HermEvd:
      return h;
    case FamilyId::SkewSymEvd:
      return Complex(0, 1) * h;
    case FamilyId::RealSvd:
    case FamilyId::ComplexSvd:
      return h.topRightCorner(f.rows, f.cols);
  }
  return {};
}

}  // namespace detail

double validate_p(const PElement& x) {
  detail::check_shape(x.family, x.data);
  const Mat& m = x.data;
  double imag = x.family.is_real() ? max_norm(Mat(m.imag().cast<Complex>())) : 0.0;
  switch (x.family.id) {
    case FamilyId::RealSymEvd:
      return std::max({max_norm(Mat(m - m.transpose())), std::abs(m.trace()), imag});
    case FamilyId::HermEvd:
      return std::max(max_norm(Mat(m - m.adjoint())), std::abs(m.trace()));
    case FamilyId::SkewSymEvd:
      return std::max(max_norm(Mat(m + m.transpose())), imag);
    case FamilyId::RealSvd:
      return imag;
    case FamilyId::ComplexSvd:
      return 0.0;
  }
  return 0.0;
}

double validate_k(const KElement& u) {
  const Family& f = u.family;
  auto unitary_residual = [](const Mat& m) {
    return max_norm(Mat(m.adjoint() * m - Mat::Identity(m.cols(), m.cols())));
  };
  if (f.is_svd()) {
    if (u.left.rows() != f.rows || u.left.cols() != f.rows ||
        u.right.rows() != f.cols || u.right.cols() != f.cols)
      throw ShapeMismatch("K element blocks do not match family " + to_string(f));
    double r = std::max(unitary_residual(u.left), unitary_residual(u.right));
    Complex d = u.left.determinant() * u.right.determinant();
    double dres = u.det_relaxed ? std::abs(std::abs(d) - 1.0) : std::abs(d - 1.0);
    double imag = f.is_real()
                      ? std::max(max_norm(Mat(u.left.imag().cast<Complex>())),
                                 max_norm(Mat(u.right.imag().cast<Complex>())))
                      : 0.0;
    return std::max({r, dres, imag});
  }
  if (u.left.rows() != f.rows || u.left.cols() != f.rows)
    throw ShapeMismatch("K element does not match family " + to_string(f));
  double r = unitary_residual(u.left);
  Complex d = u.left.determinant();
  double dres = u.det_relaxed ? std::abs(std::abs(d) - 1.0) : std::abs(d - 1.0);
  double imag =
      f.is_real() ? max_norm(Mat(u.left.imag().cast<Complex>())) : 0.0;
  return std::max({r, dres, imag});
}

PElement embed_a(const AVector& v) {
  const Family& f = v.family;
  if (v.coords.size() != f.a_dim())
    throw ShapeMismatch("coordinate vector has length " +
                        std::to_string(v.coords.size()) + ", family " +
                        to_string(f) + " expects " + std::to_string(f.a_dim()));
  Mat m = Mat::Zero(f.rows, f.cols);
  switch (f.id) {
    case FamilyId::RealSymEvd:
    case FamilyId::HermEvd:
      for (int i = 0; i < f.rows; ++i) m(i, i) = v.coords[i];
      break;
    case FamilyId::RealSvd:
    case FamilyId::ComplexSvd:
      for (int j = 0; j < f.cols; ++j) m(j, j) = v.coords[j];
      break;
    case FamilyId::SkewSymEvd:
      for (int j = 0; j < f.a_dim(); ++j) {
        m(2 * j, 2 * j + 1) = v.coords[j];
        m(2 * j + 1, 2 * j) = -v.coords[j];
      }
      break;
  }
  return {f, std::move(m)};
}

std::pair<AVector, double> project_a(const PElement& x) {
  detail::check_shape(x.family, x.data);
  const Family& f = x.family;
  Vec coords(f.a_dim());
  switch (f.id) {
    case FamilyId::RealSymEvd:
    case FamilyId::HermEvd:
      for (int i = 0; i < f.rows; ++i) coords[i] = x.data(i, i).real();
      break;
    case FamilyId::RealSvd:
    case FamilyId::ComplexSvd:
      for (int j = 0; j < f.cols; ++j) coords[j] = x.data(j, j).real();
      break;
    case FamilyId::SkewSymEvd:
      for (int j = 0; j < f.a_dim(); ++j)
        coords[j] = x.data(2 * j, 2 * j + 1).real();
      break;
  }
  AVector v{f, std::move(coords)};
  double residual = max_norm(Mat(x.data - embed_a(v).data));
  return {std::move(v), residual};
}

// --- pointwise diagonalization ----------------------------------------------

namespace detail {

// Stable descending order: equal values keep their original position, so a
// fully degenerate matrix diagonalizes with the identity.
std::vector<int> descending_order(const Vec& values) {
  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return values[a] > values[b]; });
  return order;
}

void repair_determinant(KElement& u, Vec& lambda, int kernel_dims) {
  const Family& f = u.family;
  switch (f.id) {
    case FamilyId::RealSymEvd: {
      // Column signs of an eigenbasis act trivially under conjugation.
      if (u.left.determinant().real() < 0) u.left.col(f.rows - 1) *= -1.0;
      break;
    }
    case FamilyId::HermEvd: {
      Complex d = u.left.determinant();
      u.left.col(f.rows - 1) *= std::conj(d) / std::abs(d);
      break;
    }
    case FamilyId::SkewSymEvd: {
      if (u.left.determinant().real() >= 0) break;
      if (kernel_dims > 0) {
        // A kernel column flip is invisible in the canonical form.
        u.left.col(f.rows - 1) *= -1.0;
      } else {
        // Even case: trade the determinant sign for a sign flip of the last
        // block parameter (the type-D convention).
        u.left.col(f.rows - 1) *= -1.0;
        lambda[f.a_dim() - 1] = -lambda[f.a_dim() - 1];
      }
      break;
    }
    case FamilyId::RealSvd: {
      Complex d = u.left.determinant() * u.right.determinant();
      if (d.real() >= 0) break;
      if (f.rows > f.cols) {
        u.left.col(f.rows - 1) *= -1.0;  // spare column, no effect on Y
      } else {
        // p = q leaves no free column; record |det| = 1 instead of breaking
        // the nonnegative singular value convention.
        u.det_relaxed = true;
      }
      break;
    }
    case FamilyId::ComplexSvd: {
      Complex d = u.left.determinant() * u.right.determinant();
      double theta = -std::arg(d) / 2.0;
      Complex phase = std::polar(1.0, theta);
      // Equal phases on matching columns leave U_L Y U_R^* invariant.
      u.left.col(0) *= phase;
      u.right.col(0) *= phase;
      break;
    }
  }
}

DiagonalizeResult diagonalize_skew(const PElement& x) {
  const int n = x.family.rows;
  const int r = x.family.a_dim();
  Mat h = detail::to_herm_picture(x);
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  if (es.info() != Eigen::Success)
    throw SolverFailure("skew-symmetric eigendecomposition did not converge");

  const double scale = 1.0 + x.data.norm();
  const double z_tol = 64.0 * std::numeric_limits<double>::epsilon() * scale;

  // Positive half of the symmetric spectrum, descending.
  std::vector<std::pair<double, int>> positive;
  for (int i = 0; i < n; ++i)
    if (es.eigenvalues()[i] > z_tol) positive.push_back({es.eigenvalues()[i], i});
  std::sort(positive.begin(), positive.end(),
            [](auto& a, auto& b) { return a.first > b.first; });
  if (static_cast<int>(positive.size()) > r) positive.resize(r);

  RMat cols(n, n);
  Vec lambda = Vec::Zero(r);
  int k = 0;
  const double sqrt2 = std::sqrt(2.0);
  for (auto& [a, idx] : positive) {
    CVec v = es.eigenvectors().col(idx);
    RMat u = sqrt2 * v.real();
    RMat w = sqrt2 * v.imag();
    // Conjugate pairing degrades when +a and -a eigenspaces blur together;
    // push such directions into the kernel block instead.
    if (std::abs(u.norm() - 1.0) > 1e-6 || std::abs(w.norm() - 1.0) > 1e-6 ||
        std::abs((u.transpose() * w)(0, 0)) > 1e-6)
      break;
    cols.col(2 * k) = u;
    cols.col(2 * k + 1) = w;
    lambda[k] = a;
    ++k;
  }

  const int kernel_dims = n - 2 * k;
  if (kernel_dims > 0) {
    if (k == 0) {
      cols.setIdentity();
    } else {
      // Orthonormal completion of the accepted columns.
      Eigen::JacobiSVD<RMat> svd(RMat(cols.leftCols(2 * k).transpose()),
                                 Eigen::ComputeFullV);
      cols.rightCols(kernel_dims) = svd.matrixV().rightCols(kernel_dims);
    }
  }

  KElement u{x.family, cols.cast<Complex>(), Mat{}, false};
  repair_determinant(u, lambda, kernel_dims);
  return {std::move(u), AVector{x.family, std::move(lambda)}};
}

}  // namespace detail

DiagonalizeResult diagonalize_point(const PElement& x, const Tolerances& tol) {
  detail::check_shape(x.family, x.data);
  const Family& f = x.family;
  const double member = validate_p(x);
  if (member > 1e3 * tol.eps_member * (1.0 + max_norm(x.data)))
    throw InputError("element violates membership constraints of " +
                     to_string(f) + " (residual " + std::to_string(member) + ")");

  switch (f.id) {
    case FamilyId::RealSymEvd: {
      Eigen::SelfAdjointEigenSolver<RMat> es(x.data.real());
      if (es.info() != Eigen::Success)
        throw SolverFailure("symmetric eigendecomposition did not converge");
      const int n = f.rows;
      std::vector<int> order = detail::descending_order(es.eigenvalues());
      Vec lambda(n);
      RMat u(n, n);
      for (int i = 0; i < n; ++i) {
        lambda[i] = es.eigenvalues()[order[i]];
        u.col(i) = es.eigenvectors().col(order[i]);
      }
      KElement ke{f, u.cast<Complex>(), Mat{}, false};
      detail::repair_determinant(ke, lambda, 0);
      return {std::move(ke), AVector{f, std::move(lambda)}};
    }
    case FamilyId::HermEvd: {
      Eigen::SelfAdjointEigenSolver<Mat> es(x.data);
      if (es.info() != Eigen::Success)
        throw SolverFailure("Hermitian eigendecomposition did not converge");
      const int n = f.rows;
      std::vector<int> order = detail::descending_order(es.eigenvalues());
      Vec lambda(n);
      Mat u(n, n);
      for (int i = 0; i < n; ++i) {
        lambda[i] = es.eigenvalues()[order[i]];
        u.col(i) = es.eigenvectors().col(order[i]);
      }
      KElement ke{f, std::move(u), Mat{}, false};
      detail::repair_determinant(ke, lambda, 0);
      return {std::move(ke), AVector{f, std::move(lambda)}};
    }
    case FamilyId::RealSvd: {
      Eigen::JacobiSVD<RMat> svd(x.data.real(),
                                 Eigen::ComputeFullU | Eigen::ComputeFullV);
      Vec lambda = svd.singularValues();
      KElement ke{f, svd.matrixU().cast<Complex>(),
                  svd.matrixV().cast<Complex>(), false};
      detail::repair_determinant(ke, lambda, 0);
      return {std::move(ke), AVector{f, std::move(lambda)}};
    }
    case FamilyId::ComplexSvd: {
      Eigen::JacobiSVD<Mat> svd(x.data,
                                Eigen::ComputeFullU | Eigen::ComputeFullV);
      Vec lambda = svd.singularValues();
      KElement ke{f, svd.matrixU(), svd.matrixV(), false};
      detail::repair_determinant(ke, lambda, 0);
      return {std::move(ke), AVector{f, std::move(lambda)}};
    }
    case FamilyId::SkewSymEvd:
      return detail::diagonalize_skew(x);
  }
  throw UnsupportedFamily("diagonalize_point");
}

PElement adjoint_action(const KElement& u, const PElement& x) {
  detail::check_shape(x.family, x.data);
  if (!(u.family == x.family))
    throw ShapeMismatch("group element family " + to_string(u.family) +
                        " does not match " + to_string(x.family));
  if (x.family.is_svd()) return {x.family, u.left * x.data * u.right.adjoint()};
  return {x.family, u.left * x.data * u.left.adjoint()};
}

KElement k_identity(const Family& f) {
  if (f.is_svd())
    return {f, Mat::Identity(f.rows, f.rows), Mat::Identity(f.cols, f.cols),
            false};
  return {f, Mat::Identity(f.rows, f.rows), Mat{}, false};
}

KElement compose(const KElement& u, const KElement& v) {
  if (!(u.family == v.family)) throw ShapeMismatch("compose: family mismatch");
  if (u.family.is_svd())
    return {u.family, u.left * v.left, u.right * v.right,
            u.det_relaxed || v.det_relaxed};
  return {u.family, u.left * v.left, Mat{}, u.det_relaxed || v.det_relaxed};
}

KElement k_inverse(const KElement& u) {
  if (u.family.is_svd())
    return {u.family, u.left.adjoint(), u.right.adjoint(), u.det_relaxed};
  return {u.family, u.left.adjoint(), Mat{}, u.det_relaxed};
}

void Tolerances::set(const std::string& key, double value) {
  if (value <= 0) throw InputError("tolerance " + key + " must be positive");
  if (key == "eps_member") eps_member = value;
  else if (key == "eps_group") eps_group = value;
  else if (key == "eps_solve") eps_solve = value;
  else if (key == "cluster_tol") cluster_tol = value;
  else if (key == "face_tol") face_tol = value;
  else if (key == "gap_min") gap_min = value;
  else if (key == "gap_min_flow") gap_min_flow = value;
  else if (key == "fd_step") fd_step = value;
  else throw InputError("unknown tolerance key: " + key);
}

}  // namespace cartanflow

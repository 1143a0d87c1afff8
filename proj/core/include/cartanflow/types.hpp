#pragma once

#include <Eigen/Dense>
#include <complex>

namespace cartanflow {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;

inline double max_norm(const Mat& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double max_norm(const RMat& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double max_norm(const Vec& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

inline double frob_norm(const Mat& m) { return m.norm(); }

/// Real part of the Frobenius inner product tr(a* b).
inline double frob_inner(const Mat& a, const Mat& b) {
  return (a.adjoint() * b).trace().real();
}

}  // namespace cartanflow

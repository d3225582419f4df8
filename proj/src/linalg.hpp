#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace fash::detail {

// Returns L with L * L^T == m for a symmetric PSD matrix. Falls back to a
// clamped eigen-decomposition when m is singular.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime>
psd_sqrt(const Eigen::MatrixBase<Derived>& m) {
  using Mat = Eigen::Matrix<typename Derived::Scalar, Derived::RowsAtCompileTime,
                            Derived::ColsAtCompileTime>;
  const Mat sym = 0.5 * (m + m.transpose());
  if (sym.size() == 0 || sym.cwiseAbs().maxCoeff() == 0.0) return Mat::Zero(sym.rows(), sym.cols());
  Eigen::LLT<Mat> llt(sym);
  if (llt.info() == Eigen::Success) {
    Mat l = llt.matrixL();
    if (l.allFinite()) return l;
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
  auto values = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * values.asDiagonal();
}

inline double log_sum_exp(const double* v, std::size_t n) {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) hi = std::max(hi, v[i]);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::exp(v[i] - hi);
  return hi + std::log(acc);
}

}  // namespace fash::detail

#pragma once

#include "sbp/linalg.hpp"

#include <cstdint>
#include <initializer_list>
#include <random>

namespace sbp::test {

inline Matrix gaussian(Index m, Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Matrix A(m, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) A(i, j) = nd(rng);
  return A;
}

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index k = 0;
  for (double d : v) out[k++] = d;
  return out;
}

inline Vector gaussian_vector(Index n, std::uint64_t seed) { return gaussian(n, 1, seed).col(0); }

// Explicit pseudo-inverse via SVD, used as an independent oracle.
inline Matrix pinv(const Matrix& M) {
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double tol = s.size() ? s[0] * static_cast<double>(std::max(M.rows(), M.cols())) * 1e-15 : 0.0;
  Matrix Sinv = Matrix::Zero(M.cols(), M.rows());
  for (Index k = 0; k < s.size(); ++k)
    if (s[k] > tol) Sinv(k, k) = 1.0 / s[k];
  return svd.matrixV() * Sinv * svd.matrixU().transpose();
}

}  // namespace sbp::test

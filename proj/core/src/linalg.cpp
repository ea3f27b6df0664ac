#include "sbp/linalg.hpp"

#include "sbp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sbp {

double rank_tolerance(const Eigen::VectorXd& singular_values, Index rows, Index cols) {
  if (singular_values.size() == 0) return 0.0;
  return singular_values.maxCoeff() * static_cast<double>(std::max(rows, cols)) *
         std::numeric_limits<double>::epsilon();
}

Index numerical_rank(const Matrix& A, double tol) {
  if (A.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(A);
  const Vector& s = svd.singularValues();
  const double cut = tol > 0.0 ? tol : rank_tolerance(s, A.rows(), A.cols());
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s[i] > cut) ++r;
  }
  return r;
}

Matrix row_space_basis(const Matrix& A, double tol) {
  if (A.size() == 0) return Matrix(A.cols(), 0);
  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cut = tol > 0.0 ? tol : rank_tolerance(s, A.rows(), A.cols());
  Index r = 0;
  while (r < s.size() && s[r] > cut) ++r;
  return svd.matrixV().leftCols(r);
}

namespace {

void check_probability(const Vector& p, Index q, double tol, bool strict) {
  if (p.size() != q) {
    throw Error(Errc::invalid_probability,
                "probability vector has length " + std::to_string(p.size()) + ", expected " +
                    std::to_string(q));
  }
  double total = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    const bool bad = !std::isfinite(p[i]) || (strict ? p[i] <= 0.0 : p[i] < 0.0);
    if (bad) {
      throw Error(Errc::invalid_probability,
                  "probability entry " + std::to_string(i) + " is not " +
                      (strict ? "strictly positive" : "nonnegative"));
    }
    total += p[i];
  }
  if (std::abs(total - 1.0) > tol) {
    throw Error(Errc::invalid_probability,
                "probability vector sums to " + std::to_string(total) + ", not 1");
  }
}

}  // namespace

void validate_probability(const Vector& p, Index q, double tol) {
  check_probability(p, q, tol, true);
}

void validate_distribution(const Vector& p, Index q, double tol) {
  check_probability(p, q, tol, false);
}

Matrix normalize_rows(const Matrix& A) {
  Matrix out = A;
  for (Index i = 0; i < A.rows(); ++i) {
    const double nrm = A.row(i).norm();
    if (nrm > 0.0) out.row(i) /= nrm;
  }
  return out;
}

}  // namespace sbp

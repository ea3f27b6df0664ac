#pragma once

#include <Eigen/Dense>

namespace sbp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

/// Default cutoff for numerical rank: sigma_max * max(rows, cols) * eps.
double rank_tolerance(const Eigen::VectorXd& singular_values, Index rows, Index cols);

/// Numerical rank of a dense matrix with the standard SVD cutoff. A
/// non-positive `tol` selects the default cutoff.
Index numerical_rank(const Matrix& A, double tol = -1.0);

/// Orthonormal basis (n x r) of range(A^T) = Row(A).
Matrix row_space_basis(const Matrix& A, double tol = -1.0);

/// Checks `p` is a strictly positive probability vector of length `q`
/// summing to one within `tol`; throws Errc::invalid_probability otherwise.
void validate_probability(const Vector& p, Index q, double tol = 1e-12);

/// Same as above, but allows zero entries (supports on a subset).
void validate_distribution(const Vector& p, Index q, double tol = 1e-12);

/// Rows of A scaled to unit norm; zero rows are left as zero rows.
Matrix normalize_rows(const Matrix& A);

}  // namespace sbp

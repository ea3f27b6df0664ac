#pragma once

#include "sbp/linalg.hpp"

#include <vector>

namespace sbp {

enum class SketchKind { Row, Block };

/// The finite sketch family {S_1, ..., S_q}. Row sketches select single rows
/// (S_i = e_i, q = m); block sketches select index subsets of the rows.
///
/// Everything needed for the projectors H_i = S_i (S_i^T A A^T S_i)^+ S_i^T
/// and Z_i = A^T H_i A is computed once at construction: squared row norms
/// for row sketches, and for each block M = S_i^T A the thin SVD factors
///   W_i = Sigma^-1 U^T   (so that g_i = |W_i r_tau|^2)
///   V_i                  (so that Z_i v = V_i V_i^T v)
/// truncated at the numerical rank of M.
class SketchSet {
 public:
  static SketchSet rows(const Matrix& A);
  /// `blocks` holds 0-based row indices; each block must be nonempty.
  /// A non-positive `rank_tol` selects sigma_max * max(tau, n) * eps per block.
  static SketchSet blocks(const Matrix& A, std::vector<std::vector<Index>> blocks, double rank_tol = -1.0);
  /// Contiguous blocks of `tau` rows (the last block may be shorter).
  static SketchSet contiguous_blocks(const Matrix& A, Index tau);

  SketchKind kind() const noexcept { return kind_; }
  Index size() const noexcept { return q_; }
  Index rows() const noexcept { return m_; }
  Index cols() const noexcept { return n_; }

  /// Row indices selected by sketch i.
  std::vector<Index> block(Index i) const;
  /// |S_i^T A|_F^2 (the squared row norm for row sketches).
  double frobenius_sq(Index i) const;
  /// Largest singular value squared of S_i^T A (the Lipschitz constant of the
  /// block dual objective).
  double spectral_sq(Index i) const;
  /// Numerical rank of S_i^T A.
  Index block_rank(Index i) const;

  /// g_i given the full residual r = A x - b.
  double loss_from_residual(Index i, VectorRef residual) const;
  /// Orthonormal basis of range(A^T S_i) (n x rank). Requires A for row sketches.
  Matrix range_basis(Index i, const Matrix& A) const;

  const Matrix& block_w(Index i) const { return w_[static_cast<std::size_t>(i)]; }
  const Matrix& block_v(Index i) const { return v_[static_cast<std::size_t>(i)]; }

  void check_compatible(const Matrix& A) const;
  void check_index(Index i) const;

 private:
  SketchSet() = default;

  SketchKind kind_ = SketchKind::Row;
  Index m_ = 0;
  Index n_ = 0;
  Index q_ = 0;
  Vector row_norm_sq_;
  std::vector<std::vector<Index>> blocks_;
  std::vector<Matrix> w_;
  std::vector<Matrix> v_;
  std::vector<double> spectral_sq_;
  std::vector<double> frobenius_sq_;
};

/// Sketched losses g_i(x) for the current iterate, with per-entry validity.
struct LossVector {
  Vector values;
  std::vector<bool> stale;

  explicit LossVector(Index q = 0) : values(Vector::Zero(q)), stale(static_cast<std::size_t>(q), true) {}
  void refresh(const SketchSet& sketch, VectorRef residual);
  void invalidate() { std::fill(stale.begin(), stale.end(), true); }
};

/// (Ax - b)^T H_i (Ax - b); zero rows give zero.
double sketched_loss(const SketchSet& sketch, Index i, const Matrix& A, VectorRef x, VectorRef b);

/// Z_i v, the orthogonal projection of v onto range(A^T S_i).
Vector apply_Z(const SketchSet& sketch, Index i, const Matrix& A, VectorRef v);

/// Explicit n x n projector Z_i.
Matrix projector(const SketchSet& sketch, Index i, const Matrix& A);

/// E_{i~p}[Z_i] = sum_i p_i Z_i. `p` must lie in the interior of the simplex.
Matrix expected_projector(const SketchSet& sketch, const Matrix& A, const Vector& p);

/// Null(A) == Null(E_p[Z_i]) up to numerical rank.
bool check_exactness(const SketchSet& sketch, const Matrix& A, const Vector& p);

/// Uniform distribution over the q sketches.
Vector uniform_probability(Index q);
/// p_i proportional to |S_i^T A|_F^2.
Vector frobenius_probability(const SketchSet& sketch);

}  // namespace sbp

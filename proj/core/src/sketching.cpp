#include "sbp/sketching.hpp"

#include "sbp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sbp {

SketchSet SketchSet::rows(const Matrix& A) {
  if (A.rows() < 1) throw Error(Errc::invalid_argument, "row sketch needs at least one row");
  SketchSet s;
  s.kind_ = SketchKind::Row;
  s.m_ = A.rows();
  s.n_ = A.cols();
  s.q_ = A.rows();
  s.row_norm_sq_ = A.rowwise().squaredNorm();
  return s;
}

SketchSet SketchSet::blocks(const Matrix& A, std::vector<std::vector<Index>> blocks, double rank_tol) {
  if (blocks.empty()) throw Error(Errc::invalid_argument, "block sketch needs at least one block");
  SketchSet s;
  s.kind_ = SketchKind::Block;
  s.m_ = A.rows();
  s.n_ = A.cols();
  s.q_ = static_cast<Index>(blocks.size());
  s.w_.reserve(blocks.size());
  s.v_.reserve(blocks.size());
  s.spectral_sq_.reserve(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& blk = blocks[b];
    if (blk.empty()) throw Error(Errc::invalid_argument, "block " + std::to_string(b) + " is empty");
    Matrix M(static_cast<Index>(blk.size()), A.cols());
    for (std::size_t r = 0; r < blk.size(); ++r) {
      if (blk[r] < 0 || blk[r] >= A.rows()) {
        throw Error(Errc::index_out_of_range, "block " + std::to_string(b) + " references row " +
                                                  std::to_string(blk[r]) + " outside [0, " +
                                                  std::to_string(A.rows()) + ")");
      }
      M.row(static_cast<Index>(r)) = A.row(blk[r]);
    }
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const double cut = rank_tol > 0.0 ? rank_tol : rank_tolerance(sv, M.rows(), M.cols());
    Index r = 0;
    while (r < sv.size() && sv[r] > cut) ++r;
    Matrix W = svd.matrixU().leftCols(r).transpose();
    for (Index k = 0; k < r; ++k) W.row(k) /= sv[k];
    s.w_.push_back(std::move(W));
    s.v_.push_back(svd.matrixV().leftCols(r));
    s.spectral_sq_.push_back(sv.size() > 0 ? sv[0] * sv[0] : 0.0);
    s.frobenius_sq_.push_back(M.squaredNorm());
  }
  s.blocks_ = std::move(blocks);
  return s;
}

SketchSet SketchSet::contiguous_blocks(const Matrix& A, Index tau) {
  if (tau < 1) throw Error(Errc::invalid_argument, "block size must be >= 1");
  std::vector<std::vector<Index>> blocks;
  for (Index start = 0; start < A.rows(); start += tau) {
    std::vector<Index> blk;
    for (Index i = start; i < std::min(A.rows(), start + tau); ++i) blk.push_back(i);
    blocks.push_back(std::move(blk));
  }
  return blocks.empty() ? rows(A) : SketchSet::blocks(A, std::move(blocks));
}

std::vector<Index> SketchSet::block(Index i) const {
  check_index(i);
  if (kind_ == SketchKind::Row) return {i};
  return blocks_[static_cast<std::size_t>(i)];
}

double SketchSet::frobenius_sq(Index i) const {
  check_index(i);
  if (kind_ == SketchKind::Row) return row_norm_sq_[i];
  return frobenius_sq_[static_cast<std::size_t>(i)];
}

double SketchSet::spectral_sq(Index i) const {
  check_index(i);
  if (kind_ == SketchKind::Row) return row_norm_sq_[i];
  return spectral_sq_[static_cast<std::size_t>(i)];
}

Index SketchSet::block_rank(Index i) const {
  check_index(i);
  if (kind_ == SketchKind::Row) return row_norm_sq_[i] > 0.0 ? 1 : 0;
  return v_[static_cast<std::size_t>(i)].cols();
}

double SketchSet::loss_from_residual(Index i, VectorRef residual) const {
  if (kind_ == SketchKind::Row) {
    const double nrm = row_norm_sq_[i];
    if (nrm == 0.0) return 0.0;
    const double ri = residual[i];
    return ri * ri / nrm;
  }
  const auto& blk = blocks_[static_cast<std::size_t>(i)];
  const auto& W = w_[static_cast<std::size_t>(i)];
  Vector rt(static_cast<Index>(blk.size()));
  for (std::size_t k = 0; k < blk.size(); ++k) rt[static_cast<Index>(k)] = residual[blk[k]];
  return (W * rt).squaredNorm();
}

Matrix SketchSet::range_basis(Index i, const Matrix& A) const {
  check_index(i);
  if (kind_ == SketchKind::Block) return v_[static_cast<std::size_t>(i)];
  check_compatible(A);
  const double nrm = row_norm_sq_[i];
  if (nrm == 0.0) return Matrix(n_, 0);
  return A.row(i).transpose() / std::sqrt(nrm);
}

void SketchSet::check_compatible(const Matrix& A) const {
  if (A.rows() != m_ || A.cols() != n_) {
    throw Error(Errc::dimension_mismatch, "sketch built for a " + std::to_string(m_) + "x" +
                                              std::to_string(n_) + " matrix, got " +
                                              std::to_string(A.rows()) + "x" + std::to_string(A.cols()));
  }
}

void SketchSet::check_index(Index i) const {
  if (i < 0 || i >= q_) {
    throw Error(Errc::index_out_of_range,
                "sketch index " + std::to_string(i) + " outside [0, " + std::to_string(q_) + ")");
  }
}

void LossVector::refresh(const SketchSet& sketch, VectorRef residual) {
  const Index q = sketch.size();
  if (values.size() != q) {
    values.resize(q);
    stale.assign(static_cast<std::size_t>(q), true);
  }
  for (Index i = 0; i < q; ++i) {
    values[i] = sketch.loss_from_residual(i, residual);
    stale[static_cast<std::size_t>(i)] = false;
  }
}

double sketched_loss(const SketchSet& sketch, Index i, const Matrix& A, VectorRef x, VectorRef b) {
  sketch.check_compatible(A);
  sketch.check_index(i);
  if (x.size() != A.cols() || b.size() != A.rows()) {
    throw Error(Errc::dimension_mismatch, "sketched_loss: x or b has the wrong length");
  }
  if (sketch.kind() == SketchKind::Row) {
    const double nrm = sketch.frobenius_sq(i);
    if (nrm == 0.0) return 0.0;
    const double ri = A.row(i).dot(x) - b[i];
    return ri * ri / nrm;
  }
  const auto blk = sketch.block(i);
  Vector rt(static_cast<Index>(blk.size()));
  for (std::size_t k = 0; k < blk.size(); ++k) rt[static_cast<Index>(k)] = A.row(blk[k]).dot(x) - b[blk[k]];
  return (sketch.block_w(i) * rt).squaredNorm();
}

Vector apply_Z(const SketchSet& sketch, Index i, const Matrix& A, VectorRef v) {
  sketch.check_compatible(A);
  sketch.check_index(i);
  if (v.size() != A.cols()) throw Error(Errc::dimension_mismatch, "apply_Z: v has the wrong length");
  if (sketch.kind() == SketchKind::Row) {
    const double nrm = sketch.frobenius_sq(i);
    if (nrm == 0.0) return Vector::Zero(v.size());
    return (A.row(i).dot(v) / nrm) * A.row(i).transpose();
  }
  const Matrix& V = sketch.block_v(i);
  return V * (V.transpose() * v);
}

Matrix projector(const SketchSet& sketch, Index i, const Matrix& A) {
  const Matrix V = sketch.range_basis(i, A);
  return V * V.transpose();
}

Matrix expected_projector(const SketchSet& sketch, const Matrix& A, const Vector& p) {
  sketch.check_compatible(A);
  validate_probability(p, sketch.size());
  Matrix E = Matrix::Zero(A.cols(), A.cols());
  for (Index i = 0; i < sketch.size(); ++i) {
    const Matrix V = sketch.range_basis(i, A);
    if (V.cols() == 0) continue;
    E.noalias() += p[i] * (V * V.transpose());
  }
  return E;
}

bool check_exactness(const SketchSet& sketch, const Matrix& A, const Vector& p) {
  const Matrix E = expected_projector(sketch, A, p);
  return numerical_rank(E) == numerical_rank(A);
}

Vector uniform_probability(Index q) {
  if (q < 1) throw Error(Errc::invalid_argument, "uniform_probability: q must be >= 1");
  return Vector::Constant(q, 1.0 / static_cast<double>(q));
}

Vector frobenius_probability(const SketchSet& sketch) {
  Vector p(sketch.size());
  for (Index i = 0; i < sketch.size(); ++i) p[i] = sketch.frobenius_sq(i);
  const double total = p.sum();
  if (total <= 0.0) throw Error(Errc::invalid_probability, "all sketches have zero norm");
  return p / total;
}

}  // namespace sbp

#include "helpers.hpp"
#include "sbp/errors.hpp"
#include "sbp/spectral.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <sstream>

using namespace sbp;
using test::vec;

namespace {

// Every beta-subset of {0..q-1}.
void for_each_subset(Index q, Index beta, const std::function<void(const std::vector<Index>&)>& fn) {
  std::vector<Index> idx(static_cast<std::size_t>(beta));
  for (Index k = 0; k < beta; ++k) idx[static_cast<std::size_t>(k)] = k;
  while (true) {
    fn(idx);
    Index k = beta - 1;
    while (k >= 0 && idx[static_cast<std::size_t>(k)] == q - beta + k) --k;
    if (k < 0) return;
    ++idx[static_cast<std::size_t>(k)];
    for (Index j = k + 1; j < beta; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

double subset_mass(const std::vector<Index>& tau, const Vector& w, BlockDistribution p1) {
  if (p1 == BlockDistribution::Uniform) return 1.0;
  double s = 0;
  for (Index i : tau) s += w[i];
  return s;
}

double smallest_nonzero_in_rowspace(const Matrix& E, const Matrix& A) {
  const Matrix Q = row_space_basis(A);
  Eigen::SelfAdjointEigenSolver<Matrix> es(Q.transpose() * E * Q);
  return es.eigenvalues().minCoeff();
}

}  // namespace

TEST(SigmaP, Examples) {
  const Matrix I = Matrix::Identity(2, 2);
  EXPECT_NEAR(sigma_p_squared(SketchSet::rows(I), I, uniform_probability(2)), 0.5, 1e-15);
  // Orthogonal rows of equal norm in R^5.
  Matrix A = Matrix::Zero(3, 5);
  A(0, 0) = 2;
  A(1, 2) = -2;
  A(2, 4) = 2;
  EXPECT_NEAR(sigma_p_squared(SketchSet::rows(A), A, uniform_probability(3)), 1.0 / 3.0, 1e-14);
}

TEST(SigmaP, MatchesExplicitAssembly) {
  for (int s = 0; s < 10; ++s) {
    const Matrix A = test::gaussian(7, 4 + s % 3, 30 + s);
    const auto sk = SketchSet::rows(A);
    const Vector p = frobenius_probability(sk);
    Matrix E = Matrix::Zero(A.cols(), A.cols());
    for (Index i = 0; i < A.rows(); ++i) E += p[i] * A.row(i).transpose() * A.row(i) / A.row(i).squaredNorm();
    const double v = sigma_p_squared(sk, A, p);
    EXPECT_NEAR(v, smallest_nonzero_in_rowspace(E, A), 1e-12);
    EXPECT_GT(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(SigmaP, ExactnessViolationThrows) {
  const Matrix I = Matrix::Identity(2, 2);
  try {
    sigma_p_squared(SketchSet::blocks(I, {{0}}), I, vec({1.0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::exactness_violated);
    EXPECT_TRUE(e.is_numerical());
  }
}

TEST(SigmaInf, IdentityBracketAndGrid) {
  const Matrix I = Matrix::Identity(2, 2);
  const auto sk = SketchSet::rows(I);
  const auto br = sigma_inf_squared_bracket(sk, I);
  EXPECT_LE(br.lower, 0.5 + 1e-12);
  EXPECT_GE(br.upper, 0.5 - 1e-12);
  EXPECT_NEAR(br.upper, 0.5, 1e-6);
  EXPECT_NEAR(sigma_inf_squared_grid(sk, I), 0.5, 1e-7);
}

TEST(SigmaInf, SingleSpanningSketch) {
  const Matrix A = test::gaussian(4, 3, 2);
  const auto sk = SketchSet::blocks(A, {{0, 1, 2, 3}});
  const auto br = sigma_inf_squared_bracket(sk, A);
  EXPECT_NEAR(br.lower, 1.0, 1e-12);
  EXPECT_NEAR(br.upper, 1.0, 1e-12);
}

TEST(SigmaInf, BracketContainsGridValue) {
  for (int s = 0; s < 10; ++s) {
    const Matrix A = test::gaussian(6, 3, 200 + s);
    const auto sk = SketchSet::rows(A);
    const auto br = sigma_inf_squared_bracket(sk, A, 8, 500, s);
    const double grid = sigma_inf_squared_grid(sk, A, 2000);
    EXPECT_LE(br.lower, grid + 1e-9);
    // The max of projector norms has kinks, so a grid of spacing h is only
    // within O(h) of the true minimum; descent may land below the grid value.
    EXPECT_GE(br.upper, grid - 5e-3);
    EXPECT_LE(br.upper, grid + 1e-3);
    EXPECT_LE(br.lower, br.upper + 1e-12);
  }
}

TEST(JointProbability, MatchesEnumeration) {
  const Vector w = vec({1, 2, 3, 4, 5});
  for (auto p1 : {BlockDistribution::Weighted, BlockDistribution::Uniform}) {
    for (Index beta = 1; beta <= 5; ++beta) {
      Vector p3 = Vector::Zero(5);
      double total = 0;
      for_each_subset(5, beta, [&](const std::vector<Index>& tau) {
        const double m = subset_mass(tau, w, p1);
        total += m;
        for (Index i : tau) p3[i] += m / static_cast<double>(beta);
      });
      p3 /= total;
      EXPECT_LE((joint_probability(w, beta, p1) - p3).norm(), 1e-14);
    }
  }
}

TEST(ExpectedBlockMax, MatchesEnumeration) {
  const Vector w = vec({0.5, 2, 1, 4, 3, 1.5});
  const Vector v = vec({0.3, 0.9, 0.9, 0.1, 0.7, 0.2});  // includes a tie
  for (auto p1 : {BlockDistribution::Weighted, BlockDistribution::Uniform}) {
    for (Index beta = 1; beta <= 6; ++beta) {
      double total = 0, acc = 0;
      for_each_subset(6, beta, [&](const std::vector<Index>& tau) {
        const double m = subset_mass(tau, w, p1);
        double mx = -1;
        for (Index i : tau) mx = std::max(mx, v[i]);
        total += m;
        acc += m * mx;
      });
      EXPECT_NEAR(expected_block_max(v, w, beta, p1), acc / total, 1e-14);
    }
  }
}

TEST(SkmConstants, SingletonUniformIsSigmaUniform) {
  const Matrix A = test::gaussian(6, 4, 12);
  const auto sk = SketchSet::rows(A);
  const double su = sigma_p_squared(sk, A, uniform_probability(6));
  const auto c = skm_constants(sk, A, 1, BlockDistribution::Uniform);
  EXPECT_NEAR(c.blk_pp, su, 1e-12);
  EXPECT_NEAR(c.blk_inf_lower, su, 1e-12);
  EXPECT_NEAR(c.blk_inf_upper, su, 1e-9);
}

TEST(SkmConstants, FullBlockIsSigmaInf) {
  const Matrix A = test::gaussian(5, 3, 13);
  const auto sk = SketchSet::rows(A);
  const auto br = sigma_inf_squared_bracket(sk, A);
  SkmOptions opt;
  opt.warm_start = br.argmin;
  const auto c = skm_constants(sk, A, 5, BlockDistribution::Weighted, opt);
  const double grid = sigma_inf_squared_grid(sk, A, 4000);
  EXPECT_LE(c.blk_inf_upper, br.upper + 1e-12);
  EXPECT_GE(c.blk_inf_upper, grid - 1e-4);
  EXPECT_LE(c.blk_inf_lower, grid + 1e-9);
}

TEST(SkmConstants, OrderingAndMonteCarlo) {
  const Matrix A = test::gaussian(9, 4, 14);
  const auto sk = SketchSet::rows(A);
  const auto exact = skm_constants(sk, A, 3, BlockDistribution::Weighted);
  EXPECT_TRUE(exact.enumerated);
  EXPECT_EQ(exact.subsets, 84.0);
  EXPECT_LE(exact.blk_pp, exact.blk_inf_upper + 1e-12);
  SkmOptions opt;
  opt.enumeration_cap = 10;
  const auto mc = skm_constants(sk, A, 3, BlockDistribution::Weighted, opt);
  EXPECT_FALSE(mc.enumerated);
  EXPECT_GT(mc.blk_pp_stderr, 0.0);
  EXPECT_NEAR(mc.blk_pp, exact.blk_pp, 5.0 * mc.blk_pp_stderr + 1e-3);
}

TEST(Chain, SigmaOrdering) {
  // sigma_p^2 <= sigma_inf^2 bracket and sigma_blk_pp^2 <= sigma_blk_inf^2 <= sigma_inf^2.
  for (int s = 0; s < 10; ++s) {
    const Matrix A = test::gaussian(8, 3, 400 + s);
    const auto sk = SketchSet::rows(A);
    const double sp = sigma_p_squared(sk, A, frobenius_probability(sk));
    const double grid = sigma_inf_squared_grid(sk, A, 2000);
    EXPECT_LE(sp, grid + 1e-9);
    const auto c = skm_constants(sk, A, 3, BlockDistribution::Weighted);
    EXPECT_LE(c.blk_pp, c.blk_inf_upper + 1e-12);
    EXPECT_LE(c.blk_inf_lower, grid + 1e-9);
  }
}

TEST(LossBounds, HoldAtRandomPoints) {
  // max_i g_i >= sigma_inf^2 |x - xbar|^2 and E_p g >= sigma_p^2 |x - xbar|^2 on full column rank A.
  const Matrix A = test::gaussian(10, 3, 5);
  const Vector xbar = test::gaussian_vector(3, 6);
  const Vector b = A * xbar;
  const auto sk = SketchSet::rows(A);
  const Vector p = frobenius_probability(sk);
  const double sp = sigma_p_squared(sk, A, p);
  const double sinf = sigma_inf_squared_bracket(sk, A).lower;
  for (int s = 0; s < 100; ++s) {
    const Vector x = test::gaussian_vector(3, 1000 + s);
    Vector g(10);
    for (Index i = 0; i < 10; ++i) g[i] = sketched_loss(sk, i, A, x, b);
    const double e = (x - xbar).squaredNorm();
    EXPECT_GE(g.maxCoeff(), sinf * e - 1e-9);
    EXPECT_GE(p.dot(g), sp * e - 1e-9);
  }
}

TEST(Eta, Examples) {
  EXPECT_DOUBLE_EQ(eta(vec({0.5, 0.5})), 2.0);
  EXPECT_NEAR(eta(uniform_probability(7)), 7.0 / 6.0, 1e-15);
  EXPECT_NEAR(eta(vec({0.9, 0.05, 0.05})), 1.0 / 0.95, 1e-15);
  EXPECT_TRUE(std::isinf(eta(vec({1.0}))));
}

TEST(RateBound, Examples) {
  const Matrix I = Matrix::Identity(2, 2);
  RateParams params;
  EXPECT_NEAR(rate_bound(Method::Kaczmarz, RuleKind::RowNormWeighted, I, params), 0.5, 1e-15);
  Matrix A(3, 3);
  A << 1, 1, 0, 0, 1, 1, 1, 0, 1;  // equal row norms
  EXPECT_NEAR(rate_bound(Method::Kaczmarz, RuleKind::Uniform, A, params),
              rate_bound(Method::Kaczmarz, RuleKind::RowNormWeighted, A, params), 1e-15);
  params.truth = vec({1, -2, 0});
  params.lambda = 1e-12;
  const double sparse = rate_bound(Method::SparseKaczmarz, RuleKind::Uniform, A, params);
  const double limit = 1.0 - smallest_nonzero_eig_gram(A) / (2.0 * A.squaredNorm());
  EXPECT_NEAR(sparse, limit, 1e-9);
  params.truth.reset();
  EXPECT_THROW(rate_bound(Method::SparseKaczmarz, RuleKind::Uniform, A, params), Error);
}

TEST(RateBound, InUnitInterval) {
  const Matrix A = test::gaussian(12, 5, 8);
  RateParams params;
  params.beta = 4;
  params.lambda = 0.5;
  params.truth = test::gaussian_vector(5, 9);
  for (auto method : {Method::Kaczmarz, Method::SparseKaczmarz})
    for (auto rule : {RuleKind::Uniform, RuleKind::RowNormWeighted, RuleKind::MaxDistance,
                      RuleKind::ProportionalToLoss, RuleKind::Capped, RuleKind::SketchMotzkin}) {
      const double r = rate_bound(method, rule, A, params);
      EXPECT_GE(r, 0.0);
      EXPECT_LT(r, 1.0);
    }
}

TEST(RateReport, WritesKeyValueLines) {
  const Matrix A = test::gaussian(6, 3, 1);
  RateReportOptions opt;
  opt.rule = RuleKind::SketchMotzkin;
  opt.beta = 2;
  const auto rep = make_rate_report(SketchSet::rows(A), A, opt);
  EXPECT_TRUE(rep.sigma_inf_sq_grid.has_value());
  EXPECT_EQ(rep.per_rule_bounds.size(), 6u);
  std::ostringstream os;
  write_rate_report(os, rep);
  EXPECT_NE(os.str().find("sigma_p_sq: "), std::string::npos);
  EXPECT_NE(os.str().find("eta: "), std::string::npos);
}

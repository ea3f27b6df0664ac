#include "helpers.hpp"
#include "sbp/bregman.hpp"
#include "sbp/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace sbp;

namespace {

double phi(const GeneratingFunction& f, const Vector& xs, const Vector& a, double beta, double t) {
  return dual_objective(f, xs, a, beta, t);
}

// Grid search followed by golden-section refinement on the best cell.
double grid_minimizer(const GeneratingFunction& f, const Vector& xs, const Vector& a, double beta, double lo,
                      double hi, double step) {
  double best_t = lo;
  double best = phi(f, xs, a, beta, lo);
  for (double t = lo; t <= hi; t += step) {
    const double v = phi(f, xs, a, beta, t);
    if (v < best) {
      best = v;
      best_t = t;
    }
  }
  double l = best_t - step;
  double r = best_t + step;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 200; ++it) {
    const double m1 = r - g * (r - l);
    const double m2 = l + g * (r - l);
    if (phi(f, xs, a, beta, m1) < phi(f, xs, a, beta, m2)) {
      r = m2;
    } else {
      l = m1;
    }
  }
  return 0.5 * (l + r);
}

}  // namespace

TEST(SoftThreshold, Examples) {
  Vector z(3);
  z << 2, -0.5, 0;
  EXPECT_EQ(soft_threshold(z, 1.0), test::vec({1, 0, 0}));
  const Vector r = test::gaussian_vector(7, 1);
  EXPECT_EQ(soft_threshold(r, 0.0), r);
  Vector y(2);
  y << 1, -2;
  Vector want(2);
  want << 0.5, -1.5;
  EXPECT_EQ(soft_threshold(y, 0.5), want);
}

TEST(SoftThreshold, IsOneLipschitz) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int k = 0; k < 10000; ++k) {
    const double a = u(rng), b = u(rng), lam = std::abs(u(rng));
    EXPECT_LE(std::abs(soft_threshold(a, lam) - soft_threshold(b, lam)), std::abs(a - b) + 1e-15);
  }
}

TEST(SoftThreshold, SubgradientIdentity) {
  for (int s = 0; s < 50; ++s) {
    const Vector z = 3.0 * test::gaussian_vector(20, 100 + s);
    const double lam = 0.1 * s;
    const Vector sz = soft_threshold(z, lam);
    EXPECT_NEAR((z - sz).dot(sz), lam * sz.lpNorm<1>(), 1e-12 * (1.0 + sz.squaredNorm()));
  }
}

TEST(ConjugateGradient, Examples) {
  Vector z(2);
  z << 3, -1;
  EXPECT_EQ(conjugate_gradient_map(GeneratingFunction::squared_norm(), z), z);
  Vector w(2);
  w << 3, 0.5;
  Vector want(2);
  want << 2, 0;
  EXPECT_EQ(conjugate_gradient_map(GeneratingFunction::elastic_net(1.0), w), want);
  const Vector r = test::gaussian_vector(9, 4);
  EXPECT_EQ(conjugate_gradient_map(GeneratingFunction::elastic_net(0.0), r), r);
}

TEST(GeneratingFunction, RejectsNegativeLambda) {
  EXPECT_THROW(GeneratingFunction::elastic_net(-1.0), Error);
  EXPECT_THROW(GeneratingFunction::elastic_net(std::nan("")), Error);
  EXPECT_EQ(GeneratingFunction::elastic_net(2.0).mu(), 1.0);
}

TEST(BregmanDistance, Examples) {
  const auto sq = GeneratingFunction::squared_norm();
  PrimalDualPair p{Vector::Unit(2, 0), Vector::Unit(2, 0)};
  EXPECT_DOUBLE_EQ(bregman_distance(sq, p, Vector::Zero(2)), 0.5);

  const auto en = GeneratingFunction::elastic_net(1.0);
  PrimalDualPair z{Vector::Zero(2), Vector::Zero(2)};
  EXPECT_DOUBLE_EQ(bregman_distance(en, z, Vector::Unit(2, 0)), 1.5);

  const auto q = PrimalDualPair::from_dual(en, test::gaussian_vector(5, 8) * 3.0);
  EXPECT_EQ(bregman_distance(en, q, q.x), 0.0);
}

TEST(BregmanDistance, MatchesDefinitionAndStrongConvexity) {
  for (int s = 0; s < 200; ++s) {
    const double lam = 0.05 * (s % 20);
    const auto f = GeneratingFunction::elastic_net(lam);
    const auto p = PrimalDualPair::from_dual(f, 2.0 * test::gaussian_vector(6, 500 + s));
    ASSERT_TRUE(p.consistent(f));
    const Vector y = test::gaussian_vector(6, 900 + s);
    const double d = bregman_distance(f, p, y);
    const double direct = f.value(y) - f.value(p.x) - p.x_star.dot(y - p.x);
    EXPECT_NEAR(d, direct, 1e-12 * (1.0 + std::abs(direct)));
    EXPECT_GE(d, 0.5 * (p.x - y).squaredNorm() - 1e-12);
  }
}

TEST(Linesearch, SquaredNormClosedForm) {
  Vector xs(2), a(2);
  xs << 1, 1;
  a << 3, 4;
  EXPECT_NEAR(exact_dual_linesearch(GeneratingFunction::squared_norm(), xs, a, 0.0), 0.28, 1e-15);
}

TEST(Linesearch, ElasticNetExampleAgainstGrid) {
  const auto f = GeneratingFunction::elastic_net(1.0);
  const Vector xs = Vector::Zero(2);
  Vector a(2);
  a << 1, 0;
  const double t = exact_dual_linesearch(f, xs, a, 2.0);
  EXPECT_NEAR(t, -3.0, 1e-12);
  // Plain grid over [-10, 10] at step 1e-5.
  double best_t = -10.0, best = phi(f, xs, a, 2.0, -10.0);
  for (long k = 0; k <= 2000000; ++k) {
    const double s = -10.0 + 1e-5 * static_cast<double>(k);
    const double v = phi(f, xs, a, 2.0, s);
    if (v < best) {
      best = v;
      best_t = s;
    }
  }
  EXPECT_NEAR(t, best_t, 1e-5);
}

TEST(Linesearch, LambdaZeroMatchesSquaredNorm) {
  for (int s = 0; s < 50; ++s) {
    const Vector xs = test::gaussian_vector(8, 10 + s);
    const Vector a = test::gaussian_vector(8, 70 + s);
    const double beta = 0.3 * s - 7.0;
    EXPECT_EQ(exact_dual_linesearch(GeneratingFunction::elastic_net(0.0), xs, a, beta),
              exact_dual_linesearch(GeneratingFunction::squared_norm(), xs, a, beta));
    // The breakpoint scan itself agrees with the closed form at lambda = 0.
    EXPECT_NEAR(breakpoint_linesearch(xs, a, beta, 0.0),
                exact_dual_linesearch(GeneratingFunction::squared_norm(), xs, a, beta), 1e-10);
  }
}

TEST(Linesearch, OptimalityAndGridOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int s = 0; s < 200; ++s) {
    const double lam = u(rng);
    const auto f = GeneratingFunction::elastic_net(lam);
    const Vector xs = 2.0 * test::gaussian_vector(5, 3000 + s);
    Vector a = test::gaussian_vector(5, 4000 + s);
    if (s % 3 == 0) a[s % 5] = 0.0;
    const double beta = 2.0 * test::gaussian_vector(1, 5000 + s)[0];
    const double t = exact_dual_linesearch(f, xs, a, beta);
    EXPECT_LE(std::abs(dual_derivative(f, xs, a, beta, t)), 1e-10 * (1.0 + std::abs(beta)));
    EXPECT_LE(phi(f, xs, a, beta, t), phi(f, xs, a, beta, t + 1e-4));
    EXPECT_LE(phi(f, xs, a, beta, t), phi(f, xs, a, beta, t - 1e-4));
    const double oracle = grid_minimizer(f, xs, a, beta, t - 50.0, t + 50.0, 1e-3);
    EXPECT_LE(phi(f, xs, a, beta, t), phi(f, xs, a, beta, oracle) + 1e-12);
    EXPECT_NEAR(t, oracle, 1e-6);
  }
}

TEST(Linesearch, ZeroDirectionIsRejected) {
  EXPECT_THROW(exact_dual_linesearch(GeneratingFunction::elastic_net(1.0), Vector::Ones(3), Vector::Zero(3), 1.0),
               Error);
  EXPECT_THROW(exact_dual_linesearch(GeneratingFunction::squared_norm(), Vector::Ones(3), Vector::Zero(3), 1.0),
               Error);
  EXPECT_THROW(exact_dual_linesearch(GeneratingFunction::squared_norm(), Vector::Ones(3), Vector::Ones(2), 1.0),
               Error);
}

TEST(InexactStep, Examples) {
  Vector x(2), a(2);
  x << 1, 1;
  a << 0.6, 0.8;
  EXPECT_NEAR(inexact_dual_step(x, a, 0.0), 1.4, 1e-15);
  Vector xb(2);
  xb << 2, 0;
  EXPECT_EQ(inexact_dual_step(xb, Vector::Unit(2, 0), 1.0), 1.0);
  EXPECT_EQ(inexact_dual_step(xb, a, a.dot(xb)), 0.0);
}

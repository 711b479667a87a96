#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

#include "mvkl/output_kernel.hpp"
#include "test_support.hpp"

using namespace mvkl;
using mvkl::testing::random_matrix;
using mvkl::testing::random_psd;
using mvkl::testing::random_spectahedron_point;
using mvkl::testing::random_symmetric;

namespace {

SpectahedronProblem random_problem(std::size_t l, std::size_t n, double lambda, double tau, std::mt19937_64& rng) {
  const DenseMatrix a = random_matrix(l, n, rng);
  const DenseMatrix c = random_matrix(l, n, rng, 0.3);
  return SpectahedronProblem::make(a, matmul_tn(c, a), random_matrix(l, n, rng), lambda, l, tau);
}

SpectahedronProblem scalar_problem(double a, double y, double lambda, double b, double tau) {
  return SpectahedronProblem::make(DenseMatrix(1, 1, a), DenseMatrix(1, 1, b), DenseMatrix(1, 1, y), lambda, 1, tau);
}

}  // namespace

TEST(ObjectiveG, ZeroCases) {
  std::mt19937_64 rng(41);
  const auto p = random_problem(6, 3, 0.2, 1.0, rng);
  EXPECT_NEAR(objective_g(SymmetricMatrix(3), p), frobenius_dot(p.y, p.y) / 6.0, 1e-14);
  auto q = SpectahedronProblem::make(DenseMatrix(6, 3), DenseMatrix(3, 3), p.y, 0.0, 6, 1.0);
  EXPECT_NEAR(objective_g(random_psd(3, rng), q), frobenius_dot(p.y, p.y) / 6.0, 1e-14);
  EXPECT_THROW(objective_g(SymmetricMatrix(2), p), Error);
}

TEST(ObjectiveG, ScalarHandEvaluation) {
  // (1/1)(2·0.5 − 3)² + 0.1·4·0.5 = 4 + 0.2
  const auto p = scalar_problem(2.0, 3.0, 0.1, 4.0, 1.0);
  EXPECT_NEAR(objective_g(SymmetricMatrix::identity(1, 0.5), p), 4.2, 1e-15);
}

TEST(GradientG, DataTermVanishesWhenAIsZero) {
  const DenseMatrix b = DenseMatrix::from_rows({{1.0, 2.0}, {0.0, 3.0}});
  const auto p = SpectahedronProblem::make(DenseMatrix(4, 2), b, DenseMatrix(4, 2, 1.0), 0.5, 4, 1.0);
  const auto g = gradient_g(SymmetricMatrix::identity(2), p);
  EXPECT_NEAR(g(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(g(0, 1), 0.5, 1e-15);
  EXPECT_NEAR(g(1, 1), 1.5, 1e-15);
}

TEST(GradientG, VanishesAtScalarStationaryPoint) {
  const double a = 1.5, y = 2.0, lambda = 0.3, b = 0.8;
  const double lstar = (a * y - lambda * b / 2.0) / (a * a);
  const auto p = scalar_problem(a, y, lambda, b, 10.0);
  EXPECT_NEAR(gradient_g(SymmetricMatrix::identity(1, lstar), p)(0, 0), 0.0, 1e-14);
}

TEST(GradientG, MatchesCentralDifferences) {
  std::mt19937_64 rng(42);
  for (int probe = 0; probe < 20; ++probe) {
    const auto p = random_problem(8, 4, 0.25, 2.0, rng);
    const SymmetricMatrix l = random_psd(4, rng);
    const SymmetricMatrix dir = random_symmetric(4, rng);
    const double h = 1e-6;
    SymmetricMatrix lp = l, lm = l;
    lp.add_scaled(h, dir);
    lm.add_scaled(-h, dir);
    const double fd = (objective_g(lp, p) - objective_g(lm, p)) / (2.0 * h);
    const double an = gradient_g(l, p).frobenius_dot(dir);
    EXPECT_LE(std::abs(fd - an), 1e-5 * std::max(1.0, std::abs(an)));
  }
}

TEST(LinearMinimizer, PsdGradientGivesZero) {
  const auto lm = linear_minimizer(SymmetricMatrix::identity(3), 2.0, 1e-10);
  EXPECT_EQ(lm.s, SymmetricMatrix(3));
}

TEST(LinearMinimizer, DiagonalGradientPicksTheNegativeAxis) {
  const auto lm = linear_minimizer(SymmetricMatrix::diagonal(std::vector<double>{-2.0, 1.0}), 3.0, 1e-12);
  EXPECT_NEAR(lm.s(0, 0), 3.0, 1e-10);
  EXPECT_NEAR(lm.s(0, 1), 0.0, 1e-10);
  EXPECT_NEAR(lm.s(1, 1), 0.0, 1e-10);
  EXPECT_THROW(linear_minimizer(SymmetricMatrix::identity(2), 0.0, 1e-8), Error);
}

TEST(LinearMinimizer, BeatsRandomFeasibleDirections) {
  std::mt19937_64 rng(43);
  const SymmetricMatrix grad = random_symmetric(6, rng);
  const double tau = 1.5;
  const auto lm = linear_minimizer(grad, tau, 1e-10);
  const double best = grad.frobenius_dot(lm.s);
  EXPECT_LE(best, 0.0);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> w(6);
    for (double& e : w) e = nd(rng);
    const double nw = norm2(w);
    for (double& e : w) e /= nw;
    EXPECT_LE(best, grad.frobenius_dot(SymmetricMatrix::outer(w, tau)) + 1e-9);
  }
}

TEST(ExactLineSearch, ZeroDirection) {
  std::mt19937_64 rng(44);
  const auto p = random_problem(5, 3, 0.1, 1.0, rng);
  EXPECT_EQ(exact_line_search(SymmetricMatrix::identity(3, 0.2), SymmetricMatrix(3), p), 0.0);
}

TEST(ExactLineSearch, ScalarStepIsClamped) {
  // g(α) = (α − 2)², stationary at 2, clamped to 1.
  const auto p = scalar_problem(1.0, 2.0, 0.0, 0.0, 5.0);
  EXPECT_EQ(exact_line_search(SymmetricMatrix(1), SymmetricMatrix::identity(1), p), 1.0);
  const auto half = scalar_problem(1.0, 0.5, 0.0, 0.0, 5.0);
  EXPECT_NEAR(exact_line_search(SymmetricMatrix(1), SymmetricMatrix::identity(1), half), 0.5, 1e-15);
}

TEST(ExactLineSearch, LinearObjectiveAlongDirection) {
  // A = 0: only the trace term remains, so the step goes to an endpoint.
  const auto down = SpectahedronProblem::make(DenseMatrix(2, 1), DenseMatrix(1, 1, -1.0), DenseMatrix(2, 1), 1.0, 2, 1.0);
  EXPECT_EQ(exact_line_search(SymmetricMatrix(1), SymmetricMatrix::identity(1), down), 1.0);
  const auto up = SpectahedronProblem::make(DenseMatrix(2, 1), DenseMatrix(1, 1, 1.0), DenseMatrix(2, 1), 1.0, 2, 1.0);
  EXPECT_EQ(exact_line_search(SymmetricMatrix(1), SymmetricMatrix::identity(1), up), 0.0);
}

TEST(ExactLineSearch, BeatsGridSearch) {
  std::mt19937_64 rng(45);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_problem(7, 3, 0.2, 1.0, rng);
    const SymmetricMatrix l = random_spectahedron_point(3, 1.0, rng);
    const SymmetricMatrix s = random_spectahedron_point(3, 1.0, rng, 1.0);
    const SymmetricMatrix dir = s - l;
    const double alpha = exact_line_search(l, dir, p);
    ASSERT_GE(alpha, 0.0);
    ASSERT_LE(alpha, 1.0);
    auto g_at = [&](double t) {
      SymmetricMatrix m = l;
      m.add_scaled(t, dir);
      return objective_g(m, p);
    };
    const double ga = g_at(alpha);
    for (int k = 0; k <= 1000; ++k) EXPECT_LE(ga, g_at(k / 1000.0) + 1e-10);
  }
}

TEST(SolveOutputKernel, ConstantObjectiveStopsImmediately) {
  std::mt19937_64 rng(46);
  const auto p = SpectahedronProblem::make(DenseMatrix(4, 3), DenseMatrix(3, 3), random_matrix(4, 3, rng), 0.0, 4, 1.0);
  const SymmetricMatrix l0 = random_spectahedron_point(3, 1.0, rng);
  const auto st = solve_output_kernel(p, FwState{l0}, 100, 1e-8);
  EXPECT_EQ(st.iter, 0u);
  EXPECT_EQ(st.l, l0);
}

TEST(SolveOutputKernel, ScalarMatchesClosedFormProjection) {
  std::mt19937_64 rng(47);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t l = 5;
    DenseMatrix a(l, 1), y(l, 1);
    double aa = 0.0, ay = 0.0;
    for (std::size_t i = 0; i < l; ++i) {
      a(i, 0) = nd(rng);
      y(i, 0) = nd(rng) + 0.5;
      aa += a(i, 0) * a(i, 0);
      ay += a(i, 0) * y(i, 0);
    }
    const double lambda = 0.1, b = nd(rng), tau = 0.8;
    const auto p = SpectahedronProblem::make(a, DenseMatrix(1, 1, b), y, lambda, l, tau);
    const double expected = std::clamp((ay - lambda * b * l / 2.0) / aa, 0.0, tau);
    const auto st = solve_output_kernel(p, FwState{SymmetricMatrix(1)}, 200, 1e-12);
    EXPECT_NEAR(st.l(0, 0), expected, 1e-9);
  }
}

TEST(SolveOutputKernel, FeasibleMonotoneAndCloseToLongRunOracle) {
  std::mt19937_64 rng(48);
  const auto p = random_problem(10, 4, 0.1, 1.0, rng);
  const SymmetricMatrix l0 = SymmetricMatrix::identity(4, 0.25);
  const auto oracle = solve_output_kernel(p, FwState{l0}, 100000, 1e-15);
  double prev = std::numeric_limits<double>::infinity();
  bool ok = true;
  // The duality gap bounds g − g*, so a gap below 1e-4 certifies the target.
  const auto st = solve_output_kernel(p, FwState{l0}, 20000, 1e-4 / 3.0, [&](const FwState& s) {
    ok = ok && in_spectahedron(s.l, p.tau) && s.objective <= prev + 1e-12 * std::abs(prev);
    prev = s.objective;
  });
  EXPECT_TRUE(ok);
  EXPECT_LT(st.iter, 20000u);
  EXPECT_LE(std::abs(st.objective - oracle.objective), 1e-4);
  EXPECT_LE(oracle.objective, st.objective + 1e-12);
}

TEST(SolveOutputKernel, RejectsInfeasibleStart) {
  std::mt19937_64 rng(49);
  const auto p = random_problem(5, 2, 0.1, 1.0, rng);
  try {
    solve_output_kernel(p, FwState{SymmetricMatrix::identity(2)}, 10, 1e-6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_input);
  }
  EXPECT_THROW(solve_output_kernel(p, FwState{SymmetricMatrix::diagonal(std::vector<double>{0.5, -0.1})}, 10, 1e-6),
               Error);
  EXPECT_THROW(solve_output_kernel(p, FwState{SymmetricMatrix(2)}, 0, 1e-6), Error);
}

TEST(SolveOutputKernel, IsDeterministic) {
  std::mt19937_64 rng(50);
  const auto p = random_problem(9, 5, 0.1, 2.0, rng);
  const auto a = solve_output_kernel(p, FwState{SymmetricMatrix(5)}, 300, 1e-10);
  const auto b = solve_output_kernel(p, FwState{SymmetricMatrix(5)}, 300, 1e-10);
  EXPECT_EQ(a.l, b.l);
  EXPECT_EQ(a.iter, b.iter);
}

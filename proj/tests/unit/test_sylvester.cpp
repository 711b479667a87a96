#include <gtest/gtest.h>

#include <random>

#include "mvkl/sylvester.hpp"
#include "test_support.hpp"

using namespace mvkl;
using mvkl::testing::random_matrix;
using mvkl::testing::random_psd;
using mvkl::testing::rel_frobenius;

namespace {

auto dense_apply(const SymmetricMatrix& k) {
  return [k](const DenseMatrix& m) { return multiply(k, m); };
}

}  // namespace

TEST(CgSylvester, IdentityOperatorHalvesY) {
  std::mt19937_64 rng(31);
  const DenseMatrix y = random_matrix(5, 3, rng);
  const auto p = make_sylvester_problem(dense_apply(SymmetricMatrix::identity(5)), SymmetricMatrix::identity(3), y, 1.0);
  const auto res = cg_sylvester_solve(p, DenseMatrix{}, 1e-12, 50);
  EXPECT_TRUE(res.report.converged);
  EXPECT_LT(rel_frobenius(res.c, 0.5 * y), 1e-14);
  EXPECT_LE(res.report.iterations, 1u);
}

TEST(CgSylvester, ScalarEquation) {
  const SymmetricMatrix k = SymmetricMatrix::identity(1, 2.0);
  const auto p = make_sylvester_problem(dense_apply(k), SymmetricMatrix::identity(1, 3.0), DenseMatrix(1, 1, 7.0), 1.0);
  const auto res = cg_sylvester_solve(p, DenseMatrix{}, 1e-12, 10);
  EXPECT_NEAR(res.c(0, 0), 1.0, 1e-15);
}

TEST(CgSylvester, MatchesEigAndDenseOracles) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 5; ++trial) {
    const SymmetricMatrix k = random_psd(8, rng);
    const SymmetricMatrix l = random_psd(3, rng);
    const DenseMatrix y = random_matrix(8, 3, rng);
    const double sigma = 0.3;
    const auto cg = cg_sylvester_solve(make_sylvester_problem(dense_apply(k), l, y, sigma), DenseMatrix{}, 1e-12, 500);
    const DenseMatrix eig = eig_sylvester_solve(k, l, y, sigma);
    const DenseMatrix dense = mvkl::testing::dense_sylvester_oracle(k, l, y, sigma);
    EXPECT_LT(rel_frobenius(cg.c, eig), 1e-8);
    EXPECT_LT(rel_frobenius(eig, dense), 1e-9);
    const DenseMatrix resid = multiply(multiply(k, eig), l) + sigma * eig - y;
    EXPECT_LE(frobenius_norm(resid), 1e-10 * frobenius_norm(y));
  }
}

TEST(EigSylvester, DiagonalFactorsSpecialize) {
  const std::vector<double> kd{1.0, 2.0, 4.0}, ld{0.5, 3.0};
  const DenseMatrix y = DenseMatrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
  const DenseMatrix c = eig_sylvester_solve(SymmetricMatrix::diagonal(kd), SymmetricMatrix::diagonal(ld), y, 0.25);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(c(i, j), y(i, j) / (kd[i] * ld[j] + 0.25), 1e-14);
  const DenseMatrix half = eig_sylvester_solve(SymmetricMatrix::identity(3), SymmetricMatrix::identity(2), y, 1.0);
  EXPECT_LT(rel_frobenius(half, 0.5 * y), 1e-15);
}

TEST(CgSylvester, ReportIsConsistentWithReturnedC) {
  std::mt19937_64 rng(33);
  const SymmetricMatrix k = random_psd(10, rng);
  const SymmetricMatrix l = random_psd(4, rng);
  const DenseMatrix y = random_matrix(10, 4, rng);
  const auto p = make_sylvester_problem(dense_apply(k), l, y, 0.05);
  for (double tol : {1e-1, 1e-4, 1e-10}) {
    const auto res = cg_sylvester_solve(p, DenseMatrix{}, tol, 1000);
    const double r = frobenius_norm(p.apply(res.c) - y);
    EXPECT_NEAR(res.report.final_residual, r, 1e-12 * std::max(1.0, r));
    EXPECT_TRUE(res.report.converged);
    EXPECT_LE(r, tol * frobenius_norm(y) * (1 + 1e-6));
  }
}

TEST(CgSylvester, BudgetExhaustionReturnsUnconverged) {
  std::mt19937_64 rng(34);
  const SymmetricMatrix k = random_psd(20, rng);
  const SymmetricMatrix l = random_psd(5, rng);
  const DenseMatrix y = random_matrix(20, 5, rng);
  const auto p = make_sylvester_problem(dense_apply(k), l, y, 1e-4);
  const auto res = cg_sylvester_solve(p, DenseMatrix{}, 1e-12, 2);
  EXPECT_FALSE(res.report.converged);
  EXPECT_EQ(res.report.iterations, 2u);
  // CG decreases the quadratic energy, which is zero at the start.
  EXPECT_LT(0.5 * frobenius_dot(res.c, p.apply(res.c)) - frobenius_dot(y, res.c), 0.0);
}

TEST(CgSylvester, RejectsBadArguments) {
  const auto p = make_sylvester_problem(dense_apply(SymmetricMatrix::identity(2)), SymmetricMatrix::identity(1),
                                        DenseMatrix(2, 1, 1.0), 1.0);
  EXPECT_THROW(cg_sylvester_solve(p, DenseMatrix{}, 0.0, 10), Error);
  EXPECT_THROW(cg_sylvester_solve(p, DenseMatrix{}, 1e-3, 0), Error);
  EXPECT_THROW(cg_sylvester_solve(p, DenseMatrix(3, 1), 1e-3, 10), Error);
  auto bad = p;
  bad.sigma = 0.0;
  EXPECT_THROW(cg_sylvester_solve(bad, DenseMatrix{}, 1e-3, 10), Error);
}

TEST(CgSylvester, ZeroTargetsGiveZero) {
  const auto p = make_sylvester_problem(dense_apply(SymmetricMatrix::identity(3)), SymmetricMatrix::identity(2),
                                        DenseMatrix(3, 2), 1.0);
  const auto res = cg_sylvester_solve(p, DenseMatrix(3, 2, 5.0), 1e-6, 10);
  EXPECT_EQ(res.c, DenseMatrix(3, 2));
  EXPECT_TRUE(res.report.converged);
}

TEST(CgSylvester, MatrixFormOperatorEqualsVecForm) {
  std::mt19937_64 rng(35);
  const SymmetricMatrix k = random_psd(6, rng);
  const SymmetricMatrix l = random_psd(3, rng);
  const DenseMatrix c = random_matrix(6, 3, rng);
  const double sigma = 0.7;
  const auto p = make_sylvester_problem(dense_apply(k), l, DenseMatrix(6, 3), sigma);
  const DenseMatrix mat = p.apply(c);
  const Eigen::MatrixXd ke = mvkl::testing::to_eigen(k), le = mvkl::testing::to_eigen(l);
  Eigen::MatrixXd big = Eigen::MatrixXd::Identity(18, 18) * sigma;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) big.block(i * 3, j * 3, 3, 3) += ke(i, j) * le;
  const Eigen::VectorXd v = big * Eigen::Map<const Eigen::VectorXd>(c.data().data(), 18);
  for (int i = 0; i < 18; ++i) EXPECT_NEAR(mat.data()[i], v(i), 1e-12 * std::max(1.0, std::abs(v(i))));
}

TEST(CgSylvester, ObserverSeesEveryIterate) {
  std::mt19937_64 rng(36);
  const SymmetricMatrix k = random_psd(6, rng);
  const auto p = make_sylvester_problem(dense_apply(k), random_psd(2, rng), random_matrix(6, 2, rng), 0.1);
  std::vector<std::size_t> seen;
  const auto res = cg_sylvester_solve(p, DenseMatrix{}, 1e-10, 100,
                                      [&](std::size_t it, const DenseMatrix&) { seen.push_back(it); });
  ASSERT_EQ(seen.size(), res.report.iterations + 1);
  for (std::size_t i = 0; i < seen.size(); ++i) EXPECT_EQ(seen[i], i);
}

TEST(CgSylvester, WeightedKernelProblem) {
  std::mt19937_64 rng(37);
  const auto inst = mvkl::testing::gaussian_instance(15, 2, {0.5, 1.5}, rng);
  const WeightedKernel wk(inst.dict, {0.6, 0.4});
  const SymmetricMatrix l = random_psd(3, rng);
  const DenseMatrix y = random_matrix(15, 3, rng);
  const auto res = cg_sylvester_solve(make_sylvester_problem(wk, l, y, 0.15), DenseMatrix{}, 1e-12, 500);
  EXPECT_LT(rel_frobenius(res.c, eig_sylvester_solve(weighted_gram(wk), l, y, 0.15)), 1e-8);
}

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

#include "mvkl/kernels.hpp"
#include "test_support.hpp"

using namespace mvkl;
using mvkl::testing::random_matrix;
using mvkl::testing::to_eigen;

TEST(GramMatrix, GaussianIdenticalRowsGiveOnes) {
  const DenseMatrix x = DenseMatrix::from_rows({{0.3, -1.0}, {0.3, -1.0}, {2.0, 5.0}});
  const auto k = gram_matrix(ScalarKernelSpec::gaussian(0.7), x);
  EXPECT_EQ(k(0, 0), 1.0);
  EXPECT_EQ(k(1, 1), 1.0);
  EXPECT_EQ(k(0, 1), 1.0);
}

TEST(GramMatrix, GaussianConvention) {
  const DenseMatrix x = DenseMatrix::from_rows({{0.0, 0.0}, {1.0, 0.0}});
  const auto k = gram_matrix(ScalarKernelSpec::gaussian(1.0), x);
  EXPECT_NEAR(k(0, 1), std::exp(-0.5), 1e-15);
  const auto k2 = gram_matrix(ScalarKernelSpec::gaussian(2.0), x);
  EXPECT_NEAR(k2(0, 1), std::exp(-1.0 / 8.0), 1e-15);
}

TEST(GramMatrix, LinearOnSubset) {
  const DenseMatrix x = DenseMatrix::from_rows({{1.0, 2.0}, {3.0, 4.0}});
  const auto k = gram_matrix(ScalarKernelSpec::linear({0}), x);
  EXPECT_EQ(k(0, 1), 3.0);
  EXPECT_EQ(evaluate_kernel(ScalarKernelSpec::linear({1}), x.row(0), x.row(1)), 8.0);
  EXPECT_EQ(evaluate_kernel(ScalarKernelSpec::linear(), x.row(0), x.row(1)), 11.0);
}

TEST(GramMatrix, Errors) {
  try {
    gram_matrix(ScalarKernelSpec::gaussian(1.0), DenseMatrix(0, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_input);
  }
  EXPECT_THROW(ScalarKernelSpec::gaussian(0.0), Error);
  EXPECT_THROW(ScalarKernelSpec::gaussian(-1.0), Error);
  EXPECT_THROW(gram_matrix(ScalarKernelSpec::linear({5}), DenseMatrix(2, 2)), Error);
  try {
    gram_matrix(ScalarKernelSpec::precomputed(SymmetricMatrix::identity(3)), DenseMatrix(4, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension_mismatch);
  }
}

TEST(GramMatrix, SymmetricPsdAndBounded) {
  std::mt19937_64 rng(21);
  const DenseMatrix x = random_matrix(15, 3, rng);
  for (const auto& spec : {ScalarKernelSpec::gaussian(0.5), ScalarKernelSpec::gaussian(3.0), ScalarKernelSpec::linear(),
                           ScalarKernelSpec::gaussian(1.0, {1, 2})}) {
    const auto k = gram_matrix(spec, x);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(k));
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8 * k.frobenius_norm());
    if (std::holds_alternative<GaussianKernel>(spec.kind)) {
      for (std::size_t i = 0; i < 15; ++i) {
        EXPECT_EQ(k(i, i), 1.0);
        for (std::size_t j = 0; j < 15; ++j) {
          EXPECT_GT(k(i, j), 0.0);
          EXPECT_LE(k(i, j), 1.0);
        }
      }
    }
  }
}

TEST(WeightedKernel, OneHotZeroAndSummationOracle) {
  std::mt19937_64 rng(22);
  const DenseMatrix x = random_matrix(6, 2, rng);
  const auto dict = KernelDictionary::build(
      {ScalarKernelSpec::gaussian(0.5), ScalarKernelSpec::gaussian(2.0), ScalarKernelSpec::linear()}, x);
  EXPECT_EQ(weighted_gram(WeightedKernel(dict, {0, 1, 0})), dict.gram(1));
  EXPECT_EQ(weighted_gram(WeightedKernel(dict, {0, 0, 0})), SymmetricMatrix(6));
  const std::vector<double> eta{0.2, 0.5, 1.3};
  const auto kw = weighted_gram(WeightedKernel(dict, eta));
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 3; ++k) s += eta[k] * evaluate_kernel(dict.spec(k), x.row(i), x.row(j));
      EXPECT_NEAR(kw(i, j), s, 1e-14);
    }
  EXPECT_THROW(WeightedKernel(dict, {1.0, 2.0}), Error);
  EXPECT_THROW(WeightedKernel(dict, {1.0, -2.0, 0.0}), Error);
}

TEST(WeightedKernel, ApplyLowRankMatchesDense) {
  std::mt19937_64 rng(23);
  const DenseMatrix x = random_matrix(20, 12, rng);
  std::vector<ScalarKernelSpec> specs{ScalarKernelSpec::linear({0, 1, 2, 3}), ScalarKernelSpec::linear({4, 5, 6, 7}),
                                      ScalarKernelSpec::linear({8, 9, 10, 11})};
  const auto dict = KernelDictionary::build(specs, x);
  ASSERT_TRUE(dict.has_low_rank());
  const auto dense = KernelDictionary::from_grams(specs, dict.grams());
  ASSERT_FALSE(dense.has_low_rank());
  const std::vector<double> eta{0.3, 0.0, 0.9};
  const DenseMatrix m = random_matrix(20, 3, rng);
  const DenseMatrix a = weighted_apply(WeightedKernel(dict, eta), m);
  const DenseMatrix b = weighted_apply(WeightedKernel(dense, eta), m);
  EXPECT_LT(mvkl::testing::rel_frobenius(a, b), 1e-10);
  EXPECT_EQ(weighted_apply(WeightedKernel(dict, eta), DenseMatrix(20, 3)), DenseMatrix(20, 3));
  const DenseMatrix id = DenseMatrix::identity(20);
  EXPECT_LT(frobenius_norm(weighted_apply(WeightedKernel(dense, {0, 1, 0}), id) - dict.gram(1).to_dense()), 1e-14);
}

TEST(WeightedKernel, ApplyIsLinearInMAndEta) {
  std::mt19937_64 rng(24);
  const auto inst = mvkl::testing::gaussian_instance(12, 2, {0.5, 1.0}, rng);
  const DenseMatrix m1 = random_matrix(12, 2, rng), m2 = random_matrix(12, 2, rng);
  const std::vector<double> e1{0.3, 0.6}, e2{1.1, 0.2}, e12{1.4, 0.8};
  const WeightedKernel w1(inst.dict, e1), w2(inst.dict, e2), w12(inst.dict, e12);
  const DenseMatrix lhs = weighted_apply(w1, 2.0 * m1 + m2);
  const DenseMatrix rhs = 2.0 * weighted_apply(w1, m1) + weighted_apply(w1, m2);
  EXPECT_LT(mvkl::testing::rel_frobenius(lhs, rhs), 1e-12);
  const DenseMatrix sum = weighted_apply(w1, m1) + weighted_apply(w2, m1);
  EXPECT_LT(mvkl::testing::rel_frobenius(weighted_apply(w12, m1), sum), 1e-12);
}

TEST(LowRankFactors, ValidatedAgainstTheGram) {
  std::mt19937_64 rng(25);
  const DenseMatrix x = random_matrix(8, 3, rng);
  auto dict = KernelDictionary::build({ScalarKernelSpec::linear()}, x);
  auto dense = KernelDictionary::from_grams({ScalarKernelSpec::linear()}, dict.grams());
  EXPECT_NO_THROW(dense.attach_low_rank_factors({x}));
  DenseMatrix bad = x;
  bad(0, 0) += 1.0;
  EXPECT_THROW(dense.attach_low_rank_factors({bad}), Error);
}

TEST(CrossGram, PredictionPathContracts) {
  std::mt19937_64 rng(26);
  const auto inst = mvkl::testing::gaussian_instance(7, 3, {0.4, 1.0, 2.5}, rng);
  const std::vector<double> eta{0.2, 0.3, 0.4};
  const WeightedKernel wk(inst.dict, eta);
  const auto at_row = cross_gram(wk, inst.x, inst.x.row(4));
  EXPECT_NEAR(at_row[4], 0.9, 1e-15);
  const auto zero = cross_gram(WeightedKernel(inst.dict, {0, 0, 0}), inst.x, inst.x.row(1));
  for (double v : zero) EXPECT_EQ(v, 0.0);
  const std::vector<double> z{0.1, -0.2, 0.3};
  const auto kz = cross_gram(wk, inst.x, z);
  for (std::size_t i = 0; i < 7; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 3; ++j) s += eta[j] * evaluate_kernel(inst.dict.spec(j), z, inst.x.row(i));
    EXPECT_NEAR(kz[i], s, 1e-15);
  }
}

TEST(CrossGram, PrecomputedKernelsCannotPredict) {
  const auto dict = KernelDictionary::from_grams({ScalarKernelSpec::precomputed(SymmetricMatrix::identity(2))},
                                                 {SymmetricMatrix::identity(2)});
  EXPECT_FALSE(dict.evaluable_at_new_points());
  try {
    cross_gram(WeightedKernel(dict, {1.0}), DenseMatrix(2, 1), std::vector<double>{0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::unsupported_prediction);
  }
}

TEST(DictionaryHelpers, MedianHeuristicAndGrid) {
  const DenseMatrix x = DenseMatrix::from_rows({{0.0}, {1.0}, {3.0}});
  // pairwise distances 1, 2, 3
  EXPECT_EQ(median_pairwise_distance(x), 2.0);
  const auto grid = default_bandwidth_grid();
  ASSERT_EQ(grid.size(), 13u);
  EXPECT_DOUBLE_EQ(grid.front(), 0.125);
  EXPECT_DOUBLE_EQ(grid[6], 1.0);
  EXPECT_DOUBLE_EQ(grid.back(), 8.0);
  const auto specs = gaussian_group_specs(x, {{0}}, grid);
  ASSERT_EQ(specs.size(), 13u);
  EXPECT_DOUBLE_EQ(std::get<GaussianKernel>(specs[6].kind).bandwidth, 2.0);
  const DenseMatrix flat(4, 1, 3.0);
  const auto fallback = gaussian_group_specs(flat, {{0}}, std::vector<double>{1.0});
  EXPECT_EQ(std::get<GaussianKernel>(fallback[0].kind).bandwidth, 1.0);
}

#pragma once

// k-fold grid search over (λ, τ) on held-out RMSE. Folds are contiguous blocks
// for time-ordered data and a seeded shuffle otherwise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "mvkl/error.hpp"
#include "mvkl/granger.hpp"
#include "mvkl/kernels.hpp"
#include "mvkl/mkl.hpp"

namespace mvkl {

/// Fold id of every row.
inline std::vector<std::size_t> fold_assignment(std::size_t rows, std::size_t folds, bool contiguous,
                                                std::uint64_t seed) {
  require(folds >= 2 && folds <= rows, ErrorKind::invalid_input, "need 2 <= folds <= rows");
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (!contiguous) {
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<std::size_t> fold(rows);
  for (std::size_t k = 0; k < rows; ++k) fold[order[k]] = k * folds / rows;
  return fold;
}

struct CvPoint {
  double lambda = 0.0;
  double tau = 0.0;
  double pooled_rmse = 0.0;
};

struct CvResult {
  std::vector<CvPoint> grid;  // λ-major order
  CvPoint best;
};

inline DenseMatrix select_rows(const DenseMatrix& x, const std::vector<std::size_t>& rows) {
  DenseMatrix out(rows.size(), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy(x.row(rows[r]).begin(), x.row(rows[r]).end(), out.row(r).begin());
  return out;
}

/// Every (λ, τ) is fitted on each training fold with `specs` rebuilt on that
/// fold and scored on the held-out fold; the score is the RMSE pooled over all
/// held-out rows. Ties keep the earlier grid point.
inline CvResult cross_validate(const DenseMatrix& x, const DenseMatrix& y, const std::vector<ScalarKernelSpec>& specs,
                               const Hyperparams& base, const std::vector<double>& lambdas,
                               const std::vector<double>& taus, std::size_t folds, bool contiguous,
                               std::size_t threads = 1) {
  require(x.rows() == y.rows(), ErrorKind::dimension_mismatch, "X and Y differ in row count");
  require(!lambdas.empty() && !taus.empty(), ErrorKind::invalid_input, "empty hyperparameter grid");
  for (const auto& s : specs)
    require(!s.is_precomputed(), ErrorKind::unsupported_prediction, "cross-validation needs kernels evaluable at new points");
  const auto fold = fold_assignment(x.rows(), folds, contiguous, base.seed);

  CvResult out;
  for (double lam : lambdas)
    for (double tau : taus) out.grid.push_back({lam, tau, 0.0});
  std::vector<std::vector<double>> se(out.grid.size(), std::vector<double>(folds, 0.0));

  detail::parallel_for(folds, threads, [&](std::size_t f) {
    std::vector<std::size_t> train, test;
    for (std::size_t r = 0; r < x.rows(); ++r) (fold[r] == f ? test : train).push_back(r);
    const DenseMatrix xtr = select_rows(x, train);
    const DenseMatrix ytr = select_rows(y, train);
    const DenseMatrix xte = select_rows(x, test);
    const DenseMatrix yte = select_rows(y, test);
    const KernelDictionary dict = KernelDictionary::build(specs, xtr);
    for (std::size_t g = 0; g < out.grid.size(); ++g) {
      Hyperparams hp = base;
      hp.lambda = out.grid[g].lambda;
      hp.tau = out.grid[g].tau;
      const ModelState st = fit(ytr, dict, hp);
      const DenseMatrix pred = predict_batch(st, dict, xtr, xte);
      const DenseMatrix err = pred - yte;
      se[g][f] = frobenius_dot(err, err);
    }
  });

  const double count = static_cast<double>(x.rows() * y.cols());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < out.grid.size(); ++g) {
    double total = 0.0;
    for (double v : se[g]) total += v;
    out.grid[g].pooled_rmse = std::sqrt(total / count);
    if (out.grid[g].pooled_rmse < best) {
      best = out.grid[g].pooled_rmse;
      out.best = out.grid[g];
    }
  }
  return out;
}

}  // namespace mvkl

#pragma once

// The C-subproblem K C L + σ C = Y, i.e. (K ⊗ L + σ I) vec(Cᵀ) = vec(Yᵀ).
//
// cg_sylvester_solve runs conjugate gradient directly on matrix variables with
// Frobenius inner products; the nl × nl operator is never formed. The
// eigendecomposition solver is the exact reference path.

#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>

#include "mvkl/error.hpp"
#include "mvkl/kernels.hpp"
#include "mvkl/matrix.hpp"
#include "mvkl/spectral.hpp"

namespace mvkl {

/// A Sylvester problem whose K factor is available only through its action M ↦ K M.
template <class KernelApply>
struct SylvesterProblem {
  KernelApply kernel_apply;
  SymmetricMatrix output_kernel;  // L, n × n PSD
  DenseMatrix targets;            // Y, l × n
  double sigma = 1.0;             // effective ridge (λ·l in the joint objective)

  /// K C L + σ C
  DenseMatrix apply(const DenseMatrix& c) const {
    DenseMatrix out = multiply(kernel_apply(c), output_kernel);
    out.add_scaled(sigma, c);
    return out;
  }
};

template <class KernelApply>
SylvesterProblem<KernelApply> make_sylvester_problem(KernelApply apply, SymmetricMatrix l, DenseMatrix y,
                                                     double sigma) {
  return {std::move(apply), std::move(l), std::move(y), sigma};
}

/// Problem whose K is a weighted kernel (kept by reference; must outlive the problem).
inline auto make_sylvester_problem(const WeightedKernel& wk, SymmetricMatrix l, DenseMatrix y, double sigma) {
  auto apply = [&wk](const DenseMatrix& m) { return weighted_apply(wk, m); };
  return SylvesterProblem<decltype(apply)>{apply, std::move(l), std::move(y), sigma};
}

struct CgReport {
  std::size_t iterations = 0;
  double final_residual = 0.0;  // ‖K C L + σ C − Y‖_F, recomputed from the returned C
  bool converged = false;
};

struct CgResult {
  DenseMatrix c;
  CgReport report;
};

struct NoCgObserver {
  void operator()(std::size_t, const DenseMatrix&) const {}
};

/// Warm-started CG. Stops once ‖residual‖_F ≤ rel_tol·‖Y‖_F or after max_iter
/// iterations; in the latter case the last iterate is returned unconverged.
/// `observe(k, C_k)` sees every iterate, starting with k = 0 for C0.
template <class KernelApply, class Observer = NoCgObserver>
CgResult cg_sylvester_solve(const SylvesterProblem<KernelApply>& p, DenseMatrix c0, double rel_tol,
                            std::size_t max_iter, Observer&& observe = {}) {
  const std::size_t l = p.targets.rows();
  const std::size_t n = p.targets.cols();
  require(rel_tol > 0.0, ErrorKind::invalid_input, "CG rel_tol must be positive");
  require(max_iter >= 1, ErrorKind::invalid_input, "CG max_iter must be at least 1");
  require(p.sigma > 0.0 && std::isfinite(p.sigma), ErrorKind::invalid_input, "Sylvester sigma must be positive");
  require(p.output_kernel.dim() == n, ErrorKind::dimension_mismatch, "output kernel does not match target columns");
  if (c0.empty()) c0 = DenseMatrix(l, n);
  require(c0.rows() == l && c0.cols() == n, ErrorKind::dimension_mismatch, "warm start has the wrong shape");
  require(all_finite(c0.data()), ErrorKind::invalid_input, "warm start must be finite");

  const double target = rel_tol * frobenius_norm(p.targets);
  if (target == 0.0) {
    // Y = 0 has the exact solution C = 0.
    observe(std::size_t{0}, c0);
    return {DenseMatrix(l, n), CgReport{0, 0.0, true}};
  }
  DenseMatrix c = std::move(c0);
  observe(std::size_t{0}, c);

  DenseMatrix r = p.targets - p.apply(c);
  double rr = frobenius_dot(r, r);
  CgReport report;
  if (std::sqrt(rr) <= target) {
    report.converged = true;
  } else {
    DenseMatrix dir = r;
    for (std::size_t k = 1; k <= max_iter; ++k) {
      const DenseMatrix ad = p.apply(dir);
      const double curvature = frobenius_dot(dir, ad);
      if (!(curvature > 0.0)) break;
      const double step = rr / curvature;
      c.add_scaled(step, dir);
      r.add_scaled(-step, ad);
      report.iterations = k;
      observe(k, c);
      const double rr_next = frobenius_dot(r, r);
      if (std::sqrt(rr_next) <= target) {
        report.converged = true;
        break;
      }
      const double beta = rr_next / rr;
      rr = rr_next;
      dir *= beta;
      dir += r;
    }
  }
  report.final_residual = frobenius_norm(p.apply(c) - p.targets);
  if (!std::isfinite(report.final_residual)) fail(ErrorKind::numerical_failure, "CG produced a non-finite iterate");
  // The recursively updated residual can drift; report what the returned C achieves.
  report.converged = report.converged && report.final_residual <= target * (1.0 + 1e-6);
  return {std::move(c), report};
}

/// Exact solve via K = T M Tᵀ, L = S N Sᵀ: C = T X Sᵀ with X_ij = (Tᵀ Y S)_ij / (μ_i ν_j + σ).
inline DenseMatrix eig_sylvester_solve(const SymmetricMatrix& k, const SymmetricMatrix& l, const DenseMatrix& y,
                                       double sigma) {
  require(sigma > 0.0, ErrorKind::invalid_input, "Sylvester sigma must be positive");
  require(k.dim() == y.rows() && l.dim() == y.cols(), ErrorKind::dimension_mismatch,
          "eig_sylvester_solve dimension mismatch");
  const auto ke = sym_eigendecomposition(k);
  const auto le = sym_eigendecomposition(l);
  DenseMatrix x = matmul(matmul_tn(ke.vectors, y), le.vectors);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) /= ke.values[i] * le.values[j] + sigma;
  return matmul(matmul(ke.vectors, x), transpose(le.vectors));
}

}  // namespace mvkl

#pragma once

// The L-subproblem: minimize g(L) = (1/l)‖A L − Y‖²_F + λ trace(Bᵀ L) over the
// spectahedron {L ⪰ 0, trace(L) ≤ τ}, with A = K_η C and B = Cᵀ A.
//
// Frank-Wolfe: the linear minimizer over the spectahedron is τ v vᵀ for the
// smallest eigenvector v of the gradient (or 0 when the gradient is PSD), and
// the step size comes from an exact line search on the quadratic g.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>

#include "mvkl/error.hpp"
#include "mvkl/matrix.hpp"
#include "mvkl/spectral.hpp"

namespace mvkl {

struct SpectahedronProblem {
  DenseMatrix a;        // l × n
  SymmetricMatrix b;    // sym(B), n × n
  DenseMatrix y;        // l × n
  double lambda = 0.0;  // ≥ 0
  std::size_t l = 1;    // sample count in the 1/l data-fit scaling
  double tau = 1.0;     // trace budget
  std::uint64_t seed = 0x5eed;  // eigensolver start vector

  /// B enters only through trace(Bᵀ L) with L symmetric, so its skew part is dropped.
  static SpectahedronProblem make(DenseMatrix a, const DenseMatrix& b, DenseMatrix y, double lambda, std::size_t l,
                                  double tau) {
    require(a.rows() == y.rows() && a.cols() == y.cols(), ErrorKind::dimension_mismatch,
            "A and Y must have the same shape");
    require(b.rows() == a.cols() && b.cols() == a.cols(), ErrorKind::dimension_mismatch, "B must be n x n");
    require(tau > 0.0, ErrorKind::invalid_input, "trace budget tau must be positive");
    require(lambda >= 0.0, ErrorKind::invalid_input, "lambda must be nonnegative");
    require(l >= 1, ErrorKind::invalid_input, "sample count must be positive");
    return {std::move(a), SymmetricMatrix::symmetrize(b), std::move(y), lambda, l, tau, 0x5eed};
  }

  std::size_t dim() const { return a.cols(); }
};

struct FwState {
  SymmetricMatrix l;
  std::size_t iter = 0;
  double objective = 0.0;
  double duality_gap = std::numeric_limits<double>::infinity();
  std::size_t eigensolver_warnings = 0;  // linear-minimizer calls whose tolerance was not met
};

namespace detail {

inline void check_dim(const SymmetricMatrix& l, const SpectahedronProblem& p) {
  require(l.dim() == p.dim(), ErrorKind::dimension_mismatch, "L does not match the problem dimension");
}

}  // namespace detail

inline double objective_g(const SymmetricMatrix& l, const SpectahedronProblem& p) {
  detail::check_dim(l, p);
  const DenseMatrix r = multiply(p.a, l) - p.y;
  return frobenius_dot(r, r) / static_cast<double>(p.l) + p.lambda * p.b.frobenius_dot(l);
}

/// Gradient of g over symmetric matrices: (1/l)[Aᵀ R + Rᵀ A] + λ sym(B), R = A L − Y.
inline SymmetricMatrix gradient_g(const SymmetricMatrix& l, const SpectahedronProblem& p) {
  detail::check_dim(l, p);
  const DenseMatrix r = multiply(p.a, l) - p.y;
  const DenseMatrix atr = matmul_tn(p.a, r);
  SymmetricMatrix g = SymmetricMatrix::symmetrize(atr);
  g *= 2.0 / static_cast<double>(p.l);
  g.add_scaled(p.lambda, p.b);
  return g;
}

struct LinearMinimizer {
  SymmetricMatrix s;  // τ v vᵀ or 0
  double min_eigenvalue = 0.0;
  bool tolerance_met = true;
};

/// argmin over the spectahedron of ⟨grad, S⟩.
inline LinearMinimizer linear_minimizer(const SymmetricMatrix& grad, double tau, double tol,
                                        std::uint64_t seed = 0x5eed) {
  require(tau > 0.0, ErrorKind::invalid_input, "trace budget tau must be positive");
  const std::size_t n = grad.dim();
  const auto ev = extremal_eigenvector(grad, tol, 4 * n + 20, seed);
  LinearMinimizer out{SymmetricMatrix(n), ev.value, ev.tolerance_met};
  if (ev.value < 0.0) out.s = SymmetricMatrix::outer(ev.vector, tau);
  return out;
}

/// argmin over α ∈ [0, 1] of g(L + α P).
inline double exact_line_search(const SymmetricMatrix& l, const SymmetricMatrix& dir, const SpectahedronProblem& p) {
  detail::check_dim(l, p);
  detail::check_dim(dir, p);
  const double inv_l = 1.0 / static_cast<double>(p.l);
  const DenseMatrix ap = multiply(p.a, dir);
  const DenseMatrix r = multiply(p.a, l) - p.y;
  // g(L + αP) = g(L) + α·slope + α²·curvature
  const double slope = 2.0 * inv_l * frobenius_dot(ap, r) + p.lambda * p.b.frobenius_dot(dir);
  const double curvature = inv_l * frobenius_dot(ap, ap);
  const double scale = inv_l * std::max(frobenius_dot(p.a, p.a), 1.0) * std::max(dir.frobenius_dot(dir), 1e-300);
  if (curvature <= 1e-14 * scale) return slope >= 0.0 ? 0.0 : 1.0;
  return std::clamp(-slope / (2.0 * curvature), 0.0, 1.0);
}

/// Feasible in the spectahedron: λ_min ≥ −1e-10·max(1, trace) and trace ≤ τ(1 + 1e-12).
inline bool in_spectahedron(const SymmetricMatrix& l, double tau) {
  const double tr = l.trace();
  return smallest_eigenvalue(l) >= -1e-10 * std::max(1.0, std::abs(tr)) && tr <= tau * (1.0 + 1e-12);
}

struct NoFwObserver {
  void operator()(const FwState&) const {}
};

/// Frank-Wolfe from a feasible L0 until the duality gap ⟨∇g, L − S⟩ drops to
/// fw_tol·max(1, |g|) or max_iter steps are taken. `observe` sees L0 and every
/// accepted iterate.
template <class Observer = NoFwObserver>
FwState solve_output_kernel(const SpectahedronProblem& p, FwState start, std::size_t max_iter, double fw_tol,
                            Observer&& observe = {}) {
  detail::check_dim(start.l, p);
  require(max_iter >= 1, ErrorKind::invalid_input, "Frank-Wolfe needs max_iter >= 1");
  require(in_spectahedron(start.l, p.tau), ErrorKind::invalid_input, "initial L is outside the spectahedron");

  FwState st = std::move(start);
  st.iter = 0;
  st.objective = objective_g(st.l, p);
  observe(st);

  double gap_estimate = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= max_iter; ++k) {
    const SymmetricMatrix grad = gradient_g(st.l, p);
    // Eigensolver precision tightens as the gap shrinks.
    const double ev_tol = std::clamp(gap_estimate / static_cast<double>(k * k), 1e-10, 1e-2);
    const LinearMinimizer lm = linear_minimizer(grad, p.tau, ev_tol, p.seed + k);
    if (!lm.tolerance_met) ++st.eigensolver_warnings;
    const double gap = grad.frobenius_dot(st.l) - grad.frobenius_dot(lm.s);
    st.duality_gap = gap;
    gap_estimate = std::max(gap, 0.0);
    if (gap <= fw_tol * std::max(1.0, std::abs(st.objective))) break;

    SymmetricMatrix dir = lm.s - st.l;
    const double alpha = exact_line_search(st.l, dir, p);
    if (alpha <= 0.0) break;
    SymmetricMatrix next = st.l;
    next.add_scaled(alpha, dir);
    const double next_objective = objective_g(next, p);
    if (next_objective > st.objective) break;  // round-off only; α = 0 is always available
    st.l = std::move(next);
    st.objective = next_objective;
    st.iter = k;
    observe(st);
  }
  return st;
}

}  // namespace mvkl

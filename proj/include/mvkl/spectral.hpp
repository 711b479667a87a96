#pragma once

// Symmetric eigensolvers: cyclic Jacobi for full decompositions and Lanczos with
// full reorthogonalization for the smallest eigenpair.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "mvkl/error.hpp"
#include "mvkl/matrix.hpp"

namespace mvkl {

struct EigenDecomposition {
  std::vector<double> values;  // ascending
  DenseMatrix vectors;         // column k pairs with values[k]
};

namespace detail {

// Flip each column so its first non-negligible component is positive.
inline void canonicalize_signs(DenseMatrix& q) {
  for (std::size_t c = 0; c < q.cols(); ++c) {
    for (std::size_t r = 0; r < q.rows(); ++r) {
      const double v = q(r, c);
      if (std::abs(v) > 1e-12) {
        if (v < 0.0)
          for (std::size_t k = 0; k < q.rows(); ++k) q(k, c) = -q(k, c);
        break;
      }
    }
  }
}

}  // namespace detail

/// Full spectral factorization A = Q Λ Qᵀ by cyclic Jacobi rotations.
inline EigenDecomposition sym_eigendecomposition(const SymmetricMatrix& a, std::size_t max_sweeps = 100) {
  const std::size_t n = a.dim();
  require(n >= 1, ErrorKind::invalid_input, "eigendecomposition of an empty matrix");
  require(all_finite(a.packed()), ErrorKind::invalid_input, "eigendecomposition needs finite entries");

  DenseMatrix m = a.to_dense();
  DenseMatrix q = DenseMatrix::identity(n);
  const double scale = std::max(a.frobenius_norm(), std::numeric_limits<double>::min());

  auto off_diagonal = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += m(i, j) * m(i, j);
    return std::sqrt(2.0 * s);
  };

  bool converged = off_diagonal() <= 1e-15 * scale;
  for (std::size_t sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t r = p + 1; r < n; ++r) {
        const double apq = m(p, r);
        if (std::abs(apq) <= std::numeric_limits<double>::min()) continue;
        const double theta = (m(r, r) - m(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double mkp = m(k, p);
          const double mkr = m(k, r);
          m(k, p) = c * mkp - s * mkr;
          m(k, r) = s * mkp + c * mkr;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double mpk = m(p, k);
          const double mrk = m(r, k);
          m(p, k) = c * mpk - s * mrk;
          m(r, k) = s * mpk + c * mrk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double qkp = q(k, p);
          const double qkr = q(k, r);
          q(k, p) = c * qkp - s * qkr;
          q(k, r) = s * qkp + c * qkr;
        }
      }
    }
    converged = off_diagonal() <= 1e-15 * scale;
  }
  if (!converged) fail(ErrorKind::numerical_failure, "Jacobi eigensolver did not converge");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return m(x, x) < m(y, y); });

  EigenDecomposition out{std::vector<double>(n), DenseMatrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = m(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = q(r, order[k]);
  }
  detail::canonicalize_signs(out.vectors);
  return out;
}

inline double smallest_eigenvalue(const SymmetricMatrix& a) { return sym_eigendecomposition(a).values.front(); }

/// Spectral norm of a PSD matrix (its largest eigenvalue).
inline double spectral_norm_psd(const SymmetricMatrix& a) { return sym_eigendecomposition(a).values.back(); }

/// PSD within a relative tolerance: λ_min ≥ −rel_tol · max(1, ‖A‖_F).
inline bool is_psd(const SymmetricMatrix& a, double rel_tol = 1e-8) {
  return smallest_eigenvalue(a) >= -rel_tol * std::max(1.0, a.frobenius_norm());
}

struct ExtremalEigenpair {
  double value = 0.0;
  std::vector<double> vector;
  double residual = 0.0;  // ‖A v − value·v‖₂ measured explicitly
  bool tolerance_met = false;
  std::size_t iterations = 0;
};

namespace detail {

// Number of eigenvalues of the symmetric tridiagonal (d, e) strictly below x.
inline std::size_t sturm_count(std::span<const double> d, std::span<const double> e, double x) {
  std::size_t count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double off = i == 0 ? 0.0 : e[i - 1] * e[i - 1];
    q = d[i] - x - (i == 0 ? 0.0 : off / q);
    if (q == 0.0) q = -std::numeric_limits<double>::epsilon() * (std::abs(x) + 1.0);
    if (q < 0.0) ++count;
  }
  return count;
}

// Smallest eigenpair of a symmetric tridiagonal: bisection on the Sturm count
// followed by three steps of inverse iteration.
inline std::pair<double, std::vector<double>> tridiagonal_smallest(std::span<const double> d,
                                                                   std::span<const double> e) {
  const std::size_t k = d.size();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    const double r = (i > 0 ? std::abs(e[i - 1]) : 0.0) + (i + 1 < k ? std::abs(e[i]) : 0.0);
    lo = std::min(lo, d[i] - r);
    hi = std::max(hi, d[i] + r);
  }
  const double span_scale = std::max({std::abs(lo), std::abs(hi), 1e-300});
  for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * span_scale; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sturm_count(d, e, mid) >= 1)
      hi = mid;
    else
      lo = mid;
  }
  const double theta = 0.5 * (lo + hi);

  // Inverse iteration on (T − θI) with partial pivoting (Gaussian elimination on a band).
  const double shift = theta - 2.0 * std::numeric_limits<double>::epsilon() * span_scale;
  std::vector<double> y(k, 1.0 / std::sqrt(static_cast<double>(k)));
  for (int pass = 0; pass < 3; ++pass) {
    // a0/a1/a2: entries of row i in columns i, i+1, i+2 once row i is eliminated.
    std::vector<double> a0(k), a1(k, 0.0), a2(k, 0.0), rhs = y;
    for (std::size_t i = 0; i < k; ++i) {
      a0[i] = d[i] - shift;
      if (i + 1 < k) a1[i] = e[i];
    }
    for (std::size_t i = 0; i + 1 < k; ++i) {
      // Row i+1 before elimination: e[i], d[i+1]-shift, e[i+1] in columns i, i+1, i+2.
      double r1_c0 = e[i];
      double r1_c1 = a0[i + 1];
      double r1_c2 = a1[i + 1];
      if (std::abs(r1_c0) > std::abs(a0[i])) {
        std::swap(a0[i], r1_c0);
        std::swap(a1[i], r1_c1);
        std::swap(a2[i], r1_c2);
        std::swap(rhs[i], rhs[i + 1]);
      }
      if (a0[i] == 0.0) a0[i] = std::numeric_limits<double>::epsilon() * span_scale;
      const double f = r1_c0 / a0[i];
      a0[i + 1] = r1_c1 - f * a1[i];
      a1[i + 1] = r1_c2 - f * a2[i];
      a2[i + 1] = 0.0;
      rhs[i + 1] -= f * rhs[i];
    }
    if (a0[k - 1] == 0.0) a0[k - 1] = std::numeric_limits<double>::epsilon() * span_scale;
    for (std::size_t ii = k; ii-- > 0;) {
      double s = rhs[ii];
      if (ii + 1 < k) s -= a1[ii] * rhs[ii + 1];
      if (ii + 2 < k) s -= a2[ii] * rhs[ii + 2];
      rhs[ii] = s / a0[ii];
    }
    const double nrm = norm2(rhs);
    if (!(nrm > 0.0) || !std::isfinite(nrm)) break;
    for (std::size_t i = 0; i < k; ++i) y[i] = rhs[i] / nrm;
  }
  return {theta, y};
}

}  // namespace detail

/// Approximate smallest eigenpair (λ_min, v) with ‖Av − λv‖₂ ≤ tol·max(1, ‖A‖_F).
///
/// Lanczos with full reorthogonalization from a seeded random start. The Krylov
/// basis is capped at min(n, 64) vectors; beyond that the method restarts from
/// the current Ritz vector. `max_iter` bounds the total number of matrix-vector
/// products. When the budget runs out the best iterate is returned with
/// `tolerance_met == false`.
inline ExtremalEigenpair extremal_eigenvector(const SymmetricMatrix& a, double tol, std::size_t max_iter,
                                              std::uint64_t seed = 0x5eed) {
  const std::size_t n = a.dim();
  require(n >= 1, ErrorKind::invalid_input, "extremal_eigenvector of an empty matrix");
  require(tol > 0.0, ErrorKind::invalid_input, "extremal_eigenvector tolerance must be positive");
  require(max_iter >= 1, ErrorKind::invalid_input, "extremal_eigenvector needs max_iter >= 1");
  require(all_finite(a.packed()), ErrorKind::invalid_input, "extremal_eigenvector needs finite entries");

  const double target = tol * std::max(1.0, a.frobenius_norm());
  ExtremalEigenpair best;
  best.residual = std::numeric_limits<double>::infinity();

  auto measure = [&](std::vector<double> x, std::size_t iters) {
    const double nrm = norm2(x);
    for (double& v : x) v /= nrm;
    auto ax = matvec(a, x);
    const double rq = dot(x, ax);
    for (std::size_t i = 0; i < n; ++i) ax[i] -= rq * x[i];
    ExtremalEigenpair p{rq, std::move(x), norm2(ax), false, iters};
    p.tolerance_met = p.residual <= target;
    return p;
  };

  if (n == 1) {
    ExtremalEigenpair p{a(0, 0), {1.0}, 0.0, true, 1};
    return p;
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<double> start(n);
  for (double& v : start) v = uni(rng);

  const std::size_t basis_cap = std::min<std::size_t>(n, 64);
  std::size_t used = 0;
  while (used < max_iter) {
    std::vector<std::vector<double>> basis;
    std::vector<double> alpha, beta;
    {
      const double nrm = norm2(start);
      for (double& v : start) v /= nrm;
      basis.push_back(start);
    }
    std::vector<double> ritz;
    bool exhausted = false;
    while (used < max_iter) {
      const auto& qk = basis.back();
      auto w = matvec(a, qk);
      ++used;
      const double ak = dot(qk, w);
      alpha.push_back(ak);
      for (std::size_t i = 0; i < n; ++i) {
        w[i] -= ak * qk[i];
        if (basis.size() > 1) w[i] -= beta.back() * basis[basis.size() - 2][i];
      }
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& qj : basis) {
          const double c = dot(qj, w);
          for (std::size_t i = 0; i < n; ++i) w[i] -= c * qj[i];
        }
      const double bk = norm2(w);

      auto y = detail::tridiagonal_smallest(alpha, beta).second;
      const std::size_t k = alpha.size();
      ritz.assign(n, 0.0);
      for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < n; ++i) ritz[i] += y[j] * basis[j][i];

      const double estimate = bk * std::abs(y.back());
      const bool breakdown = bk <= 1e-13 * std::max(1.0, std::abs(ak));
      if (estimate <= 0.5 * target || breakdown || k == basis_cap) {
        auto cand = measure(ritz, used);
        if (cand.residual < best.residual) best = cand;
        if (best.tolerance_met) return best;
        // An invariant subspace reached from a random start already contains every
        // distinct eigenvalue, so a breakdown ends the search.
        if (breakdown || k == n) {
          exhausted = true;
          break;
        }
        if (k == basis_cap) break;
      }
      beta.push_back(bk);
      std::vector<double> next(n);
      for (std::size_t i = 0; i < n; ++i) next[i] = w[i] / bk;
      basis.push_back(std::move(next));
    }
    if (exhausted) break;
    if (!ritz.empty()) start = ritz;
  }
  if (best.vector.empty()) {
    best = measure(start, used);
  }
  best.iterations = used;
  return best;
}

}  // namespace mvkl

#pragma once

// Built-in oracle-equivalence checks behind `mvkl selftest`. Every check is
// seeded and prints values at fixed precision, so the report is reproducible.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "mvkl/bounds.hpp"
#include "mvkl/kernels.hpp"
#include "mvkl/matrix.hpp"
#include "mvkl/mkl.hpp"
#include "mvkl/output_kernel.hpp"
#include "mvkl/sylvester.hpp"

namespace mvkl::selftest {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline DenseMatrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  DenseMatrix m(r, c);
  for (double& v : m.data()) v = nd(rng);
  return m;
}

inline SymmetricMatrix random_psd(std::size_t n, std::mt19937_64& rng) {
  const DenseMatrix a = random_matrix(n, n, rng);
  SymmetricMatrix s = SymmetricMatrix::symmetrize(matmul(a, transpose(a)));
  s *= 1.0 / static_cast<double>(n);
  return s;
}

/// η by bisection on the multiplier ν of Σ η^q = 1, using the scalar
/// stationarity condition α²/η² = ν q η^{q−1}.
inline std::vector<double> eta_by_multiplier_bisection(const std::vector<double>& alpha, double q) {
  auto eta_at = [&](double log_nu) {
    std::vector<double> e(alpha.size());
    for (std::size_t j = 0; j < alpha.size(); ++j)
      e[j] = alpha[j] > 0.0 ? std::exp((2.0 * std::log(alpha[j]) - log_nu - std::log(q)) / (q + 1.0)) : 0.0;
    return e;
  };
  auto excess = [&](double log_nu) {
    double s = 0.0;
    for (double e : eta_at(log_nu)) s += std::pow(e, q);
    return s - 1.0;
  };
  double lo = -200.0, hi = 200.0;  // excess is decreasing in ν
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  return eta_at(0.5 * (lo + hi));
}

}  // namespace detail

/// CG on the Sylvester system versus the eigendecomposition solver.
inline CheckResult check_cg_vs_eig(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int inst = 0; inst < 5; ++inst) {
    const std::size_t l = 25, n = 4;
    const DenseMatrix x = detail::random_matrix(l, 3, rng);
    std::vector<ScalarKernelSpec> specs{ScalarKernelSpec::gaussian(0.7), ScalarKernelSpec::gaussian(1.5),
                                        ScalarKernelSpec::linear()};
    const auto dict = KernelDictionary::build(specs, x);
    const WeightedKernel wk(dict, {0.5, 0.3, 0.2});
    const SymmetricMatrix lk = detail::random_psd(n, rng);
    const DenseMatrix y = detail::random_matrix(l, n, rng);
    const double sigma = 0.01 * static_cast<double>(l);
    const auto prob = make_sylvester_problem(wk, lk, y, sigma);
    const auto cg = cg_sylvester_solve(prob, DenseMatrix{}, 1e-12, 2000);
    const DenseMatrix ref = eig_sylvester_solve(weighted_gram(wk), lk, y, sigma);
    worst = std::max(worst, frobenius_norm(cg.c - ref) / frobenius_norm(ref));
  }
  return {"cg_vs_eigendecomposition", worst <= 1e-8, "max relative error " + detail::fmt("%.3e", worst)};
}

/// Closed-form η updates versus multiplier bisection (finite q) and the box
/// solution (p = 2).
inline CheckResult check_eta_vs_numeric(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(0.05, 3.0);
  double worst = 0.0;
  for (double p : {1.0, 1.25, 1.5, 1.7, 2.0}) {
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> alpha(6);
      for (double& a : alpha) a = ud(rng);
      const auto eta = eta_update_lp(alpha, p).eta;
      const double q = lp_conjugate_exponent(p);
      const std::vector<double> ref =
          std::isinf(q) ? std::vector<double>(alpha.size(), 1.0) : detail::eta_by_multiplier_bisection(alpha, q);
      for (std::size_t j = 0; j < eta.size(); ++j) worst = std::max(worst, std::abs(eta[j] - ref[j]));
    }
  }
  return {"eta_vs_numeric_minimizer", worst <= 1e-9, "max abs error " + detail::fmt("%.3e", worst)};
}

/// Exact line search versus a dense grid on [0, 1].
inline CheckResult check_line_search_vs_grid(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t l = 12, n = 4;
    const DenseMatrix a = detail::random_matrix(l, n, rng);
    const DenseMatrix b = matmul_tn(detail::random_matrix(l, n, rng), a);
    const DenseMatrix y = detail::random_matrix(l, n, rng);
    const auto prob = SpectahedronProblem::make(a, b, y, 0.1, l, 2.0);
    const SymmetricMatrix l0 = SymmetricMatrix::identity(n, 0.5);
    std::vector<double> v(n);
    std::normal_distribution<double> nd;
    for (double& e : v) e = nd(rng);
    const double nv = norm2(v);
    for (double& e : v) e /= nv;
    SymmetricMatrix dir = SymmetricMatrix::outer(v, 2.0) - l0;
    const double alpha = exact_line_search(l0, dir, prob);
    auto g_at = [&](double t) {
      SymmetricMatrix m = l0;
      m.add_scaled(t, dir);
      return objective_g(m, prob);
    };
    double best = g_at(0.0);
    for (int k = 1; k <= 20000; ++k) best = std::min(best, g_at(k / 20000.0));
    // The grid can only do as well as the exact step, up to round-off.
    worst = std::max(worst, (g_at(alpha) - best) / std::max(1.0, std::abs(best)));
  }
  return {"line_search_vs_grid", worst <= 1e-12, "max objective excess " + detail::fmt("%.3e", std::max(worst, 0.0))};
}

/// Gradient of the L-subproblem versus central differences.
inline CheckResult check_gradient_fd(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t l = 10, n = 3;
    const DenseMatrix a = detail::random_matrix(l, n, rng);
    const DenseMatrix b = detail::random_matrix(n, n, rng);
    const DenseMatrix y = detail::random_matrix(l, n, rng);
    const auto prob = SpectahedronProblem::make(a, b, y, 0.3, l, 1.0);
    const SymmetricMatrix lk = detail::random_psd(n, rng);
    const SymmetricMatrix grad = gradient_g(lk, prob);
    const SymmetricMatrix dir = detail::random_psd(n, rng) - detail::random_psd(n, rng);
    const double h = 1e-6;
    SymmetricMatrix lp = lk, lm = lk;
    lp.add_scaled(h, dir);
    lm.add_scaled(-h, dir);
    const double fd = (objective_g(lp, prob) - objective_g(lm, prob)) / (2.0 * h);
    const double an = grad.frobenius_dot(dir);
    worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(an)));
  }
  return {"gradient_vs_finite_difference", worst <= 1e-6, "max relative error " + detail::fmt("%.3e", worst)};
}

/// Closed-form bound values that have exact answers.
inline CheckResult check_bounds() {
  BoundInputs unit;
  const double c = rademacher_bound(unit);
  BoundInputs a_in{1.0, 2, 1.0, 4.0, 16, 1.5, {}};
  const double a = bound_part_a(a_in);
  const double err = std::max(std::abs(c - std::sqrt(23.0 / 22.0)), std::abs(a - 1.0));
  return {"rademacher_closed_forms", err <= 1e-12, "max abs error " + detail::fmt("%.3e", err)};
}

inline std::vector<CheckResult> run_all(std::uint64_t seed = 0) {
  return {check_cg_vs_eig(seed + 1), check_eta_vs_numeric(seed + 2), check_line_search_vs_grid(seed + 3),
          check_gradient_fd(seed + 4), check_bounds()};
}

}  // namespace mvkl::selftest

#pragma once

// Shared fixtures and independent oracles for the test suites. Dense linear
// algebra goes through Eigen so no check depends on the library's own kernels.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "mvkl/kernels.hpp"
#include "mvkl/matrix.hpp"

namespace mvkl::testing {

inline Eigen::MatrixXd to_eigen(const DenseMatrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

inline Eigen::MatrixXd to_eigen(const SymmetricMatrix& s) { return to_eigen(s.to_dense()); }

inline DenseMatrix from_eigen(const Eigen::MatrixXd& e) {
  DenseMatrix m(e.rows(), e.cols());
  for (Eigen::Index i = 0; i < e.rows(); ++i)
    for (Eigen::Index j = 0; j < e.cols(); ++j) m(i, j) = e(i, j);
  return m;
}

inline DenseMatrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  DenseMatrix m(r, c);
  for (double& v : m.data()) v = nd(rng);
  return m;
}

/// A Aᵀ / n for Gaussian A: PSD with well-spread eigenvalues.
inline SymmetricMatrix random_psd(std::size_t n, std::mt19937_64& rng, std::size_t rank = 0) {
  const DenseMatrix a = random_matrix(n, rank ? rank : n, rng);
  SymmetricMatrix s = SymmetricMatrix::symmetrize(matmul(a, transpose(a)));
  s *= 1.0 / static_cast<double>(n);
  return s;
}

inline SymmetricMatrix random_symmetric(std::size_t n, std::mt19937_64& rng) {
  return SymmetricMatrix::symmetrize(random_matrix(n, n, rng));
}

/// Random point of the spectahedron of budget τ with trace τ·fill.
inline SymmetricMatrix random_spectahedron_point(std::size_t n, double tau, std::mt19937_64& rng, double fill = 0.7) {
  SymmetricMatrix s = random_psd(n, rng);
  s *= tau * fill / s.trace();
  return s;
}

inline double rel_frobenius(const DenseMatrix& a, const DenseMatrix& b) {
  return frobenius_norm(a - b) / std::max(frobenius_norm(b), 1e-300);
}

/// Solves (K ⊗ L + σI) vec(C) = vec(Y) with the row-major vec, through a dense LU.
inline DenseMatrix dense_sylvester_oracle(const SymmetricMatrix& k, const SymmetricMatrix& l, const DenseMatrix& y,
                                          double sigma) {
  const Eigen::MatrixXd ke = to_eigen(k);
  const Eigen::MatrixXd le = to_eigen(l);
  const Eigen::Index nl = static_cast<Eigen::Index>(y.size());
  const Eigen::Index n = le.rows();
  Eigen::MatrixXd big = Eigen::MatrixXd::Identity(nl, nl) * sigma;
  for (Eigen::Index i = 0; i < ke.rows(); ++i)
    for (Eigen::Index j = 0; j < ke.cols(); ++j) big.block(i * n, j * n, n, n) += ke(i, j) * le;
  Eigen::VectorXd rhs(nl);
  for (Eigen::Index i = 0; i < nl; ++i) rhs(i) = y.data()[static_cast<std::size_t>(i)];
  const Eigen::VectorXd sol = big.partialPivLu().solve(rhs);
  DenseMatrix c(y.rows(), y.cols());
  for (Eigen::Index i = 0; i < nl; ++i) c.data()[static_cast<std::size_t>(i)] = sol(i);
  return c;
}

/// Gaussian features and a Gaussian-kernel dictionary over several bandwidths.
struct GaussianInstance {
  DenseMatrix x;
  KernelDictionary dict;
};

inline GaussianInstance gaussian_instance(std::size_t l, std::size_t d, const std::vector<double>& bandwidths,
                                          std::mt19937_64& rng) {
  GaussianInstance g{random_matrix(l, d, rng), {}};
  std::vector<ScalarKernelSpec> specs;
  for (double h : bandwidths) specs.push_back(ScalarKernelSpec::gaussian(h));
  g.dict = KernelDictionary::build(specs, g.x);
  return g;
}

// ---------------------------------------------------------------------------
// η oracle: projected gradient on Σ α²/η over {η ≥ 0, Σ η^q ≤ 1}.
//
// With u = η^q the feasible set becomes the simplex and the objective
// Σ α_j² u_j^{−1/q} is convex; we run projected gradient with Armijo
// backtracking in u. For q = ∞ the set is the box [0, 1]^m, handled directly.

inline std::vector<double> project_simplex(std::vector<double> v) {
  // Euclidean projection onto {u ≥ 0, Σ u = 1}.
  std::vector<double> s = v;
  std::sort(s.begin(), s.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    cum += s[k];
    const double t = (cum - 1.0) / static_cast<double>(k + 1);
    if (s[k] - t > 0.0) theta = t;
  }
  for (double& x : v) x = std::max(x - theta, 0.0);
  return v;
}

inline std::vector<double> numeric_eta_oracle(const std::vector<double>& alpha, double q, int max_iter = 200000) {
  const std::size_t m = alpha.size();
  std::vector<double> eta(m, 0.0);
  if (std::isinf(q)) {
    // Box [0, 1]^m: projected gradient with step doubling and Armijo backtracking.
    std::vector<double> e(m, 0.5);
    auto f = [&](const std::vector<double>& ee) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j)
        if (alpha[j] > 0.0) s += alpha[j] * alpha[j] / ee[j];
      return s;
    };
    double fe = f(e), step = 1.0;
    for (int it = 0; it < max_iter; ++it) {
      std::vector<double> g(m, 0.0);
      for (std::size_t j = 0; j < m; ++j)
        if (alpha[j] > 0.0) g[j] = -alpha[j] * alpha[j] / (e[j] * e[j]);
      step = std::min(step * 2.0, 1e12);
      bool moved = false;
      for (int bt = 0; bt < 80; ++bt) {
        std::vector<double> trial(m);
        double decrease = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          trial[j] = std::clamp(e[j] - step * g[j], 1e-300, 1.0);
          decrease += g[j] * (e[j] - trial[j]);
        }
        const double ft = f(trial);
        if (ft <= fe - 1e-4 * decrease) {
          double move = 0.0;
          for (std::size_t j = 0; j < m; ++j) move = std::max(move, std::abs(trial[j] - e[j]));
          e = std::move(trial);
          fe = ft;
          moved = move > 1e-16;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    for (std::size_t j = 0; j < m; ++j) eta[j] = alpha[j] > 0.0 ? e[j] : 0.0;
    return eta;
  }
  // Components with α = 0 contribute nothing and take η = 0.
  std::vector<std::size_t> act;
  for (std::size_t j = 0; j < m; ++j)
    if (alpha[j] > 0.0) act.push_back(j);
  std::vector<double> u(act.size(), 1.0 / static_cast<double>(act.size()));
  auto f = [&](const std::vector<double>& uu) {
    double s = 0.0;
    for (std::size_t k = 0; k < act.size(); ++k) {
      if (uu[k] <= 0.0) return std::numeric_limits<double>::infinity();
      s += alpha[act[k]] * alpha[act[k]] * std::pow(uu[k], -1.0 / q);
    }
    return s;
  };
  double fu = f(u);
  double step = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    std::vector<double> g(act.size());
    for (std::size_t k = 0; k < act.size(); ++k)
      g[k] = -alpha[act[k]] * alpha[act[k]] / q * std::pow(u[k], -1.0 / q - 1.0);
    bool moved = false;
    step = std::min(step * 2.0, 1e6);
    for (int bt = 0; bt < 80; ++bt) {
      std::vector<double> trial(u.size());
      for (std::size_t k = 0; k < u.size(); ++k) trial[k] = u[k] - step * g[k];
      trial = project_simplex(trial);
      double decrease = 0.0;
      for (std::size_t k = 0; k < u.size(); ++k) decrease += g[k] * (u[k] - trial[k]);
      const double ft = f(trial);
      if (ft <= fu - 1e-4 * decrease) {
        double move = 0.0;
        for (std::size_t k = 0; k < u.size(); ++k) move = std::max(move, std::abs(trial[k] - u[k]));
        u = std::move(trial);
        fu = ft;
        moved = move > 1e-16;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  for (std::size_t k = 0; k < act.size(); ++k) eta[act[k]] = std::pow(u[k], 1.0 / q);
  return eta;
}

}  // namespace mvkl::testing

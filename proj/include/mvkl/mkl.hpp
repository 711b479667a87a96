#pragma once

// Joint learning of C, the kernel weights η and the output kernel L by block
// coordinate descent on
//
//   F(C, η, L) = (1/l)‖K_η C L − Y‖²_F + λ trace(Cᵀ K_η C L) + ω(η),
//
// with L in the trace-bounded spectahedron. ω is the indicator of
// {η ≥ 0, Σ η^q ≤ 1} for the squared ℓp regularizer (q = p/(2−p)), and the
// variational penalty whose minimizer is η = α/(1 − μ + μα) for the elastic net.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mvkl/error.hpp"
#include "mvkl/kernels.hpp"
#include "mvkl/matrix.hpp"
#include "mvkl/output_kernel.hpp"
#include "mvkl/sylvester.hpp"

namespace mvkl {

/// Ω(f) = ‖f‖²_{ℓp}, p ∈ [1, 2].
struct LpSquared {
  double p = 1.0;
};

/// Elastic-net weights η_j = α_j / (1 − μ + μ α_j), μ ∈ [0, 1].
struct ElasticNet {
  double mu = 0.5;
};

using Regularizer = std::variant<LpSquared, ElasticNet>;

/// q = p / (2 − p); +∞ for p = 2.
inline double lp_conjugate_exponent(double p) {
  require(p >= 1.0 && p <= 2.0, ErrorKind::invalid_input, "p must lie in [1, 2]");
  if (p == 2.0) return std::numeric_limits<double>::infinity();
  return p / (2.0 - p);
}

struct Hyperparams {
  double lambda = 1e-3;
  double tau = 1.0;
  Regularizer regularizer = LpSquared{1.0};
  double cg_rel_tol = 1e-2;
  std::size_t cg_max_iter = 1000;
  double fw_tol = 1e-6;
  std::size_t fw_max_iter = 1000;
  std::size_t outer_max_iter = 50;
  double outer_rel_tol = 1e-6;
  std::uint64_t seed = 0;

  void validate() const {
    require(lambda > 0.0 && std::isfinite(lambda), ErrorKind::invalid_input, "lambda must be positive");
    require(tau > 0.0 && std::isfinite(tau), ErrorKind::invalid_input, "tau must be positive");
    if (const auto* lp = std::get_if<LpSquared>(&regularizer)) lp_conjugate_exponent(lp->p);
    if (const auto* en = std::get_if<ElasticNet>(&regularizer))
      require(en->mu >= 0.0 && en->mu <= 1.0, ErrorKind::invalid_input, "mu must lie in [0, 1]");
    require(cg_rel_tol > 0.0 && fw_tol >= 0.0 && outer_rel_tol >= 0.0, ErrorKind::invalid_input,
            "tolerances must be positive");
    require(cg_max_iter >= 1 && fw_max_iter >= 1 && outer_max_iter >= 1, ErrorKind::invalid_input,
            "iteration caps must be at least 1");
  }
};

enum class BlockTag { init, c, eta, l };

inline std::string_view to_string(BlockTag tag) {
  switch (tag) {
    case BlockTag::init: return "init";
    case BlockTag::c: return "C";
    case BlockTag::eta: return "eta";
    case BlockTag::l: return "L";
  }
  return "?";
}

struct TraceEntry {
  std::size_t outer_iter = 0;
  BlockTag block = BlockTag::init;
  double objective = 0.0;
  double elapsed_ms = 0.0;
};

struct ModelState {
  DenseMatrix c;
  SymmetricMatrix l;
  std::vector<double> eta;
  std::vector<TraceEntry> objective_trace;
  bool converged = false;
  bool dead_model = false;
  std::size_t outer_iterations = 0;
  std::string diagnostic;

  double objective() const { return objective_trace.empty() ? std::numeric_limits<double>::quiet_NaN() : objective_trace.back().objective; }
};

// ---------------------------------------------------------------------------
// η block

/// α_j = η̂_j √trace(Cᵀ K_j C L), the RKHS norm of component j.
inline std::vector<double> component_alphas(const DenseMatrix& c, const SymmetricMatrix& l,
                                            const KernelDictionary& dict, std::span<const double> eta_prev) {
  require(eta_prev.size() == dict.size(), ErrorKind::invalid_input, "eta length does not match the dictionary");
  require(c.rows() == dict.sample_count() && c.cols() == l.dim(), ErrorKind::dimension_mismatch,
          "component_alphas dimension mismatch");
  const DenseMatrix cl = multiply(c, l);
  std::vector<double> alpha(dict.size(), 0.0);
  for (std::size_t j = 0; j < dict.size(); ++j) {
    require(eta_prev[j] >= 0.0, ErrorKind::invalid_input, "kernel weights must be nonnegative");
    if (eta_prev[j] == 0.0) continue;
    const double t = frobenius_dot(dict.apply(j, c), cl);
    alpha[j] = eta_prev[j] * std::sqrt(std::max(0.0, t));
  }
  return alpha;
}

struct EtaUpdate {
  std::vector<double> eta;
  bool dead_model = false;  // every α was zero
};

/// Minimizer of Σ α_j²/η_j over {η ≥ 0, Σ η^q ≤ 1}:
/// η_j = α_j^{2/(q+1)} / (Σ_k α_k^{2q/(q+1)})^{1/q}; for p = 2, η_j = 1 wherever α_j > 0.
inline EtaUpdate eta_update_lp(std::span<const double> alpha, double p) {
  const double q = lp_conjugate_exponent(p);
  EtaUpdate out{std::vector<double>(alpha.size(), 0.0), false};
  for (double a : alpha) require(a >= 0.0 && std::isfinite(a), ErrorKind::invalid_input, "alpha must be finite and >= 0");
  if (std::all_of(alpha.begin(), alpha.end(), [](double a) { return a == 0.0; })) {
    out.dead_model = true;
    return out;
  }
  if (std::isinf(q)) {
    for (std::size_t j = 0; j < alpha.size(); ++j) out.eta[j] = alpha[j] > 0.0 ? 1.0 : 0.0;
    return out;
  }
  // Scale-free: divide by max α first to keep the powers in range.
  const double amax = *std::max_element(alpha.begin(), alpha.end());
  double denom = 0.0;
  for (double a : alpha)
    if (a > 0.0) denom += std::pow(a / amax, 2.0 * q / (q + 1.0));
  denom = std::pow(denom, 1.0 / q);
  for (std::size_t j = 0; j < alpha.size(); ++j)
    if (alpha[j] > 0.0) out.eta[j] = std::pow(alpha[j] / amax, 2.0 / (q + 1.0)) / denom;
  return out;
}

/// η_j = α_j / (1 − μ + μ α_j), with η_j = 0 wherever α_j = 0.
inline EtaUpdate eta_update_elastic(std::span<const double> alpha, double mu) {
  require(mu >= 0.0 && mu <= 1.0, ErrorKind::invalid_input, "mu must lie in [0, 1]");
  EtaUpdate out{std::vector<double>(alpha.size(), 0.0), false};
  bool any = false;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    const double a = alpha[j];
    require(a >= 0.0 && std::isfinite(a), ErrorKind::invalid_input, "alpha must be finite and >= 0");
    if (a == 0.0) continue;
    any = true;
    out.eta[j] = a / (1.0 - mu + mu * a);
  }
  out.dead_model = !any;
  return out;
}

inline EtaUpdate eta_update(const Regularizer& reg, std::span<const double> alpha) {
  if (const auto* lp = std::get_if<LpSquared>(&reg)) return eta_update_lp(alpha, lp->p);
  return eta_update_elastic(alpha, std::get<ElasticNet>(reg).mu);
}

/// ω(η): 0 or +∞ for squared ℓp; Σ (1−μ)² η_j / (1 − μ η_j) for the elastic net.
inline double regularizer_penalty(const Regularizer& reg, std::span<const double> eta) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (double e : eta)
    if (!(e >= 0.0) || !std::isfinite(e)) return inf;
  if (const auto* lp = std::get_if<LpSquared>(&reg)) {
    const double q = lp_conjugate_exponent(lp->p);
    if (std::isinf(q)) {
      for (double e : eta)
        if (e > 1.0 + 1e-10) return inf;
      return 0.0;
    }
    double s = 0.0;
    for (double e : eta) s += std::pow(e, q);
    return s <= 1.0 + 1e-10 ? 0.0 : inf;
  }
  const double mu = std::get<ElasticNet>(reg).mu;
  double s = 0.0;
  for (double e : eta) {
    if (mu == 1.0) {
      if (e > 1.0 + 1e-10) return inf;
      continue;
    }
    if (mu * e >= 1.0) return inf;
    s += (1.0 - mu) * (1.0 - mu) * e / (1.0 - mu * e);
  }
  return s;
}

/// Feasible initial weights: η_j = m^{−1/q} for squared ℓp (1 for p = 2), 1/m for the elastic net.
inline std::vector<double> initial_eta(const Regularizer& reg, std::size_t m) {
  double v = 1.0 / static_cast<double>(m);
  if (const auto* lp = std::get_if<LpSquared>(&reg)) {
    const double q = lp_conjugate_exponent(lp->p);
    v = std::isinf(q) ? 1.0 : std::pow(static_cast<double>(m), -1.0 / q);
  }
  return std::vector<double>(m, v);
}

// ---------------------------------------------------------------------------
// objective

/// F(C, η, L); +∞ when η lies outside the regularizer's domain.
inline double objective_value(const DenseMatrix& c, const SymmetricMatrix& l, std::span<const double> eta,
                              const DenseMatrix& y, const KernelDictionary& dict, double lambda,
                              const Regularizer& reg) {
  require(y.rows() == dict.sample_count() && c.rows() == y.rows() && c.cols() == y.cols() && l.dim() == y.cols(),
          ErrorKind::dimension_mismatch, "objective_value dimension mismatch");
  const double omega = regularizer_penalty(reg, eta);
  if (std::isinf(omega)) return omega;
  const WeightedKernel wk(dict, {eta.begin(), eta.end()});
  const DenseMatrix a = weighted_apply(wk, c);  // K_η C
  const DenseMatrix al = multiply(a, l);
  const DenseMatrix cl = multiply(c, l);
  const DenseMatrix r = al - y;
  return frobenius_dot(r, r) / static_cast<double>(y.rows()) + lambda * frobenius_dot(a, cl) + omega;
}

inline double objective_value(const ModelState& s, const DenseMatrix& y, const KernelDictionary& dict,
                              const Hyperparams& hp) {
  return objective_value(s.c, s.l, s.eta, y, dict, hp.lambda, hp.regularizer);
}

// ---------------------------------------------------------------------------
// block coordinate descent

struct FitOptions {
  bool update_c = true;
  bool update_eta = true;
  bool update_l = true;
  std::array<BlockTag, 3> order{BlockTag::c, BlockTag::eta, BlockTag::l};
  std::optional<DenseMatrix> initial_c;
  std::optional<std::vector<double>> initial_eta;
  std::optional<SymmetricMatrix> initial_l;
};

/// Drives the three block updates. Every accepted block leaves F no larger than before:
///  - C: warm-started CG on K_η C L + λl C = Y. If the inexact solution raises F the
///    solve is repeated at tighter tolerances; the exact solution minimizes F in C.
///  - η: closed-form weights for the current component norms, followed by a C solve
///    under the new weights. The pair is kept only if F does not increase, which the
///    exact C solve guarantees because the component functions stay representable.
///  - L: Frank-Wolfe over the spectahedron with exact line search.
class BlockCoordinateDescent {
 public:
  BlockCoordinateDescent(const DenseMatrix& y, const KernelDictionary& dict, Hyperparams hp, FitOptions opts = {})
      : y_(y), dict_(dict), hp_(std::move(hp)), opts_(std::move(opts)), start_(std::chrono::steady_clock::now()) {
    hp_.validate();
    require(y_.rows() >= 1 && y_.cols() >= 1, ErrorKind::invalid_input, "targets must be non-empty");
    require(all_finite(y_.data()), ErrorKind::invalid_input, "targets must be finite");
    require(dict_.size() >= 1, ErrorKind::invalid_input, "dictionary is empty");
    require(dict_.sample_count() == y_.rows(), ErrorKind::dimension_mismatch,
            "dictionary built on " + std::to_string(dict_.sample_count()) + " samples, targets have " +
                std::to_string(y_.rows()));
    const std::size_t l = y_.rows();
    const std::size_t n = y_.cols();
    state_.c = opts_.initial_c.value_or(DenseMatrix(l, n));
    require(state_.c.rows() == l && state_.c.cols() == n, ErrorKind::dimension_mismatch, "initial C has the wrong shape");
    state_.eta = opts_.initial_eta.value_or(initial_eta(hp_.regularizer, dict_.size()));
    require(state_.eta.size() == dict_.size(), ErrorKind::invalid_input, "initial eta has the wrong length");
    state_.l = opts_.initial_l.value_or(SymmetricMatrix::identity(n, hp_.tau / static_cast<double>(n)));
    require(state_.l.dim() == n, ErrorKind::dimension_mismatch, "initial L has the wrong dimension");
    require(in_spectahedron(state_.l, hp_.tau), ErrorKind::invalid_input, "initial L is outside the spectahedron");
    objective_ = evaluate(state_.c, state_.eta, state_.l);
    require(std::isfinite(objective_), ErrorKind::invalid_input, "initial kernel weights are infeasible");
    record(BlockTag::init);
  }

  const ModelState& state() const noexcept { return state_; }
  double objective() const noexcept { return objective_; }
  const CgReport& last_cg_report() const noexcept { return last_cg_; }
  std::size_t outer_iteration() const noexcept { return outer_; }

  double step_c() {
    DenseMatrix c = solve_descending(state_.eta, state_.c, objective_);
    if (!c.empty()) {
      state_.c = std::move(c);
      objective_ = pending_objective_;
    }
    record(BlockTag::c);
    return objective_;
  }

  double step_eta() {
    const auto alpha = component_alphas(state_.c, state_.l, dict_, state_.eta);
    EtaUpdate upd = eta_update(hp_.regularizer, alpha);
    if (upd.dead_model) {
      // Every K_j C L vanishes, so dropping all weights leaves F unchanged.
      state_.eta = std::move(upd.eta);
      state_.dead_model = true;
      state_.diagnostic = "dead model: every component norm is zero";
      return objective_;
    }
    if (upd.eta != state_.eta) {
      if (opts_.update_c) {
        DenseMatrix c = solve_descending(upd.eta, state_.c, objective_);
        if (!c.empty()) {
          state_.c = std::move(c);
          state_.eta = std::move(upd.eta);
          objective_ = pending_objective_;
        }
      } else {
        const double f = evaluate(state_.c, upd.eta, state_.l);
        if (f <= objective_) {
          state_.eta = std::move(upd.eta);
          objective_ = f;
        }
      }
    }
    record(BlockTag::eta);
    return objective_;
  }

  double step_l() {
    const WeightedKernel wk(dict_, state_.eta);
    DenseMatrix a = weighted_apply(wk, state_.c);
    const DenseMatrix b = matmul_tn(state_.c, a);
    auto prob = SpectahedronProblem::make(std::move(a), b, y_, hp_.lambda, y_.rows(), hp_.tau);
    prob.seed = hp_.seed;
    FwState st = solve_output_kernel(prob, FwState{state_.l}, hp_.fw_max_iter, hp_.fw_tol);
    const double f = evaluate(state_.c, state_.eta, st.l);
    if (f <= objective_) {
      state_.l = std::move(st.l);
      objective_ = f;
    }
    record(BlockTag::l);
    return objective_;
  }

  /// One outer iteration in the configured block order; false once the model is dead.
  bool sweep() {
    ++outer_;
    for (BlockTag tag : opts_.order) {
      if (tag == BlockTag::c && opts_.update_c) step_c();
      if (tag == BlockTag::eta && opts_.update_eta) step_eta();
      if (tag == BlockTag::l && opts_.update_l) step_l();
      if (state_.dead_model) return false;
    }
    return true;
  }

  ModelState run() {
    for (std::size_t it = 0; it < hp_.outer_max_iter; ++it) {
      const double before = objective_;
      if (!sweep()) break;
      const double decrease = before - objective_;
      if (decrease <= hp_.outer_rel_tol * std::max(std::abs(before), std::numeric_limits<double>::min())) {
        state_.converged = true;
        break;
      }
    }
    state_.outer_iterations = outer_;
    if (state_.dead_model) state_.converged = false;
    return state_;
  }

 private:
  double evaluate(const DenseMatrix& c, std::span<const double> eta, const SymmetricMatrix& l) const {
    const double f = objective_value(c, l, eta, y_, dict_, hp_.lambda, hp_.regularizer);
    if (std::isnan(f)) fail(ErrorKind::numerical_failure, "objective became NaN");
    return f;
  }

  // CG under weights `eta` from `warm`, tightening the tolerance until F ≤ bound.
  // Returns an empty matrix when no solve achieves that.
  DenseMatrix solve_descending(const std::vector<double>& eta, const DenseMatrix& warm, double bound) {
    const WeightedKernel wk(dict_, eta);
    const auto problem = make_sylvester_problem(wk, state_.l, y_, hp_.lambda * static_cast<double>(y_.rows()));
    std::vector<double> ladder{hp_.cg_rel_tol};
    for (double t : {1e-6, 1e-10})
      if (t < ladder.back()) ladder.push_back(t);
    DenseMatrix start = warm;
    for (double tol : ladder) {
      CgResult res = cg_sylvester_solve(problem, start, tol, std::max<std::size_t>(hp_.cg_max_iter, tol < hp_.cg_rel_tol ? 10 * y_.size() : 1));
      last_cg_ = res.report;
      const double f = evaluate(res.c, eta, state_.l);
      if (!std::isfinite(f)) fail(ErrorKind::numerical_failure, "objective became non-finite in the C solve");
      if (f <= bound) {
        pending_objective_ = f;
        return std::move(res.c);
      }
      start = std::move(res.c);
    }
    return {};
  }

  void record(BlockTag tag) {
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    state_.objective_trace.push_back({outer_, tag, objective_, ms});
  }

  const DenseMatrix& y_;
  const KernelDictionary& dict_;
  Hyperparams hp_;
  FitOptions opts_;
  std::chrono::steady_clock::time_point start_;
  ModelState state_;
  double objective_ = 0.0;
  double pending_objective_ = 0.0;
  std::size_t outer_ = 0;
  CgReport last_cg_;
};

inline ModelState fit(const DenseMatrix& y, const KernelDictionary& dict, const Hyperparams& hp,
                      const FitOptions& opts = {}) {
  BlockCoordinateDescent bcd(y, dict, hp, opts);
  return bcd.run();
}

// ---------------------------------------------------------------------------
// prediction

/// f(x) = L Cᵀ κ(x), κ_i(x) = Σ_j η_j k_j(x, x_i).
inline std::vector<double> predict(const ModelState& s, const KernelDictionary& dict, const DenseMatrix& x_train,
                                   std::span<const double> x_new) {
  require(x_train.rows() == s.c.rows(), ErrorKind::dimension_mismatch, "training design does not match the model");
  const WeightedKernel wk(dict, s.eta);
  const auto kappa = cross_gram(wk, x_train, x_new);
  std::vector<double> ctk(s.c.cols(), 0.0);
  for (std::size_t i = 0; i < s.c.rows(); ++i) {
    const double ki = kappa[i];
    if (ki == 0.0) continue;
    auto ci = s.c.row(i);
    for (std::size_t j = 0; j < ctk.size(); ++j) ctk[j] += ci[j] * ki;
  }
  return matvec(s.l, ctk);
}

/// Row-wise predict over a batch; result is rows(x_new) × n.
inline DenseMatrix predict_batch(const ModelState& s, const KernelDictionary& dict, const DenseMatrix& x_train,
                                 const DenseMatrix& x_new) {
  DenseMatrix out(x_new.rows(), s.c.cols());
  for (std::size_t r = 0; r < x_new.rows(); ++r) {
    const auto y = predict(s, dict, x_train, x_new.row(r));
    std::copy(y.begin(), y.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace mvkl

#pragma once

// Upper bounds on the empirical Rademacher complexity of ℓp-constrained sums of
// separable-kernel spaces: l samples, m kernels with sup_x k_j(x, x) ≤ κ, output
// kernels with trace(L) ≤ τ and hypothesis norm ≤ norm_budget.
//
// norm_budget is the hypothesis-class radius, not the ridge parameter of the fit.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

#include "mvkl/error.hpp"

namespace mvkl {

/// Khintchine-Kahane constant for even moments.
inline constexpr double kEta0 = 23.0 / 22.0;

struct BoundInputs {
  double norm_budget = 1.0;
  std::size_t m = 1;
  double kappa = 1.0;
  double tau = 1.0;
  std::size_t l = 1;
  double p = 1.0;
  std::optional<std::size_t> r;  // moment order for p = 1; default ⌈2 ln m⌉

  void validate() const {
    require(norm_budget > 0.0 && std::isfinite(norm_budget), ErrorKind::invalid_input,
            "bound: norm_budget must be positive");
    require(m >= 1, ErrorKind::invalid_input, "bound: m must be at least 1");
    require(kappa > 0.0 && std::isfinite(kappa), ErrorKind::invalid_input, "bound: kappa must be positive");
    require(tau > 0.0 && std::isfinite(tau), ErrorKind::invalid_input, "bound: tau must be positive");
    require(l >= 1, ErrorKind::invalid_input, "bound: l must be at least 1");
    require(p >= 1.0 && !std::isnan(p), ErrorKind::invalid_input, "bound: p must lie in [1, inf)");
    require(!r || *r >= 1, ErrorKind::invalid_input, "bound: r must be a positive integer");
  }
};

enum class BoundPart { a, b, c };

inline std::string_view to_string(BoundPart part) {
  switch (part) {
    case BoundPart::a: return "A";
    case BoundPart::b: return "B";
    case BoundPart::c: return "C";
  }
  return "?";
}

namespace detail {

inline double kappa_tau_over_l(const BoundInputs& in) { return in.kappa * in.tau / static_cast<double>(in.l); }

}  // namespace detail

/// Any p ≥ 1: norm_budget · m · √(κτ/l).
inline double bound_part_a(const BoundInputs& in) {
  in.validate();
  return in.norm_budget * static_cast<double>(in.m) * std::sqrt(detail::kappa_tau_over_l(in));
}

/// Conjugate exponent q ∈ ℕ: norm_budget · m^{1/q} · √(η0 q κτ/l).
inline double bound_part_b(const BoundInputs& in, std::size_t q) {
  in.validate();
  require(q >= 1, ErrorKind::invalid_input, "bound: q must be a positive integer");
  const double qd = static_cast<double>(q);
  return in.norm_budget * std::pow(static_cast<double>(in.m), 1.0 / qd) *
         std::sqrt(kEta0 * qd * detail::kappa_tau_over_l(in));
}

/// p = 1. m = 1: norm_budget · √(η0 κτ/l). m > 1: norm_budget · √(η0 e ⌈2 ln m⌉ κτ/l),
/// or norm_budget · m^{1/r} · √(η0 r κτ/l) when r is given explicitly.
inline double bound_part_c(const BoundInputs& in) {
  in.validate();
  const double s = detail::kappa_tau_over_l(in);
  if (in.m == 1) return in.norm_budget * std::sqrt(kEta0 * s);
  const double md = static_cast<double>(in.m);
  if (in.r) {
    const double r = static_cast<double>(*in.r);
    return in.norm_budget * std::pow(md, 1.0 / r) * std::sqrt(kEta0 * r * s);
  }
  const double r = std::ceil(2.0 * std::log(md));
  return in.norm_budget * std::sqrt(kEta0 * std::exp(1.0) * r * s);
}

struct BoundResult {
  double value = 0.0;
  BoundPart part = BoundPart::a;
  std::size_t q = 0;  // set for part B
};

/// Part C for p = 1, part B when p/(p−1) is a positive integer, part A otherwise.
inline BoundResult rademacher_bound_detail(const BoundInputs& in) {
  in.validate();
  if (in.p == 1.0) return {bound_part_c(in), BoundPart::c, 0};
  if (std::isfinite(in.p)) {
    const double q = in.p / (in.p - 1.0);
    const double qr = std::round(q);
    if (qr >= 1.0 && std::abs(q - qr) <= 1e-12 * qr) {
      const auto qi = static_cast<std::size_t>(qr);
      return {bound_part_b(in, qi), BoundPart::b, qi};
    }
  }
  return {bound_part_a(in), BoundPart::a, 0};
}

inline double rademacher_bound(const BoundInputs& in) { return rademacher_bound_detail(in).value; }

// General dictionaries, in terms of u_j = √trace(K⃗_j) over the sample.

namespace detail {

inline double lr_norm(std::span<const double> u, double r) {
  require(!u.empty(), ErrorKind::invalid_input, "bound: u must be non-empty");
  double s = 0.0;
  for (double v : u) {
    require(v >= 0.0 && std::isfinite(v), ErrorKind::invalid_input, "bound: u must be finite and nonnegative");
    s += std::pow(v, r);
  }
  return std::pow(s, 1.0 / r);
}

inline void check_radius(double norm_budget, std::size_t l) {
  require(norm_budget > 0.0 && l >= 1, ErrorKind::invalid_input, "bound: norm_budget and l must be positive");
}

}  // namespace detail

/// (norm_budget / l) ‖u‖₁
inline double bound_part_a_general(std::span<const double> u, double norm_budget, std::size_t l) {
  detail::check_radius(norm_budget, l);
  return norm_budget / static_cast<double>(l) * detail::lr_norm(u, 1.0);
}

/// (norm_budget / l) √(η0 q) ‖u‖_q
inline double bound_part_b_general(std::span<const double> u, double norm_budget, std::size_t l, std::size_t q) {
  detail::check_radius(norm_budget, l);
  require(q >= 1, ErrorKind::invalid_input, "bound: q must be a positive integer");
  const double qd = static_cast<double>(q);
  return norm_budget / static_cast<double>(l) * std::sqrt(kEta0 * qd) * detail::lr_norm(u, qd);
}

/// (norm_budget / l) √(η0 r) ‖u‖_r for any r ∈ ℕ; reduces to the separable part C
/// with u_j ≤ √(lκτ) and r = ⌈2 ln m⌉.
inline double bound_part_c_general(std::span<const double> u, double norm_budget, std::size_t l, std::size_t r) {
  detail::check_radius(norm_budget, l);
  require(r >= 1, ErrorKind::invalid_input, "bound: r must be a positive integer");
  const double rd = static_cast<double>(r);
  return norm_budget / static_cast<double>(l) * std::sqrt(kEta0 * rd) * detail::lr_norm(u, rd);
}

}  // namespace mvkl

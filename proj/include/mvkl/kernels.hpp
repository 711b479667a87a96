#pragma once

// Scalar kernels, cached Gram dictionaries and weighted-kernel operators.
//
// Gaussian convention: k(x, z) = exp(−‖x_S − z_S‖² / (2h²)) on the feature subset S.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mvkl/error.hpp"
#include "mvkl/matrix.hpp"
#include "mvkl/spectral.hpp"

namespace mvkl {

struct GaussianKernel {
  double bandwidth = 1.0;
};

struct LinearKernel {};

/// A user-supplied Gram matrix. Usable for training only.
struct PrecomputedKernel {
  std::shared_ptr<const SymmetricMatrix> gram;
  std::string source;  // provenance label, e.g. the CSV path
};

using KernelKind = std::variant<GaussianKernel, LinearKernel, PrecomputedKernel>;

struct ScalarKernelSpec {
  KernelKind kind;
  std::vector<std::size_t> feature_subset;  // sorted; empty means all features

  static ScalarKernelSpec gaussian(double bandwidth, std::vector<std::size_t> subset = {}) {
    require(bandwidth > 0.0 && std::isfinite(bandwidth), ErrorKind::invalid_input,
            "Gaussian bandwidth must be positive");
    std::sort(subset.begin(), subset.end());
    return {GaussianKernel{bandwidth}, std::move(subset)};
  }
  static ScalarKernelSpec linear(std::vector<std::size_t> subset = {}) {
    std::sort(subset.begin(), subset.end());
    return {LinearKernel{}, std::move(subset)};
  }
  static ScalarKernelSpec precomputed(SymmetricMatrix gram, std::string source = {}) {
    return {PrecomputedKernel{std::make_shared<const SymmetricMatrix>(std::move(gram)), std::move(source)}, {}};
  }

  bool is_precomputed() const { return std::holds_alternative<PrecomputedKernel>(kind); }

  std::string kind_name() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, GaussianKernel>) return "gaussian";
          else if constexpr (std::is_same_v<K, LinearKernel>) return "linear";
          else return "precomputed";
        },
        kind);
  }
};

namespace detail {

inline void check_subset(const ScalarKernelSpec& spec, std::size_t dims) {
  for (std::size_t idx : spec.feature_subset)
    require(idx < dims, ErrorKind::dimension_mismatch,
            "feature index " + std::to_string(idx) + " out of range for " + std::to_string(dims) + " columns");
}

inline double squared_distance(const ScalarKernelSpec& spec, std::span<const double> x, std::span<const double> z) {
  double s = 0.0;
  if (spec.feature_subset.empty()) {
    for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - z[k]) * (x[k] - z[k]);
  } else {
    for (std::size_t idx : spec.feature_subset) s += (x[idx] - z[idx]) * (x[idx] - z[idx]);
  }
  return s;
}

inline double restricted_dot(const ScalarKernelSpec& spec, std::span<const double> x, std::span<const double> z) {
  double s = 0.0;
  if (spec.feature_subset.empty()) {
    for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * z[k];
  } else {
    for (std::size_t idx : spec.feature_subset) s += x[idx] * z[idx];
  }
  return s;
}

}  // namespace detail

/// k(x, z) for an evaluable (non-precomputed) kernel.
inline double evaluate_kernel(const ScalarKernelSpec& spec, std::span<const double> x, std::span<const double> z) {
  if (const auto* g = std::get_if<GaussianKernel>(&spec.kind)) {
    return std::exp(-detail::squared_distance(spec, x, z) / (2.0 * g->bandwidth * g->bandwidth));
  }
  if (std::holds_alternative<LinearKernel>(spec.kind)) return detail::restricted_dot(spec, x, z);
  fail(ErrorKind::unsupported_prediction, "precomputed kernels cannot be evaluated at new points");
}

inline SymmetricMatrix gram_matrix(const ScalarKernelSpec& spec, const DenseMatrix& x) {
  require(x.rows() >= 1, ErrorKind::invalid_input, "Gram matrix of an empty sample");
  require(all_finite(x.data()), ErrorKind::invalid_input, "design matrix must be finite");
  if (const auto* p = std::get_if<PrecomputedKernel>(&spec.kind)) {
    require(p->gram != nullptr, ErrorKind::invalid_input, "precomputed kernel without a Gram matrix");
    require(p->gram->dim() == x.rows(), ErrorKind::dimension_mismatch,
            "precomputed Gram is " + std::to_string(p->gram->dim()) + "x" + std::to_string(p->gram->dim()) +
                " but the sample has " + std::to_string(x.rows()) + " rows");
    return *p->gram;
  }
  detail::check_subset(spec, x.cols());
  const std::size_t l = x.rows();
  SymmetricMatrix k(l);
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t j = i; j < l; ++j) k(i, j) = evaluate_kernel(spec, x.row(i), x.row(j));
  return k;
}

/// Columns of X restricted to the spec's subset: the exact factor Z with Z Zᵀ = K for linear kernels.
inline DenseMatrix linear_factor(const ScalarKernelSpec& spec, const DenseMatrix& x) {
  require(std::holds_alternative<LinearKernel>(spec.kind), ErrorKind::invalid_input,
          "linear_factor needs a linear kernel");
  detail::check_subset(spec, x.cols());
  std::vector<std::size_t> cols = spec.feature_subset;
  if (cols.empty())
    for (std::size_t c = 0; c < x.cols(); ++c) cols.push_back(c);
  DenseMatrix z(x.rows(), cols.size());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t c = 0; c < cols.size(); ++c) z(i, c) = x(i, cols[c]);
  return z;
}

/// m kernels over one sample, with eagerly cached Grams (m·l² doubles) and
/// optional low-rank factors K_j ≈ Z_j Z_jᵀ.
class KernelDictionary {
 public:
  KernelDictionary() = default;

  /// Builds and caches every Gram on X. All-linear dictionaries also get their
  /// exact low-rank factors.
  static KernelDictionary build(std::vector<ScalarKernelSpec> specs, const DenseMatrix& x) {
    require(!specs.empty(), ErrorKind::invalid_input, "kernel dictionary needs at least one kernel");
    KernelDictionary d;
    d.samples_ = x.rows();
    d.grams_.reserve(specs.size());
    bool all_linear = true;
    for (const auto& s : specs) {
      d.grams_.push_back(gram_matrix(s, x));
      all_linear = all_linear && std::holds_alternative<LinearKernel>(s.kind);
    }
    if (all_linear) {
      std::vector<DenseMatrix> factors;
      for (const auto& s : specs) factors.push_back(linear_factor(s, x));
      d.factors_ = std::move(factors);
    }
    d.specs_ = std::move(specs);
    return d;
  }

  /// Dictionary from Grams alone (e.g. precomputed kernels, or combinations).
  static KernelDictionary from_grams(std::vector<ScalarKernelSpec> specs, std::vector<SymmetricMatrix> grams) {
    require(!specs.empty() && specs.size() == grams.size(), ErrorKind::invalid_input,
            "from_grams needs one Gram per spec");
    KernelDictionary d;
    d.samples_ = grams.front().dim();
    for (const auto& g : grams)
      require(g.dim() == d.samples_, ErrorKind::dimension_mismatch, "Gram matrices differ in size");
    d.specs_ = std::move(specs);
    d.grams_ = std::move(grams);
    return d;
  }

  /// Attach externally produced factors; each must reproduce its Gram to 1e-8 relative.
  void attach_low_rank_factors(std::vector<DenseMatrix> factors) {
    require(factors.size() == grams_.size(), ErrorKind::invalid_input, "one low-rank factor per kernel required");
    for (std::size_t j = 0; j < factors.size(); ++j) {
      const auto& z = factors[j];
      require(z.rows() == samples_, ErrorKind::dimension_mismatch, "low-rank factor row count mismatch");
      const DenseMatrix zzt = matmul(z, transpose(z));
      const double err = frobenius_norm(zzt - grams_[j].to_dense());
      require(err <= 1e-8 * std::max(grams_[j].frobenius_norm(), 1e-300), ErrorKind::invalid_input,
              "low-rank factor " + std::to_string(j) + " does not reproduce its Gram matrix");
    }
    factors_ = std::move(factors);
  }

  std::size_t size() const noexcept { return specs_.size(); }
  std::size_t sample_count() const noexcept { return samples_; }
  const std::vector<ScalarKernelSpec>& specs() const noexcept { return specs_; }
  const ScalarKernelSpec& spec(std::size_t j) const { return specs_.at(j); }
  const SymmetricMatrix& gram(std::size_t j) const { return grams_.at(j); }
  const std::vector<SymmetricMatrix>& grams() const noexcept { return grams_; }
  bool has_low_rank() const noexcept { return factors_.has_value(); }
  const DenseMatrix& factor(std::size_t j) const { return factors_->at(j); }

  bool evaluable_at_new_points() const {
    return std::none_of(specs_.begin(), specs_.end(), [](const auto& s) { return s.is_precomputed(); });
  }

  /// K_j M, through the low-rank factor when available.
  DenseMatrix apply(std::size_t j, const DenseMatrix& m) const {
    require(m.rows() == samples_, ErrorKind::invalid_input, "kernel apply: row count mismatch");
    if (factors_) {
      const auto& z = (*factors_)[j];
      return matmul(z, matmul_tn(z, m));
    }
    return multiply(grams_[j], m);
  }

  /// γ = max_j ‖K_j‖₂.
  double max_spectral_norm() const {
    double g = 0.0;
    for (const auto& k : grams_) g = std::max(g, spectral_norm_psd(k));
    return g;
  }

 private:
  std::vector<ScalarKernelSpec> specs_;
  std::vector<SymmetricMatrix> grams_;
  std::optional<std::vector<DenseMatrix>> factors_;
  std::size_t samples_ = 0;
};

/// A nonnegative combination Σ η_j k_j over a dictionary. Holds a non-owning
/// pointer to the dictionary, which must outlive it.
class WeightedKernel {
 public:
  WeightedKernel(const KernelDictionary& dictionary, std::vector<double> eta)
      : dictionary_(&dictionary), eta_(std::move(eta)) {
    require(eta_.size() == dictionary.size(), ErrorKind::invalid_input,
            "eta has " + std::to_string(eta_.size()) + " entries for " + std::to_string(dictionary.size()) +
                " kernels");
    for (double e : eta_)
      require(e >= 0.0 && std::isfinite(e), ErrorKind::invalid_input, "kernel weights must be finite and >= 0");
  }

  const KernelDictionary& dictionary() const noexcept { return *dictionary_; }
  const std::vector<double>& eta() const noexcept { return eta_; }

 private:
  const KernelDictionary* dictionary_;
  std::vector<double> eta_;
};

/// K_η = Σ η_j K_j, materialized.
inline SymmetricMatrix weighted_gram(const WeightedKernel& wk) {
  const auto& dict = wk.dictionary();
  SymmetricMatrix k(dict.sample_count());
  for (std::size_t j = 0; j < dict.size(); ++j)
    if (wk.eta()[j] != 0.0) k.add_scaled(wk.eta()[j], dict.gram(j));
  return k;
}

/// K_η M without materializing K_η. Zero-weight kernels are skipped.
inline DenseMatrix weighted_apply(const WeightedKernel& wk, const DenseMatrix& m) {
  const auto& dict = wk.dictionary();
  require(m.rows() == dict.sample_count(), ErrorKind::invalid_input,
          "weighted_apply: expected " + std::to_string(dict.sample_count()) + " rows, got " +
              std::to_string(m.rows()));
  DenseMatrix out(m.rows(), m.cols());
  for (std::size_t j = 0; j < dict.size(); ++j) {
    const double e = wk.eta()[j];
    if (e == 0.0) continue;
    out.add_scaled(e, dict.apply(j, m));
  }
  return out;
}

/// κ(x_new)_i = Σ_j η_j k_j(x_new, x_i).
inline std::vector<double> cross_gram(const WeightedKernel& wk, const DenseMatrix& x_train,
                                      std::span<const double> x_new) {
  const auto& dict = wk.dictionary();
  require(dict.evaluable_at_new_points(), ErrorKind::unsupported_prediction,
          "dictionary contains precomputed kernels; prediction at new points is unsupported");
  require(x_new.size() == x_train.cols(), ErrorKind::dimension_mismatch, "cross_gram feature size mismatch");
  require(all_finite(x_new), ErrorKind::invalid_input, "prediction input must be finite");
  std::vector<double> out(x_train.rows(), 0.0);
  for (std::size_t j = 0; j < dict.size(); ++j) {
    const double e = wk.eta()[j];
    if (e == 0.0) continue;
    detail::check_subset(dict.spec(j), x_train.cols());
    for (std::size_t i = 0; i < x_train.rows(); ++i) out[i] += e * evaluate_kernel(dict.spec(j), x_new, x_train.row(i));
  }
  return out;
}

/// Median Euclidean distance between distinct rows of X over `subset` (all columns if empty).
inline double median_pairwise_distance(const DenseMatrix& x, std::span<const std::size_t> subset = {}) {
  ScalarKernelSpec probe{LinearKernel{}, {subset.begin(), subset.end()}};
  detail::check_subset(probe, x.cols());
  std::vector<double> d;
  d.reserve(x.rows() * (x.rows() - (x.rows() > 0)) / 2);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = i + 1; j < x.rows(); ++j) d.push_back(std::sqrt(detail::squared_distance(probe, x.row(i), x.row(j))));
  if (d.empty()) return 0.0;
  const std::size_t mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + mid, d.end());
  if (d.size() % 2 == 1) return d[mid];
  const double upper = d[mid];
  const double lower = *std::max_element(d.begin(), d.begin() + mid);
  return 0.5 * (lower + upper);
}

/// 13 log-spaced bandwidth multipliers in [2⁻³, 2³].
inline std::vector<double> default_bandwidth_grid() {
  std::vector<double> grid;
  for (int k = 0; k < 13; ++k) grid.push_back(std::exp2(-3.0 + 0.5 * k));
  return grid;
}

/// One Gaussian kernel per (group, multiplier): bandwidth = multiplier × the
/// group's median pairwise distance (1 when the group is constant).
inline std::vector<ScalarKernelSpec> gaussian_group_specs(const DenseMatrix& x,
                                                          const std::vector<std::vector<std::size_t>>& groups,
                                                          std::span<const double> multipliers) {
  require(!multipliers.empty(), ErrorKind::invalid_input, "Gaussian dictionary needs a non-empty bandwidth grid");
  std::vector<ScalarKernelSpec> specs;
  for (const auto& g : groups) {
    double med = median_pairwise_distance(x, g);
    if (!(med > 0.0)) med = 1.0;
    for (double s : multipliers) {
      require(s > 0.0, ErrorKind::invalid_input, "bandwidth multipliers must be positive");
      specs.push_back(ScalarKernelSpec::gaussian(s * med, g));
    }
  }
  return specs;
}

}  // namespace mvkl

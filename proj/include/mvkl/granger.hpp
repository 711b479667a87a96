#pragma once

// Nonlinear graphical Granger causality. Each node i is modeled as a sum of
// separable-kernel functions of the lagged history of every node j,
//
//   x_t^i = Σ_{j,s} f^i_{j,s}(x^j_{t−1}, …, x^j_{t−L}),
//
// with a squared-ℓ1 kernel-weight regularizer. The weights induce the graph
// G[i][j] = Σ_s η^i_{j,s}: row i lists the causes of node i (edge j → i).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "mvkl/error.hpp"
#include "mvkl/kernels.hpp"
#include "mvkl/matrix.hpp"
#include "mvkl/mkl.hpp"

namespace mvkl {

struct TimeSeriesPanel {
  std::vector<std::string> node_names;
  std::vector<std::size_t> dims;
  std::vector<double> time;  // strictly increasing
  DenseMatrix values;        // T × Σ dims, columns grouped by node

  std::size_t node_count() const noexcept { return node_names.size(); }
  std::size_t length() const noexcept { return values.rows(); }

  std::size_t column_offset(std::size_t node) const {
    std::size_t off = 0;
    for (std::size_t j = 0; j < node; ++j) off += dims.at(j);
    return off;
  }

  void validate() const {
    require(!node_names.empty() && node_names.size() == dims.size(), ErrorKind::invalid_input,
            "panel needs one dimension per node");
    std::size_t total = 0;
    for (std::size_t d : dims) {
      require(d >= 1, ErrorKind::invalid_input, "every node needs at least one dimension");
      total += d;
    }
    require(total == values.cols(), ErrorKind::dimension_mismatch, "node dimensions do not sum to the column count");
    require(time.size() == values.rows(), ErrorKind::dimension_mismatch, "time index length differs from row count");
    for (std::size_t t = 1; t < time.size(); ++t)
      require(time[t] > time[t - 1], ErrorKind::invalid_input, "time index must be strictly increasing");
    require(all_finite(values.data()), ErrorKind::invalid_input, "panel contains non-finite values");
  }
};

/// Row r holds the history before time index lag + r; no column uses the target time.
struct LagDesign {
  std::size_t lag = 1;
  DenseMatrix features;                           // (T − L) × Σ d_j·L
  std::vector<std::vector<std::size_t>> blocks;   // feature columns of node j
  DenseMatrix targets;                            // (T − L) × Σ d_i, values at the target time
  std::vector<std::size_t> target_offsets;        // first target column of node i
  std::vector<std::size_t> dims;

  std::size_t rows() const noexcept { return features.rows(); }
  std::size_t node_count() const noexcept { return dims.size(); }

  DenseMatrix node_targets(std::size_t node) const {
    DenseMatrix y(rows(), dims.at(node));
    for (std::size_t r = 0; r < rows(); ++r)
      for (std::size_t k = 0; k < dims[node]; ++k) y(r, k) = targets(r, target_offsets[node] + k);
    return y;
  }
};

/// Node j's block lists lag 1 first; within a lag, dimensions in panel order.
inline LagDesign lag_embed(const TimeSeriesPanel& panel, std::size_t lag) {
  require(lag >= 1, ErrorKind::invalid_input, "lag must be at least 1");
  require(panel.length() > lag, ErrorKind::insufficient_data,
          "series of length " + std::to_string(panel.length()) + " is too short for lag " + std::to_string(lag));
  const std::size_t rows = panel.length() - lag;
  const std::size_t width = panel.values.cols() * lag;
  LagDesign d;
  d.lag = lag;
  d.dims = panel.dims;
  d.features = DenseMatrix(rows, width);
  d.targets = DenseMatrix(rows, panel.values.cols());
  std::size_t col = 0;
  for (std::size_t j = 0; j < panel.node_count(); ++j) {
    const std::size_t off = panel.column_offset(j);
    d.target_offsets.push_back(off);
    std::vector<std::size_t> block;
    for (std::size_t ell = 1; ell <= lag; ++ell) {
      for (std::size_t k = 0; k < panel.dims[j]; ++k, ++col) {
        block.push_back(col);
        for (std::size_t r = 0; r < rows; ++r) d.features(r, col) = panel.values(lag + r - ell, off + k);
      }
    }
    d.blocks.push_back(std::move(block));
  }
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < panel.values.cols(); ++c) d.targets(r, c) = panel.values(lag + r, c);
  return d;
}

struct ColumnScaling {
  std::vector<double> mean;
  std::vector<double> scale;  // 1 for constant columns
};

/// Mean and standard deviation of every column over the first `rows` rows.
inline ColumnScaling fit_column_scaling(const DenseMatrix& x, std::size_t rows) {
  require(rows >= 1 && rows <= x.rows(), ErrorKind::insufficient_data, "scaling needs at least one row");
  ColumnScaling s{std::vector<double>(x.cols(), 0.0), std::vector<double>(x.cols(), 1.0)};
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double m = 0.0;
    for (std::size_t r = 0; r < rows; ++r) m += x(r, c);
    m /= static_cast<double>(rows);
    double v = 0.0;
    for (std::size_t r = 0; r < rows; ++r) v += (x(r, c) - m) * (x(r, c) - m);
    v /= static_cast<double>(rows);
    s.mean[c] = m;
    s.scale[c] = v > 0.0 ? std::sqrt(v) : 1.0;
  }
  return s;
}

inline void apply_column_scaling(DenseMatrix& x, const ColumnScaling& s) {
  require(s.mean.size() == x.cols(), ErrorKind::dimension_mismatch, "scaling width mismatch");
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) x(r, c) = (x(r, c) - s.mean[c]) / s.scale[c];
}

inline DenseMatrix head_rows(const DenseMatrix& x, std::size_t begin, std::size_t end) {
  DenseMatrix out(end - begin, x.cols());
  for (std::size_t r = begin; r < end; ++r) std::copy(x.row(r).begin(), x.row(r).end(), out.row(r - begin).begin());
  return out;
}

enum class KernelFamily { gaussian, linear };

struct KernelSlot {
  std::size_t node = 0;
  std::size_t grid_index = 0;
};

struct NodeDictionary {
  KernelDictionary dictionary;
  std::vector<KernelSlot> slots;  // flat kernel index → (node, bandwidth index)
};

/// One kernel per (node, bandwidth) for the Gaussian family, one per node for linear.
/// Gaussian bandwidths are grid multipliers times the block's median pairwise distance on `x`.
inline NodeDictionary build_node_dictionary(const DenseMatrix& x, const std::vector<std::vector<std::size_t>>& blocks,
                                            std::span<const double> grid, KernelFamily family) {
  require(x.rows() >= 1 && x.cols() >= 1, ErrorKind::insufficient_data, "design is empty");
  NodeDictionary out;
  std::vector<ScalarKernelSpec> specs;
  if (family == KernelFamily::linear) {
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      specs.push_back(ScalarKernelSpec::linear(blocks[j]));
      out.slots.push_back({j, 0});
    }
  } else {
    specs = gaussian_group_specs(x, blocks, grid);
    for (std::size_t j = 0; j < blocks.size(); ++j)
      for (std::size_t s = 0; s < grid.size(); ++s) out.slots.push_back({j, s});
  }
  out.dictionary = KernelDictionary::build(std::move(specs), x);
  return out;
}

struct GrangerOptions {
  std::size_t lag = 7;
  KernelFamily family = KernelFamily::gaussian;
  std::vector<double> bandwidth_grid = default_bandwidth_grid();
  Hyperparams hp = [] {
    Hyperparams h;
    h.lambda = 1e-3;
    h.regularizer = LpSquared{1.0};
    return h;
  }();
  bool tau_per_node_dims = true;  // τ = d_i for node i instead of hp.tau
  double holdout_fraction = 0.2;
  bool row_normalize = false;
  std::size_t threads = 1;
};

struct NodeFit {
  ModelState state;
  std::vector<double> target_mean;
  double holdout_rmse = 0.0;
};

struct CausalGraph {
  std::vector<std::string> node_names;
  DenseMatrix g;                   // N × N, g(i, j) weighs edge j → i
  std::vector<NodeFit> node_fits;  // per modeled node
  std::vector<KernelSlot> slots;
  std::size_t train_rows = 0;
  std::size_t holdout_rows = 0;

  const SymmetricMatrix& output_kernel(std::size_t i) const { return node_fits.at(i).state.l; }
  double holdout_rmse(std::size_t i) const { return node_fits.at(i).holdout_rmse; }
};

struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
  double weight = 0.0;
};

/// Edges j → i with G[i][j] > threshold; self-dependence is listed only on request.
inline std::vector<Edge> graph_edges(const DenseMatrix& g, double threshold, bool include_self = false) {
  std::vector<Edge> out;
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j)
      if ((include_self || i != j) && g(i, j) > threshold) out.push_back({j, i, g(i, j)});
  return out;
}

/// Share of row i's off-diagonal mass carried by column j (0 for an empty row).
inline double off_diagonal_share(const DenseMatrix& g, std::size_t i, std::size_t j) {
  double total = 0.0;
  for (std::size_t k = 0; k < g.cols(); ++k)
    if (k != i) total += g(i, k);
  return total > 0.0 ? g(i, j) / total : 0.0;
}

/// Fits one node on the dictionary's training rows (the head of `y`), with the
/// targets centered by their training mean.
inline NodeFit fit_node(const DenseMatrix& y, const NodeDictionary& nd, const Hyperparams& hp) {
  NodeFit out;
  const std::size_t l = nd.dictionary.sample_count();
  require(y.rows() >= l, ErrorKind::dimension_mismatch, "targets are shorter than the training design");
  DenseMatrix yc = head_rows(y, 0, l);
  out.target_mean.assign(yc.cols(), 0.0);
  for (std::size_t c = 0; c < yc.cols(); ++c) {
    double m = 0.0;
    for (std::size_t r = 0; r < l; ++r) m += yc(r, c);
    m /= static_cast<double>(l);
    out.target_mean[c] = m;
    for (std::size_t r = 0; r < l; ++r) yc(r, c) -= m;
  }
  out.state = fit(yc, nd.dictionary, hp);
  return out;
}

namespace detail {

// Runs body(i) for i in [0, count) on up to `threads` workers; rethrows the
// lowest-index failure so errors do not depend on scheduling.
template <class Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  std::vector<std::exception_ptr> errors(count);
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            body(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

/// Lag-embeds the panel, standardizes each feature column on the head split,
/// fits every node on the head split and scores it on the trailing holdout.
/// Rows after the split never influence the fitted models or G.
inline CausalGraph infer_causal_graph(const TimeSeriesPanel& panel, const GrangerOptions& opt) {
  panel.validate();
  require(opt.holdout_fraction >= 0.0 && opt.holdout_fraction < 1.0, ErrorKind::invalid_input,
          "holdout fraction must lie in [0, 1)");
  LagDesign design = lag_embed(panel, opt.lag);
  const std::size_t rows = design.rows();
  const auto holdout = static_cast<std::size_t>(std::floor(opt.holdout_fraction * static_cast<double>(rows)));
  const std::size_t train = rows - holdout;
  require(train >= 2, ErrorKind::insufficient_data, "too few rows left for training after the holdout split");

  const ColumnScaling scaling = fit_column_scaling(design.features, train);
  apply_column_scaling(design.features, scaling);
  const DenseMatrix x_train = head_rows(design.features, 0, train);
  const DenseMatrix x_test = head_rows(design.features, train, rows);
  const NodeDictionary nd = build_node_dictionary(x_train, design.blocks, opt.bandwidth_grid, opt.family);

  const std::size_t n_nodes = panel.node_count();
  CausalGraph out;
  out.node_names = panel.node_names;
  out.g = DenseMatrix(n_nodes, n_nodes);
  out.node_fits.resize(n_nodes);
  out.slots = nd.slots;
  out.train_rows = train;
  out.holdout_rows = holdout;

  detail::parallel_for(n_nodes, opt.threads, [&](std::size_t i) {
    Hyperparams hp = opt.hp;
    if (opt.tau_per_node_dims) hp.tau = static_cast<double>(design.dims[i]);
    const DenseMatrix y = design.node_targets(i);
    NodeFit nf = fit_node(y, nd, hp);
    if (holdout > 0) {
      const DenseMatrix pred = predict_batch(nf.state, nd.dictionary, x_train, x_test);
      double se = 0.0;
      for (std::size_t r = 0; r < holdout; ++r)
        for (std::size_t c = 0; c < y.cols(); ++c) {
          const double e = pred(r, c) + nf.target_mean[c] - y(train + r, c);
          se += e * e;
        }
      nf.holdout_rmse = std::sqrt(se / static_cast<double>(holdout * y.cols()));
    } else {
      nf.holdout_rmse = std::numeric_limits<double>::quiet_NaN();
    }
    out.node_fits[i] = std::move(nf);
  });

  for (std::size_t i = 0; i < n_nodes; ++i) {
    const auto& eta = out.node_fits[i].state.eta;
    for (std::size_t k = 0; k < eta.size(); ++k) out.g(i, nd.slots[k].node) += eta[k];
  }
  if (opt.row_normalize) {
    for (std::size_t i = 0; i < n_nodes; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n_nodes; ++j) s += out.g(i, j);
      if (s > 0.0)
        for (std::size_t j = 0; j < n_nodes; ++j) out.g(i, j) /= s;
    }
  }
  return out;
}

}  // namespace mvkl

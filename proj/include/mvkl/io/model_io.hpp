#pragma once

// JSON model documents. nlohmann::json writes doubles in shortest round-trip
// form, so save → load reproduces every float exactly.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvkl/error.hpp"
#include "mvkl/granger.hpp"
#include "mvkl/kernels.hpp"
#include "mvkl/matrix.hpp"
#include "mvkl/mkl.hpp"

namespace mvkl::io {

using json = nlohmann::json;

/// FNV-1a over the shape and raw bytes of X, as 16 hex digits.
inline std::string design_fingerprint(const DenseMatrix& x) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::uint64_t dims[2] = {x.rows(), x.cols()};
  mix(dims, sizeof dims);
  mix(x.data().data(), x.size() * sizeof(double));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// building blocks

inline json matrix_to_json(const DenseMatrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

inline DenseMatrix matrix_from_json(const json& j, const char* what) {
  if (!j.is_array()) fail(ErrorKind::parse_error, std::string(what) + " must be an array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? j.front().size() : 0;
  DenseMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      fail(ErrorKind::parse_error, std::string(what) + " has ragged rows");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

inline json regularizer_to_json(const Regularizer& reg) {
  if (const auto* lp = std::get_if<LpSquared>(&reg)) return {{"type", "lp_squared"}, {"p", lp->p}};
  return {{"type", "elastic_net"}, {"mu", std::get<ElasticNet>(reg).mu}};
}

inline Regularizer regularizer_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "lp_squared") return LpSquared{j.at("p").get<double>()};
  if (type == "elastic_net") return ElasticNet{j.at("mu").get<double>()};
  fail(ErrorKind::parse_error, "unknown regularizer type '" + type + "'");
}

inline json hyperparams_to_json(const Hyperparams& hp) {
  return {{"lambda", hp.lambda},
          {"tau", hp.tau},
          {"regularizer", regularizer_to_json(hp.regularizer)},
          {"cg_rel_tol", hp.cg_rel_tol},
          {"cg_max_iter", hp.cg_max_iter},
          {"fw_tol", hp.fw_tol},
          {"fw_max_iter", hp.fw_max_iter},
          {"outer_max_iter", hp.outer_max_iter},
          {"outer_rel_tol", hp.outer_rel_tol},
          {"seed", hp.seed}};
}

inline Hyperparams hyperparams_from_json(const json& j) {
  Hyperparams hp;
  hp.lambda = j.at("lambda").get<double>();
  hp.tau = j.at("tau").get<double>();
  hp.regularizer = regularizer_from_json(j.at("regularizer"));
  hp.cg_rel_tol = j.at("cg_rel_tol").get<double>();
  hp.cg_max_iter = j.at("cg_max_iter").get<std::size_t>();
  hp.fw_tol = j.at("fw_tol").get<double>();
  hp.fw_max_iter = j.at("fw_max_iter").get<std::size_t>();
  hp.outer_max_iter = j.at("outer_max_iter").get<std::size_t>();
  hp.outer_rel_tol = j.at("outer_rel_tol").get<double>();
  hp.seed = j.at("seed").get<std::uint64_t>();
  return hp;
}

inline json kernel_to_json(const ScalarKernelSpec& s) {
  json j{{"kind", s.kind_name()}, {"feature_subset", s.feature_subset}};
  if (const auto* g = std::get_if<GaussianKernel>(&s.kind)) j["bandwidth"] = g->bandwidth;
  if (const auto* p = std::get_if<PrecomputedKernel>(&s.kind)) j["source"] = p->source;
  return j;
}

/// Precomputed kernels come back without their Gram; they cannot predict anyway.
inline ScalarKernelSpec kernel_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  auto subset = j.value("feature_subset", std::vector<std::size_t>{});
  if (kind == "gaussian") return ScalarKernelSpec::gaussian(j.at("bandwidth").get<double>(), std::move(subset));
  if (kind == "linear") return ScalarKernelSpec::linear(std::move(subset));
  if (kind == "precomputed") return ScalarKernelSpec{PrecomputedKernel{nullptr, j.value("source", std::string{})}, {}};
  fail(ErrorKind::parse_error, "unknown kernel kind '" + kind + "'");
}

inline json state_to_json(const ModelState& s) {
  return {{"eta", s.eta},
          {"L", matrix_to_json(s.l.to_dense())},
          {"C", matrix_to_json(s.c)},
          {"objective", s.objective()},
          {"converged", s.converged},
          {"dead_model", s.dead_model},
          {"outer_iterations", s.outer_iterations},
          {"diagnostic", s.diagnostic}};
}

inline ModelState state_from_json(const json& j) {
  ModelState s;
  s.eta = j.at("eta").get<std::vector<double>>();
  const DenseMatrix l = matrix_from_json(j.at("L"), "L");
  if (!l.is_square()) fail(ErrorKind::parse_error, "L must be square");
  s.l = SymmetricMatrix::symmetrize(l);
  s.c = matrix_from_json(j.at("C"), "C");
  s.converged = j.value("converged", false);
  s.dead_model = j.value("dead_model", false);
  s.outer_iterations = j.value("outer_iterations", std::size_t{0});
  s.diagnostic = j.value("diagnostic", std::string{});
  if (j.contains("objective") && j["objective"].is_number())
    s.objective_trace.push_back({s.outer_iterations, BlockTag::init, j["objective"].get<double>(), 0.0});
  return s;
}

// ---------------------------------------------------------------------------
// regression models

struct SavedModel {
  Hyperparams hp;
  std::vector<ScalarKernelSpec> kernels;
  ModelState state;
  DenseMatrix x_train;  // needed to evaluate k(x, x_i) at prediction time
  std::vector<std::string> feature_names;
  std::vector<std::string> target_names;
  std::vector<double> target_mean;  // added back to predictions
};

inline json model_to_json(const SavedModel& m) {
  json kernels = json::array();
  for (const auto& k : m.kernels) kernels.push_back(kernel_to_json(k));
  return {{"format", "mvkl-model"},
          {"version", 1},
          {"hyperparams", hyperparams_to_json(m.hp)},
          {"kernels", kernels},
          {"state", state_to_json(m.state)},
          {"feature_names", m.feature_names},
          {"target_names", m.target_names},
          {"target_mean", m.target_mean},
          {"training_fingerprint", design_fingerprint(m.x_train)},
          {"training_design", matrix_to_json(m.x_train)}};
}

inline SavedModel model_from_json(const json& j) {
  try {
    if (j.value("format", std::string{}) != "mvkl-model") fail(ErrorKind::parse_error, "not an mvkl model document");
    SavedModel m;
    m.hp = hyperparams_from_json(j.at("hyperparams"));
    for (const auto& k : j.at("kernels")) m.kernels.push_back(kernel_from_json(k));
    m.state = state_from_json(j.at("state"));
    m.feature_names = j.value("feature_names", std::vector<std::string>{});
    m.target_names = j.value("target_names", std::vector<std::string>{});
    m.target_mean = j.value("target_mean", std::vector<double>{});
    m.x_train = matrix_from_json(j.at("training_design"), "training_design");
    if (design_fingerprint(m.x_train) != j.at("training_fingerprint").get<std::string>())
      fail(ErrorKind::parse_error, "training design does not match its fingerprint");
    if (m.state.eta.size() != m.kernels.size()) fail(ErrorKind::parse_error, "eta length differs from kernel count");
    if (m.state.c.rows() != m.x_train.rows() || m.state.c.cols() != m.state.l.dim())
      fail(ErrorKind::parse_error, "C does not match the training design and L");
    return m;
  } catch (const json::exception& e) {
    fail(ErrorKind::parse_error, std::string("malformed model document: ") + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io_error, "cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorKind::io_error, "write to '" + path + "' failed");
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io_error, "cannot open '" + path + "' for reading");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::parse_error, path + ": " + e.what());
  }
}

inline void save_model(const std::string& path, const SavedModel& m) { write_json_file(path, model_to_json(m)); }
inline SavedModel load_model(const std::string& path) { return model_from_json(read_json_file(path)); }

// ---------------------------------------------------------------------------
// causal graphs

inline json granger_to_json(const CausalGraph& g, const std::vector<ScalarKernelSpec>& kernels, const GrangerOptions& opt) {
  json slots = json::array();
  for (const auto& s : g.slots) slots.push_back({{"node", s.node}, {"grid_index", s.grid_index}});
  json ks = json::array();
  for (const auto& k : kernels) ks.push_back(kernel_to_json(k));
  json nodes = json::array();
  for (std::size_t i = 0; i < g.node_fits.size(); ++i) {
    const auto& nf = g.node_fits[i];
    json holdout = std::isfinite(nf.holdout_rmse) ? json(nf.holdout_rmse) : json(nullptr);
    nodes.push_back({{"name", g.node_names[i]},
                     {"state", state_to_json(nf.state)},
                     {"target_mean", nf.target_mean},
                     {"holdout_rmse", holdout}});
  }
  return {{"format", "mvkl-granger"},
          {"version", 1},
          {"lag", opt.lag},
          {"kernel_family", opt.family == KernelFamily::linear ? "linear" : "gaussian"},
          {"bandwidth_grid", opt.bandwidth_grid},
          {"hyperparams", hyperparams_to_json(opt.hp)},
          {"row_normalized", opt.row_normalize},
          {"train_rows", g.train_rows},
          {"holdout_rows", g.holdout_rows},
          {"kernels", ks},
          {"kernel_slots", slots},
          {"node_names", g.node_names},
          {"adjacency", matrix_to_json(g.g)},
          {"nodes", nodes}};
}

}  // namespace mvkl::io

// mvkl: command-line front end for multi-kernel vector-valued regression and
// nonlinear graphical Granger causality.
//
// Settings come from an optional JSON file (--config) and are overridden by
// flags. Every failure prints one line `error: <kind>: <message>` to stderr and
// exits nonzero.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "mvkl/bounds.hpp"
#include "mvkl/cross_validation.hpp"
#include "mvkl/error.hpp"
#include "mvkl/granger.hpp"
#include "mvkl/io/csv.hpp"
#include "mvkl/io/model_io.hpp"
#include "mvkl/kernels.hpp"
#include "mvkl/mkl.hpp"
#include "mvkl/selftest.hpp"

namespace {

using mvkl::ErrorKind;
using mvkl::fail;
using json = nlohmann::json;

constexpr int kExitError = 2;
constexpr int kExitCheckFailed = 1;

void configure_logging() {
  auto logger = spdlog::stderr_logger_st("mvkl");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("MVKERNEL_LOG");
  const std::string level = env ? env : "error";
  if (level == "error")
    spdlog::set_level(spdlog::level::err);
  else if (level == "info")
    spdlog::set_level(spdlog::level::info);
  else if (level == "debug")
    spdlog::set_level(spdlog::level::debug);
  else
    fail(ErrorKind::config_error, "MVKERNEL_LOG must be one of error, info, debug (got '" + level + "')");
}

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorKind::config_error, std::string(what) + ": cannot parse '" + item + "' as a number");
    }
  }
  if (out.empty()) fail(ErrorKind::config_error, std::string(what) + ": empty list");
  return out;
}

std::vector<std::string> parse_names(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// ---------------------------------------------------------------------------
// settings: flag > config file > default

struct Flags {
  std::string config;
  double lambda = 0, tau = 0, p = 0, mu = 0, cg_tol = 0, fw_tol = 0, outer_tol = 0, threshold = 0, holdout = 0;
  double norm_budget = 0, kappa = 0;
  std::size_t cg_max_iter = 0, fw_max_iter = 0, outer_max_iter = 0, lag = 0, threads = 0, m = 0, l = 0, r = 0, folds = 0;
  std::uint64_t seed = 0;
  std::string kernel, bandwidths, out, data, targets, model, grams, cv_lambdas, cv_taus;
  bool deterministic = false, row_normalize = false, time_series = false;
  std::map<std::string, CLI::Option*> given;  // options of the selected subcommand

  bool has(const std::string& k) const {
    const auto it = given.find(k);
    return it != given.end() && it->second && it->second->count() > 0;
  }
};

class Settings {
 public:
  explicit Settings(const Flags& f) : flags_(f) {
    if (!f.config.empty()) {
      config_ = mvkl::io::read_json_file(f.config);
      if (!config_.is_object()) fail(ErrorKind::config_error, f.config + ": config must be a JSON object");
    }
  }

  template <class T>
  T get(const std::string& key, const T& flag_value, const T& fallback) const {
    if (flags_.has(key)) return flag_value;
    const std::string ck = json_key(key);
    if (config_.contains(ck)) {
      try {
        return config_.at(ck).get<T>();
      } catch (const json::exception& e) {
        fail(ErrorKind::config_error, "config key '" + ck + "': " + e.what());
      }
    }
    return fallback;
  }

  bool present(const std::string& key) const { return flags_.has(key) || config_.contains(json_key(key)); }

  /// Lists come from a comma-separated flag or a JSON array.
  std::optional<std::vector<double>> list(const std::string& key, const std::string& flag_value) const {
    if (flags_.has(key)) return parse_list(flag_value, key.c_str());
    const std::string ck = json_key(key);
    if (!config_.contains(ck)) return std::nullopt;
    const auto& v = config_.at(ck);
    if (v.is_string()) return parse_list(v.get<std::string>(), key.c_str());
    try {
      return v.get<std::vector<double>>();
    } catch (const json::exception& e) {
      fail(ErrorKind::config_error, "config key '" + ck + "': " + e.what());
    }
  }

  std::vector<std::string> names(const std::string& key, const std::string& flag_value) const {
    if (flags_.has(key)) return parse_names(flag_value);
    const std::string ck = json_key(key);
    if (!config_.contains(ck)) return {};
    const auto& v = config_.at(ck);
    if (v.is_string()) return parse_names(v.get<std::string>());
    try {
      return v.get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      fail(ErrorKind::config_error, "config key '" + ck + "': " + e.what());
    }
  }

 private:
  static std::string json_key(std::string k) {
    std::replace(k.begin(), k.end(), '-', '_');
    return k;
  }

  const Flags& flags_;
  json config_ = json::object();
};

using OptionTable = std::map<std::string, CLI::Option*>;

void add_hyperparam_flags(CLI::App* app, Flags& f, OptionTable& t) {
  t["lambda"] = app->add_option("--lambda", f.lambda, "ridge parameter (default 1e-3)");
  t["tau"] = app->add_option("--tau", f.tau, "trace budget for L (default: output dimension)");
  t["p"] = app->add_option("--p", f.p, "squared l_p regularizer exponent in [1, 2] (default 1)");
  t["mu"] = app->add_option("--mu", f.mu, "use the elastic-net regularizer with this mu in [0, 1]");
  t["cg-tol"] = app->add_option("--cg-tol", f.cg_tol, "CG relative tolerance (default 1e-2)");
  t["cg-max-iter"] = app->add_option("--cg-max-iter", f.cg_max_iter, "CG iteration cap (default 1000)");
  t["fw-tol"] = app->add_option("--fw-tol", f.fw_tol, "Frank-Wolfe relative gap tolerance (default 1e-6)");
  t["fw-max-iter"] = app->add_option("--fw-max-iter", f.fw_max_iter, "Frank-Wolfe iteration cap (default 1000)");
  t["outer-max-iter"] = app->add_option("--outer-max-iter", f.outer_max_iter, "outer sweep cap (default 50)");
  t["outer-tol"] = app->add_option("--outer-tol", f.outer_tol, "outer relative decrease tolerance (default 1e-6)");
  t["seed"] = app->add_option("--seed", f.seed, "random seed (default 0)");
}

void add_common_flags(CLI::App* app, Flags& f, OptionTable& t) {
  app->add_option("--config", f.config, "JSON config file; flags override its keys");
  t["out"] = app->add_option("--out", f.out, "output directory (default '.')");
  t["threads"] = app->add_option("--threads", f.threads, "worker threads (default: hardware concurrency)");
  t["deterministic"] =
      app->add_flag("--deterministic", f.deterministic, "write elapsed_ms as 0 so outputs are byte-reproducible");
}

mvkl::Hyperparams resolve_hyperparams(const Settings& s, const Flags& f, double default_tau) {
  mvkl::Hyperparams hp;
  hp.lambda = s.get("lambda", f.lambda, 1e-3);
  hp.tau = s.get("tau", f.tau, default_tau);
  if (s.present("mu") && s.present("p"))
    fail(ErrorKind::config_error, "--p and --mu select different regularizers; give only one");
  if (s.present("mu"))
    hp.regularizer = mvkl::ElasticNet{s.get("mu", f.mu, 0.5)};
  else
    hp.regularizer = mvkl::LpSquared{s.get("p", f.p, 1.0)};
  hp.cg_rel_tol = s.get("cg-tol", f.cg_tol, hp.cg_rel_tol);
  hp.cg_max_iter = s.get("cg-max-iter", f.cg_max_iter, hp.cg_max_iter);
  hp.fw_tol = s.get("fw-tol", f.fw_tol, hp.fw_tol);
  hp.fw_max_iter = s.get("fw-max-iter", f.fw_max_iter, hp.fw_max_iter);
  hp.outer_max_iter = s.get("outer-max-iter", f.outer_max_iter, hp.outer_max_iter);
  hp.outer_rel_tol = s.get("outer-tol", f.outer_tol, hp.outer_rel_tol);
  hp.seed = s.get("seed", f.seed, std::uint64_t{0});
  try {
    hp.validate();
  } catch (const mvkl::Error& e) {
    fail(ErrorKind::config_error, e.what());
  }
  return hp;
}

std::size_t resolve_threads(const Settings& s, const Flags& f) {
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t t = s.get("threads", f.threads, hw);
  if (t == 0) fail(ErrorKind::config_error, "--threads must be at least 1");
  return t;
}

std::string prepare_out_dir(const Settings& s, const Flags& f) {
  const std::string dir = s.get("out", f.out, std::string("."));
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io_error, "cannot create output directory '" + dir + "': " + ec.message());
  return dir;
}

std::string join(const std::string& dir, const std::string& file) { return (std::filesystem::path(dir) / file).string(); }

std::string required(const Settings& s, const std::string& key, const std::string& flag_value) {
  const std::string v = s.get(key, flag_value, std::string{});
  if (v.empty()) fail(ErrorKind::config_error, "--" + key + " is required");
  return v;
}

void require_file(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) fail(ErrorKind::io_error, "input file '" + path + "' does not exist");
}

void log_fit(const mvkl::ModelState& st, const std::string& label) {
  spdlog::info("{}: objective {:.10g} after {} outer iterations ({})", label, st.objective(), st.outer_iterations,
               st.converged ? "converged" : (st.dead_model ? "dead model" : "iteration cap"));
  for (const auto& e : st.objective_trace)
    spdlog::debug("{}: outer {} block {} objective {:.17g}", label, e.outer_iter, mvkl::to_string(e.block), e.objective);
  if (st.dead_model) spdlog::error("{}: {}", label, st.diagnostic);
}

// ---------------------------------------------------------------------------
// fit

int run_fit(const Flags& f) {
  const Settings s(f);
  const std::string data = required(s, "data", f.data);
  require_file(data);
  const auto targets = s.names("targets", f.targets);
  if (targets.empty()) fail(ErrorKind::config_error, "--targets is required");
  const auto table = mvkl::io::ingest_regression_csv(data, targets);
  const std::size_t l = table.y.rows();
  const std::size_t n = table.y.cols();
  const mvkl::Hyperparams hp = resolve_hyperparams(s, f, static_cast<double>(n));
  const std::string kind = s.get("kernel", f.kernel, std::string("gaussian"));
  const std::string dir = prepare_out_dir(s, f);
  const bool deterministic = s.get("deterministic", f.deterministic, false);

  std::vector<mvkl::ScalarKernelSpec> specs;
  std::vector<mvkl::SymmetricMatrix> grams;
  if (kind == "gaussian") {
    const auto grid = s.list("bandwidths", f.bandwidths).value_or(mvkl::default_bandwidth_grid());
    specs = mvkl::gaussian_group_specs(table.x, {{}}, grid);
  } else if (kind == "linear") {
    specs.push_back(mvkl::ScalarKernelSpec::linear());
  } else if (kind == "precomputed") {
    const auto paths = s.names("grams", f.grams);
    if (paths.empty()) fail(ErrorKind::config_error, "--kernel precomputed needs --grams <path,...>");
    for (const auto& p : paths) {
      require_file(p);
      auto g = mvkl::io::ingest_gram_csv(p);
      if (g.dim() != l)
        fail(ErrorKind::dimension_mismatch, p + ": Gram is " + std::to_string(g.dim()) + " x " + std::to_string(g.dim()) +
                                                ", data has " + std::to_string(l) + " rows");
      specs.push_back(mvkl::ScalarKernelSpec::precomputed(g, p));
    }
  } else {
    fail(ErrorKind::config_error, "--kernel must be gaussian, linear or precomputed (got '" + kind + "')");
  }

  // Targets are centered; the mean is stored with the model and added back at prediction.
  std::vector<double> mean(n, 0.0);
  mvkl::DenseMatrix yc = table.y;
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < l; ++r) mean[c] += yc(r, c);
    mean[c] /= static_cast<double>(l);
    for (std::size_t r = 0; r < l; ++r) yc(r, c) -= mean[c];
  }

  mvkl::Hyperparams chosen = hp;
  const std::size_t folds = s.get("cv-folds", f.folds, std::size_t{0});
  if (folds > 0) {
    const auto lambdas = s.list("cv-lambdas", f.cv_lambdas).value_or(std::vector<double>{hp.lambda});
    const auto taus = s.list("cv-taus", f.cv_taus).value_or(std::vector<double>{hp.tau});
    const auto cv = mvkl::cross_validate(table.x, yc, specs, hp, lambdas, taus, folds,
                                         s.get("time-series", f.time_series, false), resolve_threads(s, f));
    std::ofstream out(join(dir, "cv.csv"), std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io_error, "cannot write '" + join(dir, "cv.csv") + "'");
    out << "lambda,tau,rmse\n";
    for (const auto& g : cv.grid)
      out << mvkl::io::format_double(g.lambda) << ',' << mvkl::io::format_double(g.tau) << ','
          << mvkl::io::format_double(g.pooled_rmse) << '\n';
    chosen.lambda = cv.best.lambda;
    chosen.tau = cv.best.tau;
    spdlog::info("cross-validation picked lambda {} tau {} (rmse {})", chosen.lambda, chosen.tau, cv.best.pooled_rmse);
  }

  const auto dict = mvkl::KernelDictionary::build(specs, table.x);
  const mvkl::ModelState st = mvkl::fit(yc, dict, chosen);
  log_fit(st, "fit");

  mvkl::io::SavedModel model{chosen, specs, st, table.x, table.feature_names, table.target_names, mean};
  mvkl::io::save_model(join(dir, "model.json"), model);
  mvkl::io::emit_trace_csv(join(dir, "trace.csv"), st.objective_trace, deterministic);
  mvkl::io::emit_matrix_csv(join(dir, "L.csv"), st.l.to_dense());
  std::cout << "objective " << mvkl::io::format_double(st.objective()) << '\n'
            << "eta";
  for (double e : st.eta) std::cout << ' ' << mvkl::io::format_double(e);
  std::cout << '\n' << "converged " << (st.converged ? "true" : "false") << '\n';
  return st.dead_model ? kExitCheckFailed : 0;
}

// ---------------------------------------------------------------------------
// predict

int run_predict(const Flags& f) {
  const Settings s(f);
  const std::string model_path = required(s, "model", f.model);
  const std::string data = required(s, "data", f.data);
  require_file(model_path);
  require_file(data);
  const auto model = mvkl::io::load_model(model_path);
  for (const auto& k : model.kernels)
    if (k.is_precomputed())
      fail(ErrorKind::unsupported_prediction, "model uses precomputed kernels, which cannot be evaluated at new points");
  const auto x_new = mvkl::io::ingest_feature_csv(data, model.feature_names);
  const auto dict = mvkl::KernelDictionary::build(model.kernels, model.x_train);
  mvkl::DenseMatrix pred = mvkl::predict_batch(model.state, dict, model.x_train, x_new);
  for (std::size_t r = 0; r < pred.rows(); ++r)
    for (std::size_t c = 0; c < pred.cols() && c < model.target_mean.size(); ++c) pred(r, c) += model.target_mean[c];
  const std::string dir = prepare_out_dir(s, f);
  mvkl::io::emit_matrix_csv(join(dir, "predictions.csv"), pred, model.target_names);
  spdlog::info("wrote {} predictions", pred.rows());
  return 0;
}

// ---------------------------------------------------------------------------
// granger

int run_granger(const Flags& f) {
  const Settings s(f);
  const std::string data = required(s, "data", f.data);
  require_file(data);
  const auto panel = mvkl::io::ingest_timeseries_csv(data);

  mvkl::GrangerOptions opt;
  opt.hp = resolve_hyperparams(s, f, 1.0);
  opt.tau_per_node_dims = !s.present("tau");
  opt.lag = s.get("lag", f.lag, std::size_t{7});
  const std::string kind = s.get("kernel", f.kernel, std::string("gaussian"));
  if (kind == "gaussian")
    opt.family = mvkl::KernelFamily::gaussian;
  else if (kind == "linear")
    opt.family = mvkl::KernelFamily::linear;
  else
    fail(ErrorKind::config_error, "granger supports --kernel gaussian or linear (got '" + kind + "')");
  opt.bandwidth_grid = s.list("bandwidths", f.bandwidths).value_or(mvkl::default_bandwidth_grid());
  opt.holdout_fraction = s.get("holdout", f.holdout, 0.2);
  opt.row_normalize = s.get("row-normalize", f.row_normalize, false);
  opt.threads = resolve_threads(s, f);
  const double threshold = s.get("threshold", f.threshold, 0.0);
  const bool deterministic = s.get("deterministic", f.deterministic, false);
  const std::string dir = prepare_out_dir(s, f);

  const auto graph = mvkl::infer_causal_graph(panel, opt);
  for (std::size_t i = 0; i < graph.node_fits.size(); ++i) log_fit(graph.node_fits[i].state, "node " + panel.node_names[i]);

  // Kernel specs are identical for every node; rebuild them for the document.
  mvkl::LagDesign design = mvkl::lag_embed(panel, opt.lag);
  const auto scaling = mvkl::fit_column_scaling(design.features, graph.train_rows);
  mvkl::apply_column_scaling(design.features, scaling);
  const auto nd = mvkl::build_node_dictionary(mvkl::head_rows(design.features, 0, graph.train_rows), design.blocks,
                                              opt.bandwidth_grid, opt.family);

  mvkl::io::write_json_file(join(dir, "model.json"), mvkl::io::granger_to_json(graph, nd.dictionary.specs(), opt));
  mvkl::io::emit_matrix_csv(join(dir, "adjacency.csv"), graph.g, panel.node_names);
  mvkl::io::emit_graph_dot(join(dir, "graph.dot"), graph.g, panel.node_names, threshold);
  {
    const std::string path = join(dir, "trace.csv");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io_error, "cannot open '" + path + "' for writing");
    std::vector<const std::vector<mvkl::TraceEntry>*> traces;
    for (const auto& nf : graph.node_fits) traces.push_back(&nf.state.objective_trace);
    mvkl::io::write_node_traces_csv(out, panel.node_names, traces, deterministic);
    if (!out) fail(ErrorKind::io_error, "write to '" + path + "' failed");
  }
  for (std::size_t i = 0; i < graph.node_fits.size(); ++i)
    mvkl::io::emit_matrix_csv(join(dir, "L" + std::to_string(i) + ".csv"), graph.output_kernel(i).to_dense());

  for (const auto& e : mvkl::graph_edges(graph.g, threshold))
    std::cout << panel.node_names[e.from] << " -> " << panel.node_names[e.to] << ' '
              << mvkl::io::format_double(e.weight) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// bound

int run_bound(const Flags& f) {
  const Settings s(f);
  mvkl::BoundInputs in;
  in.norm_budget = s.get("norm-budget", f.norm_budget, 1.0);
  in.m = s.get("m", f.m, std::size_t{1});
  in.kappa = s.get("kappa", f.kappa, 1.0);
  in.tau = s.get("tau", f.tau, 1.0);
  in.l = s.get("l", f.l, std::size_t{1});
  in.p = s.get("p", f.p, 1.0);
  if (s.present("r")) in.r = s.get("r", f.r, std::size_t{1});
  const auto res = mvkl::rademacher_bound_detail(in);
  std::cout << "part " << mvkl::to_string(res.part) << '\n';
  if (res.part == mvkl::BoundPart::b) std::cout << "q " << res.q << '\n';
  std::cout << "bound " << mvkl::io::format_double(res.value) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// selftest

int run_selftest(const Flags& f) {
  const Settings s(f);
  const auto seed = s.get("seed", f.seed, std::uint64_t{0});
  std::ostringstream report;
  bool all = true;
  for (const auto& r : mvkl::selftest::run_all(seed)) {
    report << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    all = all && r.passed;
  }
  std::cout << report.str();
  if (s.present("out")) {
    const std::string dir = prepare_out_dir(s, f);
    std::ofstream out(join(dir, "selftest.txt"), std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io_error, "cannot write '" + join(dir, "selftest.txt") + "'");
    out << report.str();
  }
  return all ? 0 : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    configure_logging();
  } catch (const mvkl::Error& e) {
    std::cerr << "error: " << mvkl::to_string(e.kind()) << ": " << e.what() << '\n';
    return kExitError;
  }

  CLI::App app{"Multi-kernel vector-valued regression and nonlinear Granger causality"};
  app.require_subcommand(1);
  Flags f;

  OptionTable fit_t;
  auto* fit = app.add_subcommand("fit", "fit a model on a regression CSV");
  add_common_flags(fit, f, fit_t);
  add_hyperparam_flags(fit, f, fit_t);
  fit_t["data"] = fit->add_option("--data", f.data, "CSV with a header row");
  fit_t["targets"] = fit->add_option("--targets", f.targets, "comma-separated target column names");
  fit_t["kernel"] = fit->add_option("--kernel", f.kernel, "gaussian | linear | precomputed (default gaussian)");
  fit_t["bandwidths"] = fit->add_option("--bandwidths", f.bandwidths, "comma-separated bandwidth multipliers");
  fit_t["grams"] = fit->add_option("--grams", f.grams, "comma-separated Gram CSV paths for --kernel precomputed");
  fit_t["cv-folds"] = fit->add_option("--cv-folds", f.folds, "grid-search lambda and tau with k-fold CV");
  fit_t["cv-lambdas"] = fit->add_option("--cv-lambdas", f.cv_lambdas, "comma-separated lambda grid");
  fit_t["cv-taus"] = fit->add_option("--cv-taus", f.cv_taus, "comma-separated tau grid");
  fit_t["time-series"] = fit->add_flag("--time-series", f.time_series, "use contiguous CV folds");

  OptionTable predict_t;
  auto* predict = app.add_subcommand("predict", "predict with a saved model");
  add_common_flags(predict, f, predict_t);
  predict_t["model"] = predict->add_option("--model", f.model, "model.json written by fit");
  predict_t["data"] = predict->add_option("--data", f.data, "CSV containing the model's feature columns");

  OptionTable granger_t;
  auto* granger = app.add_subcommand("granger", "infer a causal graph from a time-series CSV");
  add_common_flags(granger, f, granger_t);
  add_hyperparam_flags(granger, f, granger_t);
  granger_t["data"] = granger->add_option("--data", f.data, "CSV with header t,<node>.<dim>,...");
  granger_t["lag"] = granger->add_option("--lag", f.lag, "lag order (default 7)");
  granger_t["kernel"] = granger->add_option("--kernel", f.kernel, "gaussian | linear (default gaussian)");
  granger_t["bandwidths"] = granger->add_option("--bandwidths", f.bandwidths, "comma-separated bandwidth multipliers");
  granger_t["threshold"] = granger->add_option("--threshold", f.threshold, "edge threshold for graph.dot (default 0)");
  granger_t["holdout"] = granger->add_option("--holdout", f.holdout, "trailing holdout fraction (default 0.2)");
  granger_t["row-normalize"] = granger->add_flag("--row-normalize", f.row_normalize, "normalize each row of G to sum 1");

  OptionTable bound_t;
  auto* bound = app.add_subcommand("bound", "evaluate the Rademacher complexity bounds");
  bound->add_option("--config", f.config, "JSON config file; flags override its keys");
  bound_t["norm-budget"] = bound->add_option("--norm-budget", f.norm_budget, "hypothesis-class radius (default 1)");
  bound_t["m"] = bound->add_option("--m", f.m, "number of kernels (default 1)");
  bound_t["kappa"] = bound->add_option("--kappa", f.kappa, "bound on k(x, x) (default 1)");
  bound_t["tau"] = bound->add_option("--tau", f.tau, "trace budget (default 1)");
  bound_t["l"] = bound->add_option("--l", f.l, "sample count (default 1)");
  bound_t["p"] = bound->add_option("--p", f.p, "norm exponent p >= 1 (default 1)");
  bound_t["r"] = bound->add_option("--r", f.r, "moment order for p = 1 (default ceil(2 ln m))");

  OptionTable selftest_t;
  auto* selftest = app.add_subcommand("selftest", "run the built-in oracle-equivalence checks");
  selftest->add_option("--config", f.config, "JSON config file; flags override its keys");
  selftest_t["seed"] = selftest->add_option("--seed", f.seed, "seed (default 0)");
  selftest_t["out"] = selftest->add_option("--out", f.out, "also write selftest.txt here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: config-error: " << msg << '\n';
    return kExitError;
  }

  try {
    if (*fit) {
      f.given = fit_t;
      return run_fit(f);
    }
    if (*predict) {
      f.given = predict_t;
      return run_predict(f);
    }
    if (*granger) {
      f.given = granger_t;
      return run_granger(f);
    }
    if (*bound) {
      f.given = bound_t;
      return run_bound(f);
    }
    if (*selftest) {
      f.given = selftest_t;
      return run_selftest(f);
    }
  } catch (const mvkl::Error& e) {
    std::cerr << "error: " << mvkl::to_string(e.kind()) << ": " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

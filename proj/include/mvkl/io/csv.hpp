#pragma once

// CSV ingestion and emission. Floats are written in shortest round-trip form,
// so emit-then-ingest reproduces every value bit for bit.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <vector>

#include "mvkl/error.hpp"
#include "mvkl/granger.hpp"
#include "mvkl/matrix.hpp"
#include "mvkl/mkl.hpp"

namespace mvkl::io {

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

namespace detail {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string location(const std::string& source, std::size_t line, std::size_t col) {
  return source + ":" + std::to_string(line) + ":" + std::to_string(col);
}

// Blank lines are skipped. With `has_header` the first non-blank line is the header.
inline CsvTable parse_table(std::istream& in, const std::string& source, bool has_header) {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = !has_header;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_line(line);
    if (!header_seen) {
      t.header = std::move(fields);
      header_seen = true;
      continue;
    }
    const std::size_t width = has_header ? t.header.size() : (t.rows.empty() ? fields.size() : t.rows.front().size());
    if (fields.size() != width)
      fail(ErrorKind::parse_error, location(source, lineno, std::min(fields.size(), width) + 1) + ": expected " +
                                       std::to_string(width) + " fields, found " + std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(lineno);
  }
  if (has_header && !header_seen) fail(ErrorKind::insufficient_data, source + ": file is empty");
  return t;
}

inline double parse_number(const std::string& field, const std::string& source, std::size_t line, std::size_t col) {
  if (field.empty()) fail(ErrorKind::parse_error, location(source, line, col) + ": missing value");
  double v = 0.0;
  const char* first = field.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, field.data() + field.size(), v);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
    fail(ErrorKind::parse_error, location(source, line, col) + ": not a number: '" + field + "'");
  if (!std::isfinite(v)) fail(ErrorKind::parse_error, location(source, line, col) + ": missing or non-finite value");
  return v;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io_error, "cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io_error, "cannot open '" + path + "' for writing");
  return out;
}

inline void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) fail(ErrorKind::io_error, "write to '" + path + "' failed");
}

inline void check_unique(const std::vector<std::string>& names, const std::string& source, std::size_t line) {
  std::set<std::string> seen;
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (names[c].empty()) fail(ErrorKind::parse_error, location(source, line, c + 1) + ": empty column name");
    if (!seen.insert(names[c]).second)
      fail(ErrorKind::parse_error, location(source, line, c + 1) + ": duplicate column name '" + names[c] + "'");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// time series panels: header `t,<node>.<dim>,...`

inline TimeSeriesPanel parse_timeseries_csv(std::istream& in, const std::string& source = "<stream>") {
  const auto table = detail::parse_table(in, source, true);
  const auto& h = table.header;
  if (h.empty() || h.front() != "t")
    fail(ErrorKind::parse_error, detail::location(source, 1, 1) + ": first column must be named 't'");
  if (h.size() < 2) fail(ErrorKind::parse_error, detail::location(source, 1, 2) + ": no series columns");
  detail::check_unique(h, source, 1);

  // Group columns by node prefix, keeping first-appearance order of nodes and
  // the file order of columns within a node.
  TimeSeriesPanel p;
  std::unordered_map<std::string, std::size_t> node_index;
  std::vector<std::vector<std::size_t>> node_columns;
  for (std::size_t c = 1; c < h.size(); ++c) {
    const std::size_t dot = h[c].find('.');
    const std::string node = dot == std::string::npos ? h[c] : h[c].substr(0, dot);
    if (node.empty())
      fail(ErrorKind::parse_error, detail::location(source, 1, c + 1) + ": column '" + h[c] + "' has an empty node name");
    auto [it, inserted] = node_index.try_emplace(node, p.node_names.size());
    if (inserted) {
      p.node_names.push_back(node);
      node_columns.emplace_back();
    }
    node_columns[it->second].push_back(c);
  }
  if (table.rows.empty()) fail(ErrorKind::insufficient_data, source + ": no data rows");

  std::vector<std::size_t> order;
  for (const auto& cols : node_columns) {
    p.dims.push_back(cols.size());
    order.insert(order.end(), cols.begin(), cols.end());
  }
  p.values = DenseMatrix(table.rows.size(), order.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::size_t line = table.line_numbers[r];
    const double t = detail::parse_number(table.rows[r][0], source, line, 1);
    if (!p.time.empty() && !(t > p.time.back()))
      fail(ErrorKind::parse_error, detail::location(source, line, 1) + ": time index is not strictly increasing");
    p.time.push_back(t);
    for (std::size_t k = 0; k < order.size(); ++k)
      p.values(r, k) = detail::parse_number(table.rows[r][order[k]], source, line, order[k] + 1);
  }
  return p;
}

inline TimeSeriesPanel ingest_timeseries_csv(const std::string& path) {
  auto in = detail::open_input(path);
  return parse_timeseries_csv(in, path);
}

inline void write_timeseries_csv(std::ostream& out, const TimeSeriesPanel& p) {
  out << 't';
  for (std::size_t j = 0; j < p.node_count(); ++j)
    for (std::size_t k = 0; k < p.dims[j]; ++k) out << ',' << p.node_names[j] << '.' << k;
  out << '\n';
  for (std::size_t r = 0; r < p.length(); ++r) {
    out << format_double(p.time[r]);
    for (std::size_t c = 0; c < p.values.cols(); ++c) out << ',' << format_double(p.values(r, c));
    out << '\n';
  }
}

inline void emit_timeseries_csv(const std::string& path, const TimeSeriesPanel& p) {
  auto out = detail::open_output(path);
  write_timeseries_csv(out, p);
  detail::finish(out, path);
}

// ---------------------------------------------------------------------------
// regression tables

struct RegressionData {
  DenseMatrix x;
  DenseMatrix y;
  std::vector<std::string> feature_names;
  std::vector<std::string> target_names;
};

/// Named target columns become Y (in the requested order); every other column is X.
inline RegressionData parse_regression_csv(std::istream& in, const std::vector<std::string>& targets,
                                           const std::string& source = "<stream>") {
  const auto table = detail::parse_table(in, source, true);
  const auto& h = table.header;
  detail::check_unique(h, source, 1);
  if (targets.empty()) fail(ErrorKind::config_error, "at least one target column is required");
  std::vector<std::size_t> target_cols;
  for (const auto& name : targets) {
    const auto it = std::find(h.begin(), h.end(), name);
    if (it == h.end()) fail(ErrorKind::config_error, source + ": unknown target column '" + name + "'");
    target_cols.push_back(static_cast<std::size_t>(it - h.begin()));
  }
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < h.size(); ++c)
    if (std::find(target_cols.begin(), target_cols.end(), c) == target_cols.end()) feature_cols.push_back(c);
  if (table.rows.empty()) fail(ErrorKind::insufficient_data, source + ": no data rows");
  if (feature_cols.empty()) fail(ErrorKind::config_error, source + ": no feature columns remain after the targets");

  RegressionData d;
  d.x = DenseMatrix(table.rows.size(), feature_cols.size());
  d.y = DenseMatrix(table.rows.size(), target_cols.size());
  for (std::size_t c : feature_cols) d.feature_names.push_back(h[c]);
  d.target_names = targets;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::size_t line = table.line_numbers[r];
    for (std::size_t k = 0; k < feature_cols.size(); ++k)
      d.x(r, k) = detail::parse_number(table.rows[r][feature_cols[k]], source, line, feature_cols[k] + 1);
    for (std::size_t k = 0; k < target_cols.size(); ++k)
      d.y(r, k) = detail::parse_number(table.rows[r][target_cols[k]], source, line, target_cols[k] + 1);
  }
  return d;
}

inline RegressionData ingest_regression_csv(const std::string& path, const std::vector<std::string>& targets) {
  auto in = detail::open_input(path);
  if (in.peek() == std::ifstream::traits_type::eof()) fail(ErrorKind::insufficient_data, path + ": file is empty");
  return parse_regression_csv(in, targets, path);
}

/// Feature-only table (for prediction inputs); columns are matched by name.
inline DenseMatrix ingest_feature_csv(const std::string& path, const std::vector<std::string>& feature_names) {
  auto in = detail::open_input(path);
  const auto table = detail::parse_table(in, path, true);
  detail::check_unique(table.header, path, 1);
  std::vector<std::size_t> cols;
  for (const auto& name : feature_names) {
    const auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) fail(ErrorKind::config_error, path + ": missing feature column '" + name + "'");
    cols.push_back(static_cast<std::size_t>(it - table.header.begin()));
  }
  if (table.rows.empty()) fail(ErrorKind::insufficient_data, path + ": no data rows");
  DenseMatrix x(table.rows.size(), cols.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r)
    for (std::size_t k = 0; k < cols.size(); ++k)
      x(r, k) = detail::parse_number(table.rows[r][cols[k]], path, table.line_numbers[r], cols[k] + 1);
  return x;
}

/// Square numeric CSV without a header, read as a symmetric Gram matrix.
inline SymmetricMatrix ingest_gram_csv(const std::string& path) {
  auto in = detail::open_input(path);
  const auto table = detail::parse_table(in, path, false);
  const std::size_t n = table.rows.size();
  if (n == 0) fail(ErrorKind::insufficient_data, path + ": Gram file is empty");
  if (table.rows.front().size() != n)
    fail(ErrorKind::parse_error, path + ": Gram matrix must be square, found " + std::to_string(n) + " rows and " +
                                     std::to_string(table.rows.front().size()) + " columns");
  DenseMatrix g(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) g(r, c) = detail::parse_number(table.rows[r][c], path, table.line_numbers[r], c + 1);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = r + 1; c < n; ++c)
      if (std::abs(g(r, c) - g(c, r)) > 1e-12 * std::max({1.0, std::abs(g(r, c)), std::abs(g(c, r))}))
        fail(ErrorKind::parse_error, detail::location(path, table.line_numbers[r], c + 1) + ": Gram matrix is not symmetric");
  return SymmetricMatrix::symmetrize(g);
}

// ---------------------------------------------------------------------------
// emitters

inline void write_matrix_csv(std::ostream& out, const DenseMatrix& m, const std::vector<std::string>& header = {}) {
  if (!header.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_double(m(r, c));
    out << '\n';
  }
}

inline void emit_matrix_csv(const std::string& path, const DenseMatrix& m, const std::vector<std::string>& header = {}) {
  auto out = detail::open_output(path);
  write_matrix_csv(out, m, header);
  detail::finish(out, path);
}

/// Reads back what emit_matrix_csv wrote; `has_header` drops the first line.
inline DenseMatrix ingest_matrix_csv(const std::string& path, bool has_header) {
  auto in = detail::open_input(path);
  const auto table = detail::parse_table(in, path, has_header);
  const std::size_t cols = has_header ? table.header.size() : (table.rows.empty() ? 0 : table.rows.front().size());
  DenseMatrix m(table.rows.size(), cols);
  for (std::size_t r = 0; r < table.rows.size(); ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = detail::parse_number(table.rows[r][c], path, table.line_numbers[r], c + 1);
  return m;
}

namespace detail {

inline void write_trace_row(std::ostream& out, const TraceEntry& e, bool zero_elapsed) {
  out << e.outer_iter << ',' << to_string(e.block) << ',' << format_double(e.objective) << ','
      << format_double(zero_elapsed ? 0.0 : e.elapsed_ms) << '\n';
}

}  // namespace detail

/// Header `outer_iter,block_tag,objective,elapsed_ms`, one row per recorded block.
inline void write_trace_csv(std::ostream& out, const std::vector<TraceEntry>& trace, bool zero_elapsed = false) {
  out << "outer_iter,block_tag,objective,elapsed_ms\n";
  for (const auto& e : trace) detail::write_trace_row(out, e, zero_elapsed);
}

/// Per-node traces concatenated in node order, with a leading `node` column.
inline void write_node_traces_csv(std::ostream& out, const std::vector<std::string>& names,
                                  const std::vector<const std::vector<TraceEntry>*>& traces, bool zero_elapsed = false) {
  require(names.size() == traces.size(), ErrorKind::dimension_mismatch, "one trace per node required");
  out << "node,outer_iter,block_tag,objective,elapsed_ms\n";
  for (std::size_t i = 0; i < names.size(); ++i)
    for (const auto& e : *traces[i]) {
      out << names[i] << ',';
      detail::write_trace_row(out, e, zero_elapsed);
    }
}

inline void emit_trace_csv(const std::string& path, const std::vector<TraceEntry>& trace, bool zero_elapsed = false) {
  auto out = detail::open_output(path);
  write_trace_csv(out, trace, zero_elapsed);
  detail::finish(out, path);
}

inline std::string dot_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + '"';
}

/// Directed graph with an edge j → i for every off-diagonal G[i][j] > threshold.
inline void write_graph_dot(std::ostream& out, const DenseMatrix& g, const std::vector<std::string>& names,
                            double threshold) {
  require(g.rows() == names.size() && g.cols() == names.size(), ErrorKind::dimension_mismatch,
          "graph and node names differ in size");
  out << "digraph granger {\n";
  for (const auto& n : names) out << "  " << dot_quote(n) << ";\n";
  for (const auto& e : graph_edges(g, threshold))
    out << "  " << dot_quote(names[e.from]) << " -> " << dot_quote(names[e.to]) << " [label=\""
        << format_double(e.weight) << "\", weight=" << format_double(e.weight) << "];\n";
  out << "}\n";
}

inline void emit_graph_dot(const std::string& path, const DenseMatrix& g, const std::vector<std::string>& names,
                           double threshold) {
  auto out = detail::open_output(path);
  write_graph_dot(out, g, names, threshold);
  detail::finish(out, path);
}

}  // namespace mvkl::io

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "panelse/errors.hpp"
#include "panelse/format.hpp"

namespace panelse {

/// Column-name mapping for long-format CSV input. An empty x_cols means
/// "every column other than unit/time/y, in header order".
struct CsvSchema {
  std::string unit_col = "unit";
  std::string time_col = "time";
  std::string y_col = "y";
  std::vector<std::string> x_cols;
};

/// Immutable balanced N x T panel: outcome y plus k regressors, with unit and
/// time labels. Matrices are indexed (unit, period). Safe to share across
/// concurrent readers once constructed.
class PanelData {
 public:
  PanelData(Eigen::MatrixXd y, std::vector<Eigen::MatrixXd> x,
            std::vector<std::string> unit_labels,
            std::vector<std::string> time_labels, bool demeaned = false,
            std::vector<std::string> regressor_labels = {})
      : y_(std::move(y)),
        x_(std::move(x)),
        unit_labels_(std::move(unit_labels)),
        time_labels_(std::move(time_labels)),
        regressor_labels_(std::move(regressor_labels)),
        demeaned_(demeaned) {
    if (regressor_labels_.empty()) {
      for (size_t j = 0; j < x_.size(); ++j)
        regressor_labels_.push_back("x" + std::to_string(j + 1));
    }
    if (regressor_labels_.size() != x_.size())
      throw ShapeMismatch("regressor label count does not match regressors");
    const auto n = y_.rows();
    const auto t = y_.cols();
    if (n == 0 || t == 0) throw EmptyInput("panel has no cells");
    if (x_.empty()) throw ShapeMismatch("panel needs at least one regressor");
    for (const auto& xr : x_) {
      if (xr.rows() != n || xr.cols() != t)
        throw ShapeMismatch("regressor matrix shape does not match outcome");
    }
    if (static_cast<long>(unit_labels_.size()) != n ||
        static_cast<long>(time_labels_.size()) != t)
      throw ShapeMismatch("label lengths do not match panel dimensions");
    if (!y_.allFinite()) throw ParseFailure("outcome contains non-finite values");
    for (const auto& xr : x_)
      if (!xr.allFinite())
        throw ParseFailure("regressor contains non-finite values");
  }

  int n_units() const { return static_cast<int>(y_.rows()); }
  int n_periods() const { return static_cast<int>(y_.cols()); }
  int n_regressors() const { return static_cast<int>(x_.size()); }
  long nt() const { return static_cast<long>(y_.size()); }

  const Eigen::MatrixXd& y() const { return y_; }
  const std::vector<Eigen::MatrixXd>& x() const { return x_; }
  const Eigen::MatrixXd& x(int r) const { return x_.at(static_cast<size_t>(r)); }
  const std::vector<std::string>& unit_labels() const { return unit_labels_; }
  const std::vector<std::string>& time_labels() const { return time_labels_; }
  const std::vector<std::string>& regressor_labels() const { return regressor_labels_; }
  bool demeaned() const { return demeaned_; }

 private:
  Eigen::MatrixXd y_;
  std::vector<Eigen::MatrixXd> x_;
  std::vector<std::string> unit_labels_;
  std::vector<std::string> time_labels_;
  std::vector<std::string> regressor_labels_;
  bool demeaned_;
};

/// Means removed by the within transform, series order: y, x1, ..., xk.
struct DemeanReport {
  Eigen::MatrixXd unit_means;  // N x (k+1)
  Eigen::MatrixXd time_means;  // T x (k+1)
  Eigen::VectorXd grand_mean;  // k+1
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc{} && ptr == e && std::isfinite(out);
}

inline bool parse_int64(const std::string& s, std::int64_t& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc{} && ptr == e;
}

}  // namespace detail

/// Reads a long-format balanced panel. Rows are grouped by unit (first
/// appearance order) and sorted by time; times sort numerically when every
/// label parses as an integer, lexicographically otherwise (ISO dates).
inline PanelData load_csv(const std::string& path, const CsvSchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw ParseFailure("cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw EmptyInput("empty file: " + path);
  const auto header = detail::split_csv_line(line);

  auto col_of = [&](const std::string& name) -> int {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int unit_col = col_of(schema.unit_col);
  const int time_col = col_of(schema.time_col);
  const int y_col = col_of(schema.y_col);
  if (unit_col < 0) throw ParseFailure("missing column: " + schema.unit_col);
  if (time_col < 0) throw ParseFailure("missing column: " + schema.time_col);
  if (y_col < 0) throw ParseFailure("missing column: " + schema.y_col);

  std::vector<std::string> x_names = schema.x_cols;
  if (x_names.empty()) {
    for (int c = 0; c < static_cast<int>(header.size()); ++c)
      if (c != unit_col && c != time_col && c != y_col)
        x_names.push_back(header[static_cast<size_t>(c)]);
  }
  if (x_names.empty())
    throw ParseFailure("no regressor columns found in " + path);
  std::vector<int> x_cols;
  for (const auto& name : x_names) {
    int c = col_of(name);
    if (c < 0) throw ParseFailure("missing column: " + name);
    x_cols.push_back(c);
  }
  const int k = static_cast<int>(x_cols.size());

  struct Row {
    std::string unit, time;
    double y;
    std::vector<double> x;
    long line_no;
  };
  std::vector<Row> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (static_cast<int>(fields.size()) < static_cast<int>(header.size()))
      throw ParseFailure("row " + std::to_string(line_no) + ": expected " +
                         std::to_string(header.size()) + " fields, got " +
                         std::to_string(fields.size()));
    Row r;
    r.unit = fields[static_cast<size_t>(unit_col)];
    r.time = fields[static_cast<size_t>(time_col)];
    r.line_no = line_no;
    if (!detail::parse_double(fields[static_cast<size_t>(y_col)], r.y))
      throw ParseFailure("row " + std::to_string(line_no) +
                         ": cannot parse y value \"" +
                         fields[static_cast<size_t>(y_col)] + "\"");
    r.x.resize(static_cast<size_t>(k));
    for (int j = 0; j < k; ++j) {
      if (!detail::parse_double(fields[static_cast<size_t>(x_cols[static_cast<size_t>(j)])],
                                r.x[static_cast<size_t>(j)]))
        throw ParseFailure("row " + std::to_string(line_no) +
                           ": cannot parse " + x_names[static_cast<size_t>(j)] +
                           " value \"" +
                           fields[static_cast<size_t>(x_cols[static_cast<size_t>(j)])] + "\"");
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw EmptyInput("no data rows in " + path);

  // Unit order: first appearance. Time order: numeric if possible, else
  // lexicographic (correct for ISO dates).
  std::vector<std::string> units, times;
  std::unordered_map<std::string, int> unit_idx, time_idx;
  for (const auto& r : rows) {
    if (unit_idx.emplace(r.unit, static_cast<int>(units.size())).second)
      units.push_back(r.unit);
    if (time_idx.emplace(r.time, 0).second) times.push_back(r.time);
  }
  bool all_int = true;
  std::vector<std::int64_t> numeric(times.size());
  for (size_t i = 0; i < times.size(); ++i)
    if (!detail::parse_int64(times[i], numeric[i])) {
      all_int = false;
      break;
    }
  if (all_int) {
    std::sort(times.begin(), times.end(), [](const std::string& a, const std::string& b) {
      std::int64_t va = 0, vb = 0;
      detail::parse_int64(a, va);
      detail::parse_int64(b, vb);
      return va < vb;
    });
  } else {
    std::sort(times.begin(), times.end());
  }
  for (size_t i = 0; i < times.size(); ++i) time_idx[times[i]] = static_cast<int>(i);

  const int n = static_cast<int>(units.size());
  const int t = static_cast<int>(times.size());
  const double unset = std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd y = Eigen::MatrixXd::Constant(n, t, unset);
  std::vector<Eigen::MatrixXd> x(static_cast<size_t>(k),
                                 Eigen::MatrixXd::Constant(n, t, unset));
  for (const auto& r : rows) {
    const int i = unit_idx[r.unit];
    const int j = time_idx[r.time];
    if (!std::isnan(y(i, j)))
      throw DuplicateCell("duplicate cell (unit=" + r.unit + ", time=" + r.time +
                          ") at row " + std::to_string(r.line_no));
    y(i, j) = r.y;
    for (int c = 0; c < k; ++c) x[static_cast<size_t>(c)](i, j) = r.x[static_cast<size_t>(c)];
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < t; ++j)
      if (std::isnan(y(i, j)))
        throw MissingCell("missing cell (unit=" + units[static_cast<size_t>(i)] +
                          ", time=" + times[static_cast<size_t>(j)] + ")");

  return PanelData(std::move(y), std::move(x), std::move(units), std::move(times),
                   /*demeaned=*/false, std::move(x_names));
}

/// Writes the panel back to long-format CSV at full (round-trip) precision.
inline void save_csv(const PanelData& data, const std::string& path,
                     const CsvSchema& schema = {}) {
  std::ofstream out(path);
  if (!out) throw ParseFailure("cannot open file for writing: " + path);
  out << schema.unit_col << ',' << schema.time_col << ',' << schema.y_col;
  for (int j = 0; j < data.n_regressors(); ++j) {
    if (j < static_cast<int>(schema.x_cols.size()))
      out << ',' << schema.x_cols[static_cast<size_t>(j)];
    else
      out << ',' << data.regressor_labels()[static_cast<size_t>(j)];
  }
  out << '\n';
  for (int i = 0; i < data.n_units(); ++i) {
    for (int t = 0; t < data.n_periods(); ++t) {
      out << data.unit_labels()[static_cast<size_t>(i)] << ','
          << data.time_labels()[static_cast<size_t>(t)] << ','
          << detail::format_full(data.y()(i, t));
      for (int j = 0; j < data.n_regressors(); ++j)
        out << ',' << detail::format_full(data.x(j)(i, t));
      out << '\n';
    }
  }
}

namespace detail {

inline void demean_series(const Eigen::MatrixXd& z, Eigen::MatrixXd& out,
                          Eigen::Ref<Eigen::VectorXd> unit_means,
                          Eigen::Ref<Eigen::VectorXd> time_means, double& grand) {
  unit_means = z.rowwise().mean();
  time_means = z.colwise().mean().transpose();
  grand = z.mean();
  out = z;
  out.colwise() -= unit_means;
  out.rowwise() -= time_means.transpose();
  out.array() += grand;
}

}  // namespace detail

/// Two-way within transform: z~_it = z_it - mean_i - mean_t + grand mean,
/// applied to the outcome and every regressor.
inline std::pair<PanelData, DemeanReport> within_transform(const PanelData& data) {
  if (data.demeaned()) throw AlreadyDemeaned("panel is already demeaned");
  const int n = data.n_units();
  const int t = data.n_periods();
  const int k = data.n_regressors();

  DemeanReport report;
  report.unit_means.resize(n, k + 1);
  report.time_means.resize(t, k + 1);
  report.grand_mean.resize(k + 1);

  Eigen::MatrixXd y_out;
  detail::demean_series(data.y(), y_out, report.unit_means.col(0),
                        report.time_means.col(0), report.grand_mean(0));
  std::vector<Eigen::MatrixXd> x_out(static_cast<size_t>(k));
  for (int j = 0; j < k; ++j)
    detail::demean_series(data.x(j), x_out[static_cast<size_t>(j)],
                          report.unit_means.col(j + 1), report.time_means.col(j + 1),
                          report.grand_mean(j + 1));

  PanelData out(std::move(y_out), std::move(x_out), data.unit_labels(),
                data.time_labels(), /*demeaned=*/true, data.regressor_labels());
  return {std::move(out), std::move(report)};
}

}  // namespace panelse

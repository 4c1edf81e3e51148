#pragma once

#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "panelse/cov_estimators.hpp"
#include "panelse/format.hpp"
#include "panelse/inference.hpp"
#include "panelse/mc_lab.hpp"
#include "panelse/tuning.hpp"

namespace panelse::io {

// ---------------------------------------------------------------------------
// Experiment tables
// ---------------------------------------------------------------------------

/// CSV with header `N,T,L,M,estimator,reject_rate,reps,mc_se`, full precision.
/// L is empty for bandwidth-free estimators, M for non-thresholded ones.
inline void write_experiment_csv(const mc::ExperimentTable& table, std::ostream& out) {
  out << "N,T,L,M,estimator,reject_rate,reps,mc_se\n";
  for (const auto& row : table.rows) {
    out << row.n << ',' << row.t << ',';
    if (row.bandwidth) out << *row.bandwidth;
    out << ',';
    if (row.threshold) out << detail::format_full(*row.threshold);
    out << ',' << estimator_tag(row.estimator) << ','
        << detail::format_full(row.reject_rate) << ',' << row.reps << ','
        << detail::format_full(row.mc_se) << '\n';
  }
}

inline std::string experiment_csv(const mc::ExperimentTable& table) {
  std::ostringstream out;
  write_experiment_csv(table, out);
  return out.str();
}

namespace detail_io {

inline const mc::ExperimentRow* find_row(const mc::ExperimentTable& table,
                                         EstimatorKind e, std::optional<int> l,
                                         std::optional<double> m) {
  for (const auto& row : table.rows)
    if (row.estimator == e && row.bandwidth == l && row.threshold == m) return &row;
  return nullptr;
}

inline std::string dgp_summary(const mc::DgpSpec& dgp) {
  std::ostringstream out;
  switch (dgp.kind) {
    case mc::DgpCase::Case1:
      out << "case 1 (rho=" << panelse::detail::format_full(dgp.case1.rho)
          << ", gamma=" << panelse::detail::format_full(dgp.case1.gamma) << ")";
      break;
    case mc::DgpCase::Case2:
      out << "case 2, SAR(1) (psi=" << panelse::detail::format_full(dgp.case2.psi)
          << ")";
      break;
    case mc::DgpCase::Case3:
      out << "case 3, factor structure (r=" << dgp.case3.r
          << ", rho_F=" << panelse::detail::format_full(dgp.case3.rho_f)
          << ", rho_lambda=" << panelse::detail::format_full(dgp.case3.rho_lambda)
          << ")";
      break;
  }
  return out.str();
}

}  // namespace detail_io

/// Text table mirroring the paper layout: one row per bandwidth, threshold
/// columns first, then the bandwidth-free columns repeated down the rows.
inline std::string experiment_text(const mc::ExperimentTable& table) {
  using panelse::detail::format_rate;
  std::ostringstream out;
  out << "Null rejection probabilities, " << table.level * 100 << "% level, "
      << detail_io::dgp_summary(table.dgp) << "\n";
  out << "N=" << table.dgp.n << " T=" << table.dgp.t << " seed=" << table.base_seed
      << "\n\n";

  std::vector<EstimatorKind> present;
  const EstimatorKind order[] = {EstimatorKind::HardThreshold,
                                 EstimatorKind::SoftThreshold,
                                 EstimatorKind::Hac,
                                 EstimatorKind::DriscollKraay,
                                 EstimatorKind::ClusterUnits,
                                 EstimatorKind::ClusterTimes,
                                 EstimatorKind::White};
  for (EstimatorKind e : order)
    for (const auto& row : table.rows)
      if (row.estimator == e) {
        present.push_back(e);
        break;
      }

  const int w = 7;
  auto pad = [&](const std::string& s) {
    std::ostringstream o;
    o << std::setw(w) << s;
    return o.str();
  };

  out << std::setw(6) << "L \\ M";
  for (EstimatorKind e : present) {
    if (mc::detail::uses_threshold(e)) {
      for (double m : table.thresholds) out << pad(format_rate(m));
    } else {
      out << pad(estimator_tag(e));
    }
  }
  out << '\n';

  for (int l : table.bandwidths) {
    out << std::setw(6) << l;
    for (EstimatorKind e : present) {
      auto emit = [&](const mc::ExperimentRow* row) {
        out << pad(row ? format_rate(row->reject_rate) : "-");
      };
      if (mc::detail::uses_threshold(e)) {
        for (double m : table.thresholds)
          emit(detail_io::find_row(table, e, l, m));
      } else if (mc::detail::uses_bandwidth(e)) {
        emit(detail_io::find_row(table, e, l, std::nullopt));
      } else {
        emit(detail_io::find_row(table, e, std::nullopt, std::nullopt));
      }
    }
    out << '\n';
  }

  out << "\nMC standard errors\n";
  for (int l : table.bandwidths) {
    out << std::setw(6) << l;
    for (EstimatorKind e : present) {
      auto emit = [&](const mc::ExperimentRow* row) {
        out << pad(row ? format_rate(row->mc_se) : "-");
      };
      if (mc::detail::uses_threshold(e)) {
        for (double m : table.thresholds) emit(detail_io::find_row(table, e, l, m));
      } else if (mc::detail::uses_bandwidth(e)) {
        emit(detail_io::find_row(table, e, l, std::nullopt));
      } else {
        emit(detail_io::find_row(table, e, std::nullopt, std::nullopt));
      }
    }
    out << '\n';
  }

  // A cell with more than 1% failed replications is suspect.
  for (const auto& row : table.rows)
    if (row.failures * 100 > row.reps + row.failures)
      out << "warning: " << estimator_tag(row.estimator)
          << (row.bandwidth ? " L=" + std::to_string(*row.bandwidth) : "")
          << (row.threshold ? " M=" + panelse::detail::format_full(*row.threshold) : "")
          << " had " << row.failures << " failed replications\n";
  return out.str();
}

inline nlohmann::json experiment_json(const mc::ExperimentTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json r;
    r["N"] = row.n;
    r["T"] = row.t;
    r["L"] = row.bandwidth ? nlohmann::json(*row.bandwidth) : nlohmann::json();
    r["M"] = row.threshold ? nlohmann::json(*row.threshold) : nlohmann::json();
    r["estimator"] = estimator_tag(row.estimator);
    r["reject_rate"] = row.reject_rate;
    r["reps"] = row.reps;
    r["mc_se"] = row.mc_se;
    r["failures"] = row.failures;
    rows.push_back(std::move(r));
  }
  return nlohmann::json{{"level", table.level},
                        {"seed", table.base_seed},
                        {"rows", std::move(rows)}};
}

// ---------------------------------------------------------------------------
// Estimate reports
// ---------------------------------------------------------------------------

/// One requested estimator's column in an estimate report. `report` is empty
/// when the estimator failed (e.g. nonpositive variance on a degenerate fit).
struct EstimatorColumn {
  std::string tag;
  std::optional<InferenceReport> report;
  std::string error;
  std::optional<int> bandwidth;
  std::optional<double> threshold_m;
  std::optional<long> kept_blocks;
};

/// Aligned text table: one coefficient column, one SE column per estimator,
/// stars marking significance at the report level.
inline std::string estimate_text(const Eigen::VectorXd& beta,
                                 const std::vector<std::string>& coef_names,
                                 const std::vector<EstimatorColumn>& columns) {
  using panelse::detail::format_rate;
  std::ostringstream out;
  const int name_w = 14, col_w = 10;
  out << std::left << std::setw(name_w) << "coef" << std::right << std::setw(col_w)
      << "estimate";
  for (const auto& col : columns) out << std::setw(col_w) << ("se_" + col.tag);
  out << '\n';
  for (int j = 0; j < beta.size(); ++j) {
    out << std::left << std::setw(name_w) << coef_names[static_cast<size_t>(j)]
        << std::right << std::setw(col_w) << format_rate(beta(j));
    for (const auto& col : columns) {
      if (col.report) {
        std::string cell = format_rate(col.report->se(j));
        if (col.report->reject[static_cast<size_t>(j)]) cell += "*";
        out << std::setw(col_w) << cell;
      } else {
        out << std::setw(col_w) << "n/a";
      }
    }
    out << '\n';
  }
  for (const auto& col : columns)
    if (!col.report)
      out << "note: " << col.tag << " unavailable: " << col.error << '\n';
  return out.str();
}

inline std::string estimate_csv(const Eigen::VectorXd& beta,
                                const std::vector<std::string>& coef_names,
                                const std::vector<EstimatorColumn>& columns) {
  using panelse::detail::format_full;
  std::ostringstream out;
  out << "coef,estimate";
  for (const auto& col : columns) out << ",se_" << col.tag;
  out << '\n';
  for (int j = 0; j < beta.size(); ++j) {
    out << coef_names[static_cast<size_t>(j)] << ',' << format_full(beta(j));
    for (const auto& col : columns) {
      out << ',';
      if (col.report) out << format_full(col.report->se(j));
    }
    out << '\n';
  }
  return out.str();
}

inline nlohmann::json estimate_json(const Eigen::VectorXd& beta,
                                    const std::vector<std::string>& coef_names,
                                    const std::vector<EstimatorColumn>& columns,
                                    double level) {
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  nlohmann::json ests = nlohmann::json::array();
  for (const auto& col : columns) {
    nlohmann::json e;
    e["name"] = col.tag;
    e["bandwidth"] = col.bandwidth ? nlohmann::json(*col.bandwidth) : nlohmann::json();
    e["M"] = col.threshold_m ? nlohmann::json(*col.threshold_m) : nlohmann::json();
    e["kept_blocks"] =
        col.kept_blocks ? nlohmann::json(*col.kept_blocks) : nlohmann::json();
    if (col.report) {
      e["se"] = vec(col.report->se);
      e["t_stats"] = vec(col.report->t_stats);
      e["ci_lower"] = vec(col.report->ci_lower);
      e["ci_upper"] = vec(col.report->ci_upper);
      e["reject"] = col.report->reject;
    } else {
      e["error"] = col.error;
    }
    ests.push_back(std::move(e));
  }
  return nlohmann::json{{"coefficients", coef_names},
                        {"estimate", vec(beta)},
                        {"level", level},
                        {"estimators", std::move(ests)}};
}

// ---------------------------------------------------------------------------
// Cross-validation results
// ---------------------------------------------------------------------------

inline nlohmann::json cv_json(const CvResult& result) {
  nlohmann::json obj = nlohmann::json::array();
  for (const auto& [m, loss] : result.objective)
    obj.push_back(nlohmann::json{{"m", m}, {"loss", loss}});
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& [b, e] : result.fold_boundaries)
    folds.push_back(nlohmann::json::array({b, e}));
  return nlohmann::json{{"m_star", result.best_m},
                        {"objective", std::move(obj)},
                        {"fold_boundaries", std::move(folds)}};
}

}  // namespace panelse::io

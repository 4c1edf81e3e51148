#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "panelse/cov_estimators.hpp"
#include "panelse/errors.hpp"
#include "panelse/inference.hpp"
#include "panelse/kernels.hpp"
#include "panelse/ols.hpp"
#include "panelse/panel_data.hpp"
#include "panelse/rng.hpp"
#include "panelse/tuning.hpp"

namespace panelse::mc {

enum class DgpCase { Case1 = 1, Case2 = 2, Case3 = 3 };

struct Case1Params {
  double rho = 0.0;    // AR(1) parameter of the error innovations
  double gamma = 0.0;  // upper bound of the cross-sectional MA coefficients
};

struct Case2Params {
  double psi = 0.5;           // spatial autoregressive coefficient
  bool chain_lattice = false; // 1-D chain instead of the near-square lattice
};

struct Case3Params {
  int r = 2;                 // number of factors
  double rho_f = 0.9;        // AR(1) of factors over t
  double rho_lambda = 0.3;   // AR(1) of loadings over i
};

/// Data-generating process for the rejection-probability experiments:
/// y_it = alpha_i + mu_t + beta0 * x_it + u_it, with serially and
/// cross-sectionally correlated x and three error designs.
struct DgpSpec {
  DgpCase kind = DgpCase::Case1;
  int n = 50;
  int t = 100;
  double beta0 = 1.0;
  double rho_x = 0.3;    // AR(1) of the regressor innovations
  double gamma_x = 1.0;  // upper bound of the regressor MA coefficients
  Case1Params case1;
  Case2Params case2;
  Case3Params case3;
  int burn_in = 100;
  double fe_scale = 0.5;  // variance of alpha_i and mu_t
};

inline void validate(const DgpSpec& spec) {
  auto stationary = [](double v, const char* name) {
    if (!(std::abs(v) < 1.0))
      throw InvalidConfig(std::string(name) + " = " + std::to_string(v) +
                          " violates the stationarity bound |" + name + "| < 1");
  };
  if (spec.n < 2 || spec.t < 2)
    throw InvalidConfig("panel dimensions must satisfy N >= 2 and T >= 2");
  stationary(spec.rho_x, "rho_x");
  if (spec.gamma_x < 0.0) throw InvalidConfig("gamma_x must be nonnegative");
  if (spec.burn_in < 0) throw InvalidConfig("burn_in must be nonnegative");
  if (spec.fe_scale < 0.0) throw InvalidConfig("fe_scale must be nonnegative");
  switch (spec.kind) {
    case DgpCase::Case1:
      stationary(spec.case1.rho, "rho");
      if (spec.case1.gamma < 0.0) throw InvalidConfig("gamma must be nonnegative");
      break;
    case DgpCase::Case2:
      stationary(spec.case2.psi, "psi");
      break;
    case DgpCase::Case3:
      if (spec.case3.r < 0) throw InvalidConfig("factor count must be nonnegative");
      stationary(spec.case3.rho_f, "rho_f");
      stationary(spec.case3.rho_lambda, "rho_lambda");
      break;
  }
}

namespace detail {

/// N x (burn+T) AR(1) panel, each row started at 0; the first burn_in columns
/// are transient and get discarded by the caller.
inline Eigen::MatrixXd ar1_panel(int n, int t, int burn_in, double rho,
                                 rng::Stream& stream) {
  Eigen::MatrixXd out(n, burn_in + t);
  for (int i = 0; i < n; ++i) {
    double prev = 0.0;
    for (int s = 0; s < burn_in + t; ++s) {
      prev = rho * prev + stream.normal();
      out(i, s) = prev;
    }
  }
  return out;
}

/// z_it = a_i w_{i+1,t} + w_it + b_i w_{i-1,t}, with out-of-range neighbors
/// treated as zero and a_i, b_i iid Uniform(0, gamma).
inline Eigen::MatrixXd neighbor_ma_panel(int n, int t, int burn_in, double rho,
                                         double gamma, rng::Stream& stream) {
  std::vector<double> up(static_cast<size_t>(n)), down(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    up[static_cast<size_t>(i)] = stream.uniform(0.0, gamma);
    down[static_cast<size_t>(i)] = stream.uniform(0.0, gamma);
  }
  const Eigen::MatrixXd w = ar1_panel(n, t, burn_in, rho, stream);
  Eigen::MatrixXd out(n, t);
  for (int i = 0; i < n; ++i) {
    for (int s = 0; s < t; ++s) {
      double v = w(i, burn_in + s);
      if (i + 1 < n) v += up[static_cast<size_t>(i)] * w(i + 1, burn_in + s);
      if (i - 1 >= 0) v += down[static_cast<size_t>(i)] * w(i - 1, burn_in + s);
      out(i, s) = v;
    }
  }
  return out;
}

}  // namespace detail

/// Row-standardized rook-contiguity weights on a ceil(sqrt(N)) x ceil(sqrt(N))
/// lattice truncated to N cells (or a 1-D chain when requested).
inline Eigen::MatrixXd rook_weight_matrix(int n, bool chain = false) {
  if (n < 2) throw InvalidConfig("spatial weight matrix needs N >= 2");
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  if (chain) {
    for (int i = 0; i < n; ++i) {
      if (i > 0) w(i, i - 1) = 1.0;
      if (i + 1 < n) w(i, i + 1) = 1.0;
    }
  } else {
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    for (int c = 0; c < n; ++c) {
      const int row = c / cols;
      const int col = c % cols;
      if (col > 0) w(c, c - 1) = 1.0;
      if (col + 1 < cols && c + 1 < n) w(c, c + 1) = 1.0;
      if (row > 0) w(c, c - cols) = 1.0;
      if (c + cols < n) w(c, c + cols) = 1.0;
    }
  }
  for (int i = 0; i < n; ++i) {
    const double s = w.row(i).sum();
    if (s > 0.0) w.row(i) /= s;
  }
  return w;
}

/// Regressor panel: cross-sectional MA over AR(1) innovations.
inline Eigen::MatrixXd generate_regressors(const DgpSpec& spec, rng::Stream& stream) {
  validate(spec);
  return detail::neighbor_ma_panel(spec.n, spec.t, spec.burn_in, spec.rho_x,
                                   spec.gamma_x, stream);
}

/// Case 1 errors: same structure as the regressors with parameters (rho, gamma).
inline Eigen::MatrixXd generate_errors_case1(const DgpSpec& spec, rng::Stream& stream) {
  validate(spec);
  return detail::neighbor_ma_panel(spec.n, spec.t, spec.burn_in, spec.case1.rho,
                                   spec.case1.gamma, stream);
}

/// Case 2 errors: simultaneous SAR(1), u_t = (I - psi W)^{-1} eta_t with
/// independent eta_t per period (no serial correlation by construction).
inline Eigen::MatrixXd generate_errors_case2(const DgpSpec& spec, rng::Stream& stream) {
  validate(spec);
  const Eigen::MatrixXd w = rook_weight_matrix(spec.n, spec.case2.chain_lattice);
  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(spec.n, spec.n) - spec.case2.psi * w;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible())
    throw SingularSpatialSystem("I - psi*W is numerically singular");
  const Eigen::MatrixXd inverse = lu.inverse();

  Eigen::MatrixXd eta(spec.n, spec.t);
  for (int s = 0; s < spec.t; ++s)
    for (int i = 0; i < spec.n; ++i) eta(i, s) = stream.normal();
  return inverse * eta;
}

namespace detail {

struct FactorComponents {
  Eigen::MatrixXd factors;   // T x r, AR(1) over t
  Eigen::MatrixXd loadings;  // N x r, AR(1) over i
  Eigen::MatrixXd noise;     // N x T, iid
};

inline FactorComponents case3_components(const DgpSpec& spec, rng::Stream& stream) {
  const int r = spec.case3.r;
  FactorComponents out;
  out.factors = ar1_panel(r, spec.t, spec.burn_in, spec.case3.rho_f, stream).transpose();
  out.loadings =
      ar1_panel(r, spec.n, spec.burn_in, spec.case3.rho_lambda, stream).transpose();
  out.noise.resize(spec.n, spec.t);
  for (int i = 0; i < spec.n; ++i)
    for (int s = 0; s < spec.t; ++s) out.noise(i, s) = stream.normal();
  return out;
}

}  // namespace detail

/// Case 3 errors: factor structure with AR(1) factors over t and AR(1)
/// loadings over i.
inline Eigen::MatrixXd generate_errors_case3(const DgpSpec& spec, rng::Stream& stream) {
  validate(spec);
  auto parts = detail::case3_components(spec, stream);
  if (spec.case3.r > 0)
    parts.noise.noalias() += parts.loadings * parts.factors.transpose();
  return std::move(parts.noise);
}

inline Eigen::MatrixXd generate_errors(const DgpSpec& spec, rng::Stream& stream) {
  switch (spec.kind) {
    case DgpCase::Case1: return generate_errors_case1(spec, stream);
    case DgpCase::Case2: return generate_errors_case2(spec, stream);
    case DgpCase::Case3: return generate_errors_case3(spec, stream);
  }
  throw InvalidConfig("unknown DGP case");
}

/// One synthetic panel. Regressors, errors, and fixed effects are drawn from
/// disjoint substreams of the replication seed, so the regressors are
/// independent of the error term by construction.
inline PanelData simulate_panel(const DgpSpec& spec, std::uint64_t rep_seed) {
  validate(spec);
  auto x_stream = rng::substream(rep_seed, rng::StreamTag::Regressors);
  auto u_stream = rng::substream(rep_seed, rng::StreamTag::Errors);
  auto fe_stream = rng::substream(rep_seed, rng::StreamTag::FixedEffects);

  const Eigen::MatrixXd x = generate_regressors(spec, x_stream);
  const Eigen::MatrixXd u = generate_errors(spec, u_stream);

  const double fe_sd = std::sqrt(spec.fe_scale);
  Eigen::VectorXd alpha(spec.n), mu(spec.t);
  for (int i = 0; i < spec.n; ++i) alpha(i) = fe_sd * fe_stream.normal();
  for (int s = 0; s < spec.t; ++s) mu(s) = fe_sd * fe_stream.normal();

  Eigen::MatrixXd y(spec.n, spec.t);
  for (int i = 0; i < spec.n; ++i)
    for (int s = 0; s < spec.t; ++s)
      y(i, s) = alpha(i) + mu(s) + spec.beta0 * x(i, s) + u(i, s);

  std::vector<std::string> units(static_cast<size_t>(spec.n));
  std::vector<std::string> times(static_cast<size_t>(spec.t));
  for (int i = 0; i < spec.n; ++i) units[static_cast<size_t>(i)] = std::to_string(i + 1);
  for (int s = 0; s < spec.t; ++s) times[static_cast<size_t>(s)] = std::to_string(s + 1);
  return PanelData(std::move(y), {x}, std::move(units), std::move(times));
}

/// Grid of experiment cells: estimators crossed with bandwidths and, for the
/// thresholded ones, threshold constants.
struct ExperimentGrid {
  DgpSpec dgp;
  std::vector<int> bandwidths = {3};
  std::vector<double> thresholds = {0.10, 0.15, 0.20, 0.25};
  std::vector<EstimatorKind> estimators = {
      EstimatorKind::HardThreshold, EstimatorKind::Hac,
      EstimatorKind::DriscollKraay, EstimatorKind::ClusterUnits,
      EstimatorKind::ClusterTimes,  EstimatorKind::White};
  int reps = 1000;
  double level = 0.05;
  std::uint64_t base_seed = 0;
};

struct ExperimentRow {
  int n = 0;
  int t = 0;
  std::optional<int> bandwidth;
  std::optional<double> threshold;
  EstimatorKind estimator = EstimatorKind::White;
  double reject_rate = 0.0;
  int reps = 0;  // valid replications behind the rate
  double mc_se = 0.0;
  int failures = 0;
};

struct ExperimentTable {
  DgpSpec dgp;
  double level = 0.05;
  std::uint64_t base_seed = 0;
  std::vector<int> bandwidths;
  std::vector<double> thresholds;
  std::vector<ExperimentRow> rows;
};

namespace detail {

inline bool uses_bandwidth(EstimatorKind e) {
  return e == EstimatorKind::Hac || e == EstimatorKind::DriscollKraay ||
         e == EstimatorKind::HardThreshold || e == EstimatorKind::SoftThreshold;
}

inline bool uses_threshold(EstimatorKind e) {
  return e == EstimatorKind::HardThreshold || e == EstimatorKind::SoftThreshold;
}

struct Cell {
  EstimatorKind estimator;
  std::optional<int> bandwidth;
  std::optional<double> threshold;
};

inline std::vector<Cell> build_cells(const ExperimentGrid& grid) {
  std::vector<Cell> cells;
  for (EstimatorKind e : grid.estimators) {
    if (!uses_bandwidth(e)) {
      cells.push_back({e, std::nullopt, std::nullopt});
    } else if (!uses_threshold(e)) {
      for (int l : grid.bandwidths) cells.push_back({e, l, std::nullopt});
    } else {
      for (int l : grid.bandwidths)
        for (double m : grid.thresholds) cells.push_back({e, l, m});
    }
  }
  if (cells.empty()) throw InvalidConfig("experiment grid selects no estimators");
  return cells;
}

// Per-replication outcome per cell: 1 reject, 0 accept, -1 failed.
inline void run_replication(const ExperimentGrid& grid, const std::vector<Cell>& cells,
                            int rep, std::int8_t* out) {
  const auto n_cells = cells.size();
  try {
    const std::uint64_t rep_seed =
        rng::replication_seed(grid.base_seed, static_cast<std::uint64_t>(rep));
    const PanelData panel = simulate_panel(grid.dgp, rep_seed);
    const PanelData demeaned = within_transform(panel).first;
    const FitResult fit = fit_ols(demeaned);
    const auto& x = demeaned.x();
    const auto& u = fit.residuals;
    Eigen::VectorXd null_value(1);
    null_value(0) = grid.dgp.beta0;

    // Covariances shared across cells.
    std::optional<CovEstimate> white, cx, ct;
    std::vector<std::optional<BlockSet>> blocks(grid.bandwidths.size());
    auto blocks_for = [&](int l) -> const BlockSet& {
      for (size_t b = 0; b < grid.bandwidths.size(); ++b)
        if (grid.bandwidths[b] == l) {
          if (!blocks[b])
            blocks[b] = BlockSet::compute(x, u, KernelSpec{KernelKind::Bartlett, l});
          return *blocks[b];
        }
      throw InvalidConfig("bandwidth not in grid");
    };

    for (size_t c = 0; c < n_cells; ++c) {
      try {
        CovEstimate cov;
        switch (cells[c].estimator) {
          case EstimatorKind::White:
            if (!white) white = white_cov(x, u);
            cov = *white;
            break;
          case EstimatorKind::ClusterUnits:
            if (!cx) cx = cluster_cov_by_unit(x, u);
            cov = *cx;
            break;
          case EstimatorKind::ClusterTimes:
            if (!ct) ct = cluster_cov_by_time(x, u);
            cov = *ct;
            break;
          case EstimatorKind::Hac:
            cov = hac_cov(x, u, KernelSpec{KernelKind::Bartlett, *cells[c].bandwidth});
            break;
          case EstimatorKind::DriscollKraay:
            cov = driscoll_kraay_cov(
                x, u, KernelSpec{KernelKind::Bartlett, *cells[c].bandwidth});
            break;
          case EstimatorKind::HardThreshold:
          case EstimatorKind::SoftThreshold: {
            const int l = *cells[c].bandwidth;
            const auto mode = cells[c].estimator == EstimatorKind::HardThreshold
                                  ? ThresholdMode::Hard
                                  : ThresholdMode::Soft;
            const ThresholdConfig tc{*cells[c].threshold, mode,
                                     threshold_scale(l, grid.dgp.n, grid.dgp.t), false};
            cov = threshold_cov(blocks_for(l), tc);
            break;
          }
        }
        const auto rep_out = infer(fit, cov, null_value, grid.level);
        out[c] = rep_out.reject[0] ? 1 : 0;
      } catch (const Error&) {
        out[c] = -1;
      }
    }
  } catch (const Error&) {
    for (size_t c = 0; c < n_cells; ++c) out[c] = -1;
  }
}

}  // namespace detail

/// Runs the full rejection-probability experiment. Replications are
/// independent streams derived from (base_seed, rep) and may run on any
/// number of threads; the aggregate is identical either way.
inline ExperimentTable run_experiment(const ExperimentGrid& grid, int threads = 1) {
  validate(grid.dgp);
  if (grid.reps < 1) throw InvalidConfig("reps must be at least 1");
  if (!(grid.level > 0.0 && grid.level < 1.0))
    throw InvalidLevel("level must lie strictly between 0 and 1");
  for (int l : grid.bandwidths)
    if (l < 0) throw InvalidConfig("bandwidth must be nonnegative");
  for (double m : grid.thresholds)
    if (m < 0.0) throw InvalidConfig("threshold constant must be nonnegative");

  const auto cells = detail::build_cells(grid);
  const size_t n_cells = cells.size();
  std::vector<std::int8_t> results(static_cast<size_t>(grid.reps) * n_cells);

  const int workers =
      std::max(1, std::min(threads, grid.reps));
  if (workers == 1) {
    for (int rep = 0; rep < grid.reps; ++rep)
      detail::run_replication(grid, cells, rep, results.data() + static_cast<size_t>(rep) * n_cells);
  } else {
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (;;) {
        const int rep = next.fetch_add(1);
        if (rep >= grid.reps) return;
        detail::run_replication(grid, cells, rep,
                                results.data() + static_cast<size_t>(rep) * n_cells);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  ExperimentTable table;
  table.dgp = grid.dgp;
  table.level = grid.level;
  table.base_seed = grid.base_seed;
  table.bandwidths = grid.bandwidths;
  table.thresholds = grid.thresholds;
  for (size_t c = 0; c < n_cells; ++c) {
    long rejections = 0;
    int valid = 0, failures = 0;
    for (int rep = 0; rep < grid.reps; ++rep) {
      const std::int8_t r = results[static_cast<size_t>(rep) * n_cells + c];
      if (r < 0) {
        ++failures;
      } else {
        ++valid;
        rejections += r;
      }
    }
    ExperimentRow row;
    row.n = grid.dgp.n;
    row.t = grid.dgp.t;
    row.bandwidth = cells[c].bandwidth;
    row.threshold = cells[c].threshold;
    row.estimator = cells[c].estimator;
    row.reps = valid;
    row.failures = failures;
    row.reject_rate = valid > 0 ? static_cast<double>(rejections) / valid : 0.0;
    row.mc_se = valid > 0
                    ? std::sqrt(row.reject_rate * (1.0 - row.reject_rate) / valid)
                    : 0.0;
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace panelse::mc

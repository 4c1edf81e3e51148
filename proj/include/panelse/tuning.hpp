#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "panelse/cov_estimators.hpp"
#include "panelse/errors.hpp"
#include "panelse/kernels.hpp"

namespace panelse {

/// Multifold block cross-validation setup for the threshold constant M.
struct CvConfig {
  int folds = 2;
  std::vector<double> grid;  // strictly increasing, in (0, m0]
  double m0 = 1.0;
  int bandwidth = 1;
  ThresholdMode mode = ThresholdMode::Hard;
};

struct CvResult {
  double best_m = 0.0;
  std::vector<std::pair<double, double>> objective;  // (M, mean Frobenius loss)
  std::vector<std::pair<int, int>> fold_boundaries;  // 1-based inclusive periods
};

/// Number of consecutive validation blocks: round(ln T), at least 2.
inline int default_fold_count(int n_periods) {
  if (n_periods < 8)
    throw TooShort("cross-validation needs T >= 8, got " + std::to_string(n_periods));
  const int p = static_cast<int>(std::lround(std::log(n_periods)));
  return p < 2 ? 2 : p;
}

/// Equally spaced candidate grid over (0, m0].
inline std::vector<double> default_grid(int points = 100, double m0 = 1.0) {
  std::vector<double> grid(static_cast<size_t>(points));
  for (int i = 0; i < points; ++i) grid[static_cast<size_t>(i)] = m0 * (i + 1) / points;
  return grid;
}

namespace detail {

inline void validate_cv_config(const CvConfig& cfg, int n_periods) {
  if (cfg.folds < 2) throw InvalidConfig("cross-validation needs at least 2 folds");
  if (cfg.bandwidth < 1)
    throw InvalidConfig("thresholding needs a bandwidth of at least 1");
  if (cfg.grid.empty()) throw InvalidConfig("empty candidate grid");
  for (size_t i = 0; i < cfg.grid.size(); ++i) {
    if (!(cfg.grid[i] > 0.0) || cfg.grid[i] > cfg.m0)
      throw InvalidConfig("grid values must lie in (0, m0]");
    if (i > 0 && !(cfg.grid[i] > cfg.grid[i - 1]))
      throw InvalidConfig("grid must be strictly increasing");
  }
  const int block_len = n_periods / cfg.folds;
  if (block_len < cfg.bandwidth + 2)
    throw FoldTooShort("validation block length " + std::to_string(block_len) +
                       " is shorter than L+2 = " + std::to_string(cfg.bandwidth + 2) +
                       "; reduce folds or the bandwidth");
}

}  // namespace detail

/// Chooses M by K-fold block cross-validation. Each consecutive block serves
/// once as the validation set; the candidate threshold is applied to the
/// block moments of the remaining periods and scored blockwise against the
/// unthresholded block moments of the validation set, summing squared
/// Frobenius discrepancy over all (i,j) pairs. Residuals come from one
/// full-sample fit; nothing is refit per fold. Ties break toward the
/// smallest M.
///
/// Two points are deliberate. The training moments exclude the validation
/// block: a full-sample estimate contains the validation block's own noise,
/// which makes M = 0 win mechanically whatever the data look like. And the
/// score compares the N x N pattern of blocks rather than their aggregate
/// sum: the aggregate collapses to a single k x k (for k = 1, scalar)
/// comparison that barely identifies M.
inline CvResult cross_validate_threshold(const std::vector<Eigen::MatrixXd>& x,
                                         const Eigen::MatrixXd& u,
                                         const CvConfig& cfg) {
  detail::check_panel_shapes(x, u);
  const int n = static_cast<int>(u.rows());
  const int t = static_cast<int>(u.cols());
  detail::validate_cv_config(cfg, t);

  const KernelSpec kernel{KernelKind::Bartlett, cfg.bandwidth};
  const int base_len = t / cfg.folds;

  CvResult result;
  std::vector<BlockSet> train_blocks, valid_blocks;
  std::vector<double> train_omegas;
  for (int p = 0; p < cfg.folds; ++p) {
    const int start = p * base_len;
    const int len = (p == cfg.folds - 1) ? t - start : base_len;
    result.fold_boundaries.emplace_back(start + 1, start + len);

    std::vector<detail::Segment> train;
    if (start > 0) train.push_back({0, start});
    if (start + len < t) train.push_back({start + len, t - start - len});
    train_blocks.push_back(BlockSet::compute(x, u, kernel, train));
    valid_blocks.push_back(BlockSet::compute(x, u, kernel, {{start, len}}));
    train_omegas.push_back(threshold_scale(cfg.bandwidth, n, t - len).value);
  }

  result.best_m = cfg.grid.front();
  double best_loss = std::numeric_limits<double>::infinity();
  const double pair_count = static_cast<double>(n) * n;
  for (double m : cfg.grid) {
    double loss = 0.0;
    for (int p = 0; p < cfg.folds; ++p) {
      const auto& train = train_blocks[static_cast<size_t>(p)];
      const auto& valid = valid_blocks[static_cast<size_t>(p)];
      const double m_omega = m * train_omegas[static_cast<size_t>(p)];
      double fold_loss = 0.0;
      for (int i = 0; i < n; ++i) {
        fold_loss += (train.upper(i, i) - valid.upper(i, i)).squaredNorm();
        for (int j = i + 1; j < n; ++j) {
          const double lambda =
              m_omega * std::sqrt(train.norm(i, i) * train.norm(j, j));
          if (train.norm(i, j) > lambda) {
            if (cfg.mode == ThresholdMode::Hard) {
              fold_loss += 2.0 * (train.upper(i, j) - valid.upper(i, j)).squaredNorm();
            } else {
              const Eigen::MatrixXd shrunk = detail::soft_shrink_block(
                  train.upper(i, j), train.upper(i, i), train.upper(j, j), m_omega);
              fold_loss += 2.0 * (shrunk - valid.upper(i, j)).squaredNorm();
            }
          } else {
            fold_loss += 2.0 * valid.upper(i, j).squaredNorm();
          }
        }
      }
      loss += fold_loss / pair_count;
    }
    loss /= cfg.folds;
    result.objective.emplace_back(m, loss);
    if (loss < best_loss) {
      best_loss = loss;
      result.best_m = m;
    }
  }
  return result;
}

}  // namespace panelse

#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "panelse/errors.hpp"
#include "panelse/format.hpp"
#include "panelse/kernels.hpp"

namespace panelse {

enum class EstimatorKind {
  White,
  ClusterUnits,   // clustered by individual (CX)
  ClusterTimes,   // clustered by period (CT)
  Hac,            // per-unit Newey-West, cross-sectionally independent
  DriscollKraay,  // Newey-West on the aggregated period moments
  HardThreshold,
  SoftThreshold,
};

inline const char* estimator_tag(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::White: return "white";
    case EstimatorKind::ClusterUnits: return "cx";
    case EstimatorKind::ClusterTimes: return "ct";
    case EstimatorKind::Hac: return "hac";
    case EstimatorKind::DriscollKraay: return "dk";
    case EstimatorKind::HardThreshold: return "hard";
    case EstimatorKind::SoftThreshold: return "soft";
  }
  return "?";
}

/// A k x k variance estimate for the scaled moment sum, with its tuning record.
struct CovEstimate {
  Eigen::MatrixXd v;
  EstimatorKind estimator = EstimatorKind::White;
  std::optional<int> bandwidth;
  std::optional<double> threshold_m;
  std::optional<long> kept_blocks;  // ordered (i,j) pairs entering the sum
  bool psd_floor_applied = false;
};

/// Kernel-weighted sample cross-covariance block of the moment series of
/// units i and j, plus its spectral norm.
struct BlockMoment {
  int i = 0;
  int j = 0;
  Eigen::MatrixXd s;
  double norm = 0.0;
};

enum class ThresholdMode { Hard, Soft };

struct ThresholdConfig {
  double m = 0.0;
  ThresholdMode mode = ThresholdMode::Hard;
  ThresholdScale scale;
  bool psd_floor = false;
};

inline ThresholdConfig make_threshold_config(double m, ThresholdMode mode,
                                             int bandwidth, int n_units,
                                             int n_periods, bool psd_floor = false) {
  return ThresholdConfig{m, mode, threshold_scale(bandwidth, n_units, n_periods),
                         psd_floor};
}

/// Spectral (operator) norm; absolute value for 1x1.
template <typename Derived>
inline double spectral_norm(const Eigen::MatrixBase<Derived>& a) {
  if (a.rows() == 1 && a.cols() == 1) return std::abs(a(0, 0));
  return Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()(0);
}

namespace detail {

inline void check_panel_shapes(const std::vector<Eigen::MatrixXd>& x,
                               const Eigen::MatrixXd& u) {
  if (x.empty()) throw ShapeMismatch("no regressors");
  for (const auto& xa : x)
    if (xa.rows() != u.rows() || xa.cols() != u.cols())
      throw ShapeMismatch("regressor and residual shapes differ");
}

/// Per-unit moment series g_it = x_it * u_it, stored T x N per regressor so
/// each unit's time series is a contiguous column.
struct MomentSeries {
  std::vector<Eigen::MatrixXd> m;  // k matrices, T x N
  int n = 0, t = 0, k = 0;

  static MomentSeries build(const std::vector<Eigen::MatrixXd>& x,
                            const Eigen::MatrixXd& u) {
    check_panel_shapes(x, u);
    MomentSeries ms;
    ms.n = static_cast<int>(u.rows());
    ms.t = static_cast<int>(u.cols());
    ms.k = static_cast<int>(x.size());
    ms.m.reserve(x.size());
    for (const auto& xa : x) ms.m.push_back(xa.cwiseProduct(u).transpose());
    return ms;
  }
};

inline std::vector<double> lag_weights(const KernelSpec& kernel) {
  std::vector<double> w(static_cast<size_t>(kernel.bandwidth) + 1, 0.0);
  for (int h = 1; h <= kernel.bandwidth; ++h)
    w[static_cast<size_t>(h)] = kernel_weight(kernel, h);
  return w;
}

/// Contiguous run of periods [start, start+len).
struct Segment {
  int start = 0;
  int len = 0;
};

/// S_u,ij: lag-0 cross-products plus kernel-weighted lagged cross-products,
/// accumulated within each segment (lags never cross a gap) and divided by
/// the total segment length. Writes a column-major k x k block at `out`.
inline void compute_block_into(const MomentSeries& ms, int i, int j,
                               const std::vector<double>& w,
                               const std::vector<Segment>& segments, double* out) {
  const int l = static_cast<int>(w.size()) - 1;
  int total = 0;
  for (const auto& seg : segments) total += seg.len;
  for (int a = 0; a < ms.k; ++a) {
    const double* pa = ms.m[static_cast<size_t>(a)].col(i).data();
    for (int b = 0; b < ms.k; ++b) {
      const double* pb = ms.m[static_cast<size_t>(b)].col(j).data();
      double acc = 0.0;
      for (const auto& seg : segments) {
        const double* qa = pa + seg.start;
        const double* qb = pb + seg.start;
        for (int s = 0; s < seg.len; ++s) acc += qa[s] * qb[s];
        for (int h = 1; h <= l && h < seg.len; ++h) {
          double lag = 0.0;
          for (int s = h; s < seg.len; ++s)
            lag += qa[s] * qb[s - h] + qa[s - h] * qb[s];
          acc += w[static_cast<size_t>(h)] * lag;
        }
      }
      out[b * ms.k + a] = acc / total;
    }
  }
}

inline std::vector<Segment> whole_sample(const MomentSeries& ms) {
  return {Segment{0, ms.t}};
}

inline void compute_block(const MomentSeries& ms, int i, int j,
                          const std::vector<double>& w, Eigen::MatrixXd& out) {
  out.resize(ms.k, ms.k);
  compute_block_into(ms, i, j, w, whole_sample(ms), out.data());
}

inline void check_index(int idx, int n, const char* what) {
  if (idx < 0 || idx >= n)
    throw IndexOutOfRange(std::string(what) + " index " + std::to_string(idx) +
                          " outside [0, " + std::to_string(n) + ")");
}

}  // namespace detail

/// White heteroskedasticity-robust estimator:
/// (1/NT) sum_it x_it x_it' u_it^2.
inline CovEstimate white_cov(const std::vector<Eigen::MatrixXd>& x,
                             const Eigen::MatrixXd& u) {
  const auto ms = detail::MomentSeries::build(x, u);
  const double nt = static_cast<double>(ms.n) * ms.t;
  Eigen::MatrixXd v(ms.k, ms.k);
  for (int a = 0; a < ms.k; ++a)
    for (int b = a; b < ms.k; ++b) {
      const double s =
          ms.m[static_cast<size_t>(a)].cwiseProduct(ms.m[static_cast<size_t>(b)]).sum();
      v(a, b) = s / nt;
      v(b, a) = v(a, b);
    }
  return CovEstimate{std::move(v), EstimatorKind::White, {}, {}, {}, false};
}

/// Individual-clustered estimator: (1/NT) sum_i (x_i'u_i)(x_i'u_i)'.
inline CovEstimate cluster_cov_by_unit(const std::vector<Eigen::MatrixXd>& x,
                                       const Eigen::MatrixXd& u) {
  const auto ms = detail::MomentSeries::build(x, u);
  const double nt = static_cast<double>(ms.n) * ms.t;
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(ms.k, ms.k);
  Eigen::VectorXd g(ms.k);
  for (int i = 0; i < ms.n; ++i) {
    for (int a = 0; a < ms.k; ++a) g(a) = ms.m[static_cast<size_t>(a)].col(i).sum();
    v.noalias() += g * g.transpose();
  }
  v /= nt;
  return CovEstimate{std::move(v), EstimatorKind::ClusterUnits, {}, {}, {}, false};
}

/// Time-clustered estimator: (1/NT) sum_t (x_t'u_t)(x_t'u_t)'.
inline CovEstimate cluster_cov_by_time(const std::vector<Eigen::MatrixXd>& x,
                                       const Eigen::MatrixXd& u) {
  const auto ms = detail::MomentSeries::build(x, u);
  const double nt = static_cast<double>(ms.n) * ms.t;
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(ms.k, ms.k);
  Eigen::VectorXd g(ms.k);
  for (int s = 0; s < ms.t; ++s) {
    for (int a = 0; a < ms.k; ++a) g(a) = ms.m[static_cast<size_t>(a)].row(s).sum();
    v.noalias() += g * g.transpose();
  }
  v /= nt;
  return CovEstimate{std::move(v), EstimatorKind::ClusterTimes, {}, {}, {}, false};
}

/// Panel Newey-West applied unit by unit; assumes cross-sectional
/// independence. Equals the average of the diagonal block moments.
inline CovEstimate hac_cov(const std::vector<Eigen::MatrixXd>& x,
                           const Eigen::MatrixXd& u, const KernelSpec& kernel) {
  const auto ms = detail::MomentSeries::build(x, u);
  const auto w = detail::lag_weights(kernel);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(ms.k, ms.k);
  Eigen::MatrixXd block;
  for (int i = 0; i < ms.n; ++i) {
    detail::compute_block(ms, i, i, w, block);
    v += block;
  }
  v /= ms.n;
  return CovEstimate{std::move(v), EstimatorKind::Hac, kernel.bandwidth, {}, {}, false};
}

/// Driscoll-Kraay: Newey-West on the cross-sectionally aggregated moment
/// series x_t'u_t; robust to arbitrary cross-sectional correlation.
inline CovEstimate driscoll_kraay_cov(const std::vector<Eigen::MatrixXd>& x,
                                      const Eigen::MatrixXd& u,
                                      const KernelSpec& kernel) {
  const auto ms = detail::MomentSeries::build(x, u);
  const auto w = detail::lag_weights(kernel);
  const double nt = static_cast<double>(ms.n) * ms.t;

  Eigen::MatrixXd agg(ms.t, ms.k);  // row t = x_t'u_t
  for (int a = 0; a < ms.k; ++a)
    agg.col(a) = ms.m[static_cast<size_t>(a)].rowwise().sum();

  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(ms.k, ms.k);
  for (int s = 0; s < ms.t; ++s)
    v.noalias() += agg.row(s).transpose() * agg.row(s);
  for (int h = 1; h <= kernel.bandwidth && h < ms.t; ++h) {
    Eigen::MatrixXd lag = Eigen::MatrixXd::Zero(ms.k, ms.k);
    for (int s = h; s < ms.t; ++s)
      lag.noalias() += agg.row(s).transpose() * agg.row(s - h);
    v.noalias() += w[static_cast<size_t>(h)] * (lag + lag.transpose());
  }
  v /= nt;
  return CovEstimate{std::move(v), EstimatorKind::DriscollKraay, kernel.bandwidth,
                     {}, {}, false};
}

/// One kernel-weighted cross-covariance block S_u,ij with its spectral norm.
inline BlockMoment block_moment(const std::vector<Eigen::MatrixXd>& x,
                                const Eigen::MatrixXd& u, int i, int j,
                                const KernelSpec& kernel) {
  const auto ms = detail::MomentSeries::build(x, u);
  detail::check_index(i, ms.n, "unit");
  detail::check_index(j, ms.n, "unit");
  const auto w = detail::lag_weights(kernel);
  BlockMoment out;
  out.i = i;
  out.j = j;
  detail::compute_block(ms, i, j, w, out.s);
  out.norm = spectral_norm(out.s);
  return out;
}

/// All block moments of a panel, materialized in one flat buffer. Stores the
/// upper triangle; the (j,i) block is the transpose of (i,j) by construction.
class BlockSet {
 public:
  using ConstBlock = Eigen::Map<const Eigen::MatrixXd>;

  /// Blocks over the whole sample, or over a union of contiguous period
  /// segments when `segments` is nonempty (lag windows stay inside segments).
  static BlockSet compute(const std::vector<Eigen::MatrixXd>& x,
                          const Eigen::MatrixXd& u, const KernelSpec& kernel,
                          std::vector<detail::Segment> segments = {}) {
    const auto ms = detail::MomentSeries::build(x, u);
    const auto w = detail::lag_weights(kernel);
    if (segments.empty()) segments = detail::whole_sample(ms);
    for (const auto& seg : segments)
      if (seg.start < 0 || seg.len <= 0 || seg.start + seg.len > ms.t)
        throw IndexOutOfRange("segment outside the panel's period range");
    BlockSet bs;
    bs.n_ = ms.n;
    bs.k_ = ms.k;
    bs.bandwidth_ = kernel.bandwidth;
    const size_t count = static_cast<size_t>(ms.n) * (ms.n + 1) / 2;
    bs.data_.resize(count * static_cast<size_t>(ms.k) * ms.k);
    bs.norms_.resize(count);
    for (int i = 0; i < ms.n; ++i) {
      for (int j = i; j < ms.n; ++j) {
        double* out = bs.data_.data() + bs.index(i, j) * bs.block_size();
        detail::compute_block_into(ms, i, j, w, segments, out);
        bs.norms_[bs.index(i, j)] = spectral_norm(ConstBlock(out, ms.k, ms.k));
      }
    }
    return bs;
  }

  int n_units() const { return n_; }
  int dim() const { return k_; }
  int bandwidth() const { return bandwidth_; }

  /// Block for i <= j, without copying.
  ConstBlock upper(int i, int j) const {
    return ConstBlock(data_.data() + index(i, j) * block_size(), k_, k_);
  }

  Eigen::MatrixXd block(int i, int j) const {
    if (i <= j) return upper(i, j);
    return upper(j, i).transpose();
  }

  double norm(int i, int j) const {
    return i <= j ? norms_[index(i, j)] : norms_[index(j, i)];
  }

 private:
  size_t index(int i, int j) const {
    return static_cast<size_t>(i) * (2 * n_ - i - 1) / 2 + static_cast<size_t>(j);
  }
  size_t block_size() const { return static_cast<size_t>(k_) * k_; }

  int n_ = 0, k_ = 0, bandwidth_ = 0;
  std::vector<double> data_;
  std::vector<double> norms_;
};

namespace detail {

inline void validate_threshold_config(const ThresholdConfig& cfg, int n, int t,
                                      int bandwidth) {
  if (cfg.m < 0.0) throw InvalidConfig("threshold constant M must be nonnegative");
  if (cfg.scale.n_units != n || cfg.scale.n_periods != t ||
      cfg.scale.bandwidth != bandwidth)
    throw InvalidConfig("threshold scale was built for different (L, N, T)");
}

/// Elementwise soft shrinkage of a surviving off-diagonal block.
inline Eigen::MatrixXd soft_shrink_block(const Eigen::Ref<const Eigen::MatrixXd>& s,
                                         const Eigen::Ref<const Eigen::MatrixXd>& diag_i,
                                         const Eigen::Ref<const Eigen::MatrixXd>& diag_j,
                                         double m_omega) {
  Eigen::MatrixXd out(s.rows(), s.cols());
  for (int a = 0; a < s.rows(); ++a)
    for (int b = 0; b < s.cols(); ++b) {
      const double eta =
          m_omega * std::sqrt(std::abs(diag_i(a, b)) * std::abs(diag_j(a, b)));
      const double mag = std::abs(s(a, b)) - eta;
      out(a, b) = mag > 0.0 ? (s(a, b) > 0.0 ? mag : -mag) : 0.0;
    }
  return out;
}

struct ThresholdAccumulator {
  Eigen::MatrixXd acc;
  long kept = 0;

  explicit ThresholdAccumulator(int k) : acc(Eigen::MatrixXd::Zero(k, k)) {}

  void add_diagonal(const Eigen::Ref<const Eigen::MatrixXd>& s) {
    acc += s;
    kept += 1;
  }

  /// Off-diagonal pair (i<j): the (j,i) block is the transpose and shares the
  /// same norm, so both sides are added together.
  void add_off_diagonal_pair(const ThresholdConfig& cfg,
                             const Eigen::Ref<const Eigen::MatrixXd>& s,
                             double norm, double norm_i, double norm_j,
                             const Eigen::Ref<const Eigen::MatrixXd>& diag_i,
                             const Eigen::Ref<const Eigen::MatrixXd>& diag_j) {
    const double m_omega = cfg.m * cfg.scale.value;
    const double lambda = m_omega * std::sqrt(norm_i * norm_j);
    if (!(norm > lambda)) return;  // ties excluded
    if (cfg.mode == ThresholdMode::Hard) {
      acc += s + s.transpose();
    } else {
      const Eigen::MatrixXd shrunk = soft_shrink_block(s, diag_i, diag_j, m_omega);
      acc += shrunk + shrunk.transpose();
    }
    kept += 2;
  }

  CovEstimate finish(const ThresholdConfig& cfg, int n, int bandwidth) {
    Eigen::MatrixXd v = acc / n;
    v = 0.5 * (v + v.transpose()).eval();
    bool floored = false;
    if (cfg.psd_floor) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(v);
      Eigen::VectorXd ev = eig.eigenvalues();
      for (int a = 0; a < ev.size(); ++a)
        if (ev(a) < 0.0) {
          ev(a) = 0.0;
          floored = true;
        }
      if (floored)
        v = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
    }
    const auto kind = cfg.mode == ThresholdMode::Hard ? EstimatorKind::HardThreshold
                                                      : EstimatorKind::SoftThreshold;
    return CovEstimate{std::move(v), kind, bandwidth, cfg.m, kept, floored};
  }
};

}  // namespace detail

/// Thresholded estimator from materialized blocks.
inline CovEstimate threshold_cov(const BlockSet& blocks, const ThresholdConfig& cfg) {
  const int n = blocks.n_units();
  detail::validate_threshold_config(cfg, n, cfg.scale.n_periods, blocks.bandwidth());
  detail::ThresholdAccumulator acc(blocks.dim());
  for (int i = 0; i < n; ++i) acc.add_diagonal(blocks.upper(i, i));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      acc.add_off_diagonal_pair(cfg, blocks.upper(i, j), blocks.norm(i, j),
                                blocks.norm(i, i), blocks.norm(j, j),
                                blocks.upper(i, i), blocks.upper(j, j));
  return acc.finish(cfg, n, blocks.bandwidth());
}

/// Thresholded estimator, streaming: blocks are visited pair by pair in a
/// fixed order and only the running sum plus the N diagonal blocks are held.
inline CovEstimate threshold_cov(const std::vector<Eigen::MatrixXd>& x,
                                 const Eigen::MatrixXd& u, const KernelSpec& kernel,
                                 const ThresholdConfig& cfg) {
  const auto ms = detail::MomentSeries::build(x, u);
  detail::validate_threshold_config(cfg, ms.n, ms.t, kernel.bandwidth);
  const auto w = detail::lag_weights(kernel);

  std::vector<Eigen::MatrixXd> diag(static_cast<size_t>(ms.n));
  std::vector<double> diag_norm(static_cast<size_t>(ms.n));
  detail::ThresholdAccumulator acc(ms.k);
  for (int i = 0; i < ms.n; ++i) {
    detail::compute_block(ms, i, i, w, diag[static_cast<size_t>(i)]);
    diag_norm[static_cast<size_t>(i)] = spectral_norm(diag[static_cast<size_t>(i)]);
    acc.add_diagonal(diag[static_cast<size_t>(i)]);
  }
  Eigen::MatrixXd block;
  for (int i = 0; i < ms.n; ++i)
    for (int j = i + 1; j < ms.n; ++j) {
      detail::compute_block(ms, i, j, w, block);
      acc.add_off_diagonal_pair(cfg, block, spectral_norm(block),
                                diag_norm[static_cast<size_t>(i)],
                                diag_norm[static_cast<size_t>(j)],
                                diag[static_cast<size_t>(i)],
                                diag[static_cast<size_t>(j)]);
    }
  return acc.finish(cfg, ms.n, kernel.bandwidth);
}

/// Sparsity pattern of the blocks a threshold keeps (diagonal included).
struct KeptBlock {
  int i = 0;
  int j = 0;
  double norm = 0.0;
};

inline std::vector<KeptBlock> threshold_pattern(const BlockSet& blocks,
                                                const ThresholdConfig& cfg) {
  const int n = blocks.n_units();
  detail::validate_threshold_config(cfg, n, cfg.scale.n_periods, blocks.bandwidth());
  std::vector<KeptBlock> kept;
  for (int i = 0; i < n; ++i) kept.push_back({i, i, blocks.norm(i, i)});
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double lambda = cfg.m * cfg.scale.value *
                            std::sqrt(blocks.norm(i, i) * blocks.norm(j, j));
      if (blocks.norm(i, j) > lambda) {
        kept.push_back({i, j, blocks.norm(i, j)});
        kept.push_back({j, i, blocks.norm(i, j)});
      }
    }
  return kept;
}

/// Diagnostic dump as `i,j,norm` triples, 1-based unit indices.
inline void write_pattern_csv(const std::vector<KeptBlock>& kept,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseFailure("cannot open file for writing: " + path);
  out << "i,j,norm\n";
  for (const auto& b : kept)
    out << (b.i + 1) << ',' << (b.j + 1) << ',' << detail::format_full(b.norm)
        << '\n';
}

inline double min_eigenvalue(const Eigen::MatrixXd& v) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (v + v.transpose()))
      .eigenvalues()(0);
}

}  // namespace panelse

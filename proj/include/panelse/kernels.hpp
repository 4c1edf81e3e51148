#pragma once

#include <cmath>
#include <string>

#include "panelse/errors.hpp"

namespace panelse {

enum class KernelKind { Bartlett };

/// Kernel choice plus truncation lag L. Lag-0 terms are unweighted in every
/// estimator, so weight(0) is never consumed.
struct KernelSpec {
  KernelKind kind = KernelKind::Bartlett;
  int bandwidth = 0;
};

/// Bartlett (triangular) lag weight: 1 - h/(L+1) for 1 <= h <= L, 0 beyond L.
inline double bartlett_weight(int lag, int bandwidth) {
  if (lag > bandwidth) return 0.0;
  return 1.0 - static_cast<double>(lag) / (bandwidth + 1.0);
}

inline double kernel_weight(const KernelSpec& spec, int lag) {
  return bartlett_weight(lag, spec.bandwidth);
}

/// Automatic truncation lag: floor(4 * (T/100)^(2/9)), at least 1.
inline int auto_bandwidth(int n_periods) {
  const double rule = 4.0 * std::pow(n_periods / 100.0, 2.0 / 9.0);
  const int l = static_cast<int>(std::floor(rule));
  return l < 1 ? 1 : l;
}

/// Scale calibrating the block threshold to the uniform estimation error of
/// the block moments: L * sqrt(log(L*N) / T), natural log.
struct ThresholdScale {
  double value = 0.0;
  int bandwidth = 0;
  int n_units = 0;
  int n_periods = 0;
};

inline ThresholdScale threshold_scale(int bandwidth, int n_units, int n_periods) {
  if (bandwidth < 1)
    throw DomainError("threshold_scale: bandwidth must be >= 1, got " +
                      std::to_string(bandwidth));
  if (n_units < 2)
    throw DomainError("threshold_scale: n_units must be >= 2, got " +
                      std::to_string(n_units));
  if (n_periods < 2)
    throw DomainError("threshold_scale: n_periods must be >= 2, got " +
                      std::to_string(n_periods));
  if (static_cast<long long>(bandwidth) * n_units < 2)
    throw DomainError("threshold_scale: L*N must be >= 2 (log nonpositive)");
  const double ln = std::log(static_cast<double>(bandwidth) * n_units);
  return ThresholdScale{bandwidth * std::sqrt(ln / n_periods), bandwidth, n_units,
                        n_periods};
}

}  // namespace panelse

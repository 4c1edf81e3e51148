#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "panelse/cov_estimators.hpp"
#include "panelse/errors.hpp"
#include "panelse/ols.hpp"

namespace panelse {

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Standard normal quantile. Acklam's rational approximation followed by one
/// Halley refinement step; absolute error well below 1e-9.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw DomainError("normal_quantile requires p in (0,1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

/// Coefficient-level inference from one covariance estimate.
struct InferenceReport {
  Eigen::VectorXd beta;
  Eigen::VectorXd se;
  Eigen::VectorXd t_stats;
  Eigen::VectorXd ci_lower;
  Eigen::VectorXd ci_upper;
  std::vector<bool> reject;
  double level = 0.05;
  std::string estimator_tag;
  Eigen::MatrixXd sandwich;  // Vx^{-1} V Vx^{-1} / NT
};

/// (1/NT) Vx^{-1} V Vx^{-1}, symmetrized. A negative diagonal is possible for
/// thresholded V without the PSD floor and is left for the caller to inspect.
inline Eigen::MatrixXd sandwich_variance(const FitResult& fit, const CovEstimate& cov) {
  const int k = static_cast<int>(fit.beta.size());
  if (cov.v.rows() != k || cov.v.cols() != k)
    throw ShapeMismatch("covariance estimate dimension does not match fit");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fit.regressor_moment);
  const double lo = eig.eigenvalues()(0);
  const double hi = eig.eigenvalues()(k - 1);
  if (!(lo > 0.0) || hi / lo > 1e12)
    throw SingularVX("regressor moment matrix is numerically singular");

  const Eigen::MatrixXd vx_inv =
      Eigen::LLT<Eigen::MatrixXd>(fit.regressor_moment)
          .solve(Eigen::MatrixXd::Identity(k, k));
  Eigen::MatrixXd s = vx_inv * cov.v * vx_inv / static_cast<double>(fit.nt);
  return 0.5 * (s + s.transpose());
}

/// Two-sided tests and confidence intervals with standard normal critical
/// values (never Student-t).
inline InferenceReport test_and_ci(const FitResult& fit, const Eigen::MatrixXd& sandwich,
                                   const Eigen::VectorXd& null_values, double level,
                                   const std::string& estimator_tag = "") {
  if (!(level > 0.0 && level < 1.0))
    throw InvalidLevel("level must lie strictly between 0 and 1");
  const int k = static_cast<int>(fit.beta.size());
  if (sandwich.rows() != k || sandwich.cols() != k)
    throw ShapeMismatch("sandwich dimension does not match fit");
  if (null_values.size() != k)
    throw ShapeMismatch("null vector dimension does not match fit");

  InferenceReport rep;
  rep.beta = fit.beta;
  rep.level = level;
  rep.estimator_tag = estimator_tag;
  rep.sandwich = sandwich;
  rep.se.resize(k);
  rep.t_stats.resize(k);
  rep.ci_lower.resize(k);
  rep.ci_upper.resize(k);
  rep.reject.resize(static_cast<size_t>(k));

  const double z = normal_quantile(1.0 - level / 2.0);
  for (int j = 0; j < k; ++j) {
    const double var = sandwich(j, j);
    if (!(var > 0.0))
      throw NonPositiveVariance(
          "sandwich diagonal " + std::to_string(j) + " is " + std::to_string(var) +
          "; a thresholded estimate without the PSD floor can cause this");
    rep.se(j) = std::sqrt(var);
    rep.t_stats(j) = (fit.beta(j) - null_values(j)) / rep.se(j);
    rep.ci_lower(j) = fit.beta(j) - z * rep.se(j);
    rep.ci_upper(j) = fit.beta(j) + z * rep.se(j);
    rep.reject[static_cast<size_t>(j)] = std::abs(rep.t_stats(j)) > z;
  }
  return rep;
}

/// Convenience: sandwich plus tests in one call, tagged by the estimator.
inline InferenceReport infer(const FitResult& fit, const CovEstimate& cov,
                             const Eigen::VectorXd& null_values, double level) {
  return test_and_ci(fit, sandwich_variance(fit, cov), null_values, level,
                     estimator_tag(cov.estimator));
}

}  // namespace panelse

#pragma once

#include <Eigen/Dense>
#include <string>

#include "panelse/errors.hpp"
#include "panelse/panel_data.hpp"

namespace panelse {

/// Pooled OLS output: coefficients, N x T residual matrix, and the regressor
/// second-moment matrix (1/NT) sum_it x_it x_it'. No degrees-of-freedom
/// correction anywhere downstream, so nt is the raw cell count.
struct FitResult {
  Eigen::VectorXd beta;
  Eigen::MatrixXd residuals;        // N x T
  Eigen::MatrixXd regressor_moment; // k x k, symmetric PSD
  long nt = 0;
};

/// Pooled OLS on the (optionally demeaned) panel. The k x k normal-equation
/// solve uses a Cholesky factorization guarded by a condition-number check at
/// 1e12; a rank-deficient design reports the near-null direction.
inline FitResult fit_ols(const PanelData& data) {
  const int n = data.n_units();
  const int t = data.n_periods();
  const int k = data.n_regressors();
  const double nt = static_cast<double>(n) * t;

  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd xi(k);
  for (int i = 0; i < n; ++i) {
    for (int s = 0; s < t; ++s) {
      for (int j = 0; j < k; ++j) xi(j) = data.x(j)(i, s);
      xtx.noalias() += xi * xi.transpose();
      xty.noalias() += xi * data.y()(i, s);
    }
  }
  xtx = 0.5 * (xtx + xtx.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(xtx);
  const double lo = eig.eigenvalues()(0);
  const double hi = eig.eigenvalues()(k - 1);
  if (!(lo > 0.0) || hi / lo > 1e12) {
    std::string dir = "[";
    for (int j = 0; j < k; ++j)
      dir += (j ? ", " : "") + std::to_string(eig.eigenvectors()(j, 0));
    dir += "]";
    throw SingularDesign(
        "regressor moment matrix is numerically singular; near-null direction " + dir);
  }

  FitResult fit;
  fit.beta = Eigen::LLT<Eigen::MatrixXd>(xtx).solve(xty);
  fit.nt = static_cast<long>(n) * t;
  fit.regressor_moment = xtx / nt;

  fit.residuals.resize(n, t);
  for (int i = 0; i < n; ++i) {
    for (int s = 0; s < t; ++s) {
      double xb = 0.0;
      for (int j = 0; j < k; ++j) xb += data.x(j)(i, s) * fit.beta(j);
      fit.residuals(i, s) = data.y()(i, s) - xb;
    }
  }
  return fit;
}

/// Residuals checked against the expected panel layout: row i is unit i's
/// T-vector, column t is period t's N-vector.
inline const Eigen::MatrixXd& residual_matrix(const FitResult& fit, int n_units,
                                              int n_periods) {
  if (fit.residuals.rows() != n_units || fit.residuals.cols() != n_periods)
    throw ShapeMismatch("residual matrix is " + std::to_string(fit.residuals.rows()) +
                        "x" + std::to_string(fit.residuals.cols()) + ", expected " +
                        std::to_string(n_units) + "x" + std::to_string(n_periods));
  return fit.residuals;
}

}  // namespace panelse

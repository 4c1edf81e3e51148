#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "oracles.hpp"

namespace testsup {

inline Eigen::MatrixXd random_matrix(std::mt19937_64& eng, int rows, int cols,
                                     double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = normal(eng);
  return m;
}

inline std::vector<Eigen::MatrixXd> random_regressors(std::mt19937_64& eng, int n,
                                                      int t, int k) {
  std::vector<Eigen::MatrixXd> x;
  for (int a = 0; a < k; ++a) x.push_back(random_matrix(eng, n, t));
  return x;
}

inline oracle::Panel to_panel(const Eigen::MatrixXd& m) {
  oracle::Panel p(static_cast<size_t>(m.rows()),
                  std::vector<double>(static_cast<size_t>(m.cols())));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      p[static_cast<size_t>(i)][static_cast<size_t>(j)] = m(i, j);
  return p;
}

inline oracle::Panel3 to_panel3(const std::vector<Eigen::MatrixXd>& x) {
  oracle::Panel3 p;
  for (const auto& xa : x) p.push_back(to_panel(xa));
  return p;
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const oracle::Mat& b) {
  double worst = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      worst = std::max(worst,
                       std::abs(a(i, j) - b[static_cast<size_t>(i)][static_cast<size_t>(j)]));
  return worst;
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testsup

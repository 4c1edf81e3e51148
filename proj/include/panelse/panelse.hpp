#pragma once

// Robust standard errors for linear panel data models: OLS with two-way
// demeaning, cluster/HAC/Driscoll-Kraay covariances, blockwise thresholded
// covariances with unknown clusters, cross-validated tuning, and a Monte
// Carlo laboratory for rejection-probability experiments.

#include "panelse/cov_estimators.hpp"
#include "panelse/errors.hpp"
#include "panelse/inference.hpp"
#include "panelse/kernels.hpp"
#include "panelse/mc_lab.hpp"
#include "panelse/ols.hpp"
#include "panelse/panel_data.hpp"
#include "panelse/rng.hpp"
#include "panelse/tuning.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "panelse/mc_lab.hpp"
#include "panelse/ols.hpp"
#include "panelse/tuning.hpp"
#include "test_support.hpp"

using namespace panelse;

namespace {

KernelSpec bartlett(int l) { return KernelSpec{KernelKind::Bartlett, l}; }

struct Fixture {
  std::vector<Eigen::MatrixXd> x;
  Eigen::MatrixXd u;
};

// Demeaned regressors and full-sample OLS residuals from a simulated panel.
Fixture cv_fixture(const mc::DgpSpec& spec, std::uint64_t seed) {
  const auto panel = mc::simulate_panel(spec, seed);
  const auto demeaned = within_transform(panel).first;
  const auto fit = fit_ols(demeaned);
  return {demeaned.x(), fit.residuals};
}

}  // namespace

TEST_CASE("default fold count follows round(ln T)") {
  CHECK(default_fold_count(100) == 5);  // ln 100 = 4.605
  CHECK(default_fold_count(8) == 2);    // ln 8  = 2.079
  CHECK(default_fold_count(33) == 3);   // ln 33 = 3.497
  CHECK_THROWS_AS(default_fold_count(7), TooShort);
}

TEST_CASE("default grid spans (0, m0] evenly") {
  const auto grid = default_grid();
  REQUIRE(grid.size() == 100);
  CHECK(grid.front() == Catch::Approx(0.01));
  CHECK(grid.back() == Catch::Approx(1.0));
  CHECK(std::is_sorted(grid.begin(), grid.end()));
}

TEST_CASE("fold boundaries partition the sample into consecutive blocks") {
  std::mt19937_64 eng(51);
  const auto x = testsup::random_regressors(eng, 4, 23, 1);
  const auto u = testsup::random_matrix(eng, 4, 23);
  CvConfig cfg;
  cfg.folds = 3;
  cfg.grid = {0.3};
  cfg.bandwidth = 2;
  const auto result = cross_validate_threshold(x, u, cfg);
  REQUIRE(result.fold_boundaries.size() == 3);
  CHECK(result.fold_boundaries.front().first == 1);
  CHECK(result.fold_boundaries.back().second == 23);
  for (size_t p = 1; p < result.fold_boundaries.size(); ++p)
    CHECK(result.fold_boundaries[p].first ==
          result.fold_boundaries[p - 1].second + 1);
  // remainder periods land in the final fold: 7,7,9
  CHECK(result.fold_boundaries[0].second - result.fold_boundaries[0].first + 1 == 7);
  CHECK(result.fold_boundaries[2].second - result.fold_boundaries[2].first + 1 == 9);
}

TEST_CASE("singleton grid is returned unchanged") {
  std::mt19937_64 eng(52);
  const auto x = testsup::random_regressors(eng, 4, 20, 1);
  const auto u = testsup::random_matrix(eng, 4, 20);
  CvConfig cfg;
  cfg.folds = 2;
  cfg.grid = {0.3};
  cfg.bandwidth = 1;
  CHECK(cross_validate_threshold(x, u, cfg).best_m == 0.3);
}

TEST_CASE("cross-validation is deterministic") {
  std::mt19937_64 eng(53);
  const auto x = testsup::random_regressors(eng, 5, 30, 1);
  const auto u = testsup::random_matrix(eng, 5, 30);
  CvConfig cfg;
  cfg.folds = 3;
  cfg.grid = default_grid(20);
  cfg.bandwidth = 2;
  const auto a = cross_validate_threshold(x, u, cfg);
  const auto b = cross_validate_threshold(x, u, cfg);
  CHECK(a.best_m == b.best_m);
  REQUIRE(a.objective.size() == b.objective.size());
  for (size_t i = 0; i < a.objective.size(); ++i) {
    CHECK(a.objective[i].first == b.objective[i].first);
    CHECK(a.objective[i].second == b.objective[i].second);
  }
}

TEST_CASE("the large-M objective keeps only diagonal discrepancies") {
  std::mt19937_64 eng(54);
  const int n = 5, t = 30, l = 2, folds = 3;
  const auto x = testsup::random_regressors(eng, n, t, 1);
  const auto u = testsup::random_matrix(eng, n, t);
  CvConfig cfg;
  cfg.folds = folds;
  cfg.m0 = 1e9;
  cfg.grid = {1e9};
  cfg.bandwidth = l;
  const auto result = cross_validate_threshold(x, u, cfg);

  // reconstruct from public block moments: training blocks combine the two
  // complement segments; every off-diagonal training block is thresholded
  // away, so its validation counterpart enters the loss in full
  auto slice = [&](int start, int len) {
    std::vector<Eigen::MatrixXd> xs;
    for (const auto& xa : x) xs.push_back(xa.middleCols(start, len));
    return std::make_pair(xs, Eigen::MatrixXd(u.middleCols(start, len)));
  };
  auto train_block = [&](int p, int i, int j) {
    const int base = t / folds;
    const int start = p * base;
    const int len = (p == folds - 1) ? t - start : base;
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(1, 1);
    if (start > 0) {
      auto [xs, us] = slice(0, start);
      s += start * block_moment(xs, us, i, j, bartlett(l)).s;
    }
    if (start + len < t) {
      auto [xs, us] = slice(start + len, t - start - len);
      s += (t - start - len) * block_moment(xs, us, i, j, bartlett(l)).s;
    }
    return (s / (t - len)).eval();
  };

  double expect = 0.0;
  const int base = t / folds;
  for (int p = 0; p < folds; ++p) {
    const int start = p * base;
    const int len = (p == folds - 1) ? t - start : base;
    auto [xf, uf] = slice(start, len);
    double fold_loss = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Eigen::MatrixXd valid = block_moment(xf, uf, i, j, bartlett(l)).s;
        if (i == j)
          fold_loss += (train_block(p, i, i) - valid).squaredNorm();
        else
          fold_loss += valid.squaredNorm();
      }
    expect += fold_loss / (n * n);
  }
  expect /= folds;
  CHECK(result.objective[0].second == Catch::Approx(expect).margin(1e-10));
}

TEST_CASE("ties break toward the smallest M") {
  // huge thresholds: every grid point beyond the largest block norm yields the
  // same HAC-only estimate, hence identical losses
  std::mt19937_64 eng(55);
  const auto x = testsup::random_regressors(eng, 4, 24, 1);
  const auto u = testsup::random_matrix(eng, 4, 24);
  CvConfig cfg;
  cfg.folds = 2;
  cfg.m0 = 1e9;
  cfg.grid = {1e7, 1e8, 1e9};
  cfg.bandwidth = 1;
  CHECK(cross_validate_threshold(x, u, cfg).best_m == 1e7);
}

TEST_CASE("validation blocks shorter than L+2 are rejected") {
  std::mt19937_64 eng(56);
  const auto x = testsup::random_regressors(eng, 3, 12, 1);
  const auto u = testsup::random_matrix(eng, 3, 12);
  CvConfig cfg;
  cfg.folds = default_fold_count(12);  // 2 folds, block length 6
  cfg.grid = {0.3};
  cfg.bandwidth = 8;  // needs blocks of at least 10
  CHECK_THROWS_AS(cross_validate_threshold(x, u, cfg), FoldTooShort);
}

TEST_CASE("config validation") {
  std::mt19937_64 eng(57);
  const auto x = testsup::random_regressors(eng, 3, 20, 1);
  const auto u = testsup::random_matrix(eng, 3, 20);
  CvConfig cfg;
  cfg.folds = 2;
  cfg.bandwidth = 1;
  cfg.grid = {};
  CHECK_THROWS_AS(cross_validate_threshold(x, u, cfg), InvalidConfig);
  cfg.grid = {0.5, 0.2};
  CHECK_THROWS_AS(cross_validate_threshold(x, u, cfg), InvalidConfig);
  cfg.grid = {0.5, 2.0};  // above m0 = 1
  CHECK_THROWS_AS(cross_validate_threshold(x, u, cfg), InvalidConfig);
  cfg.grid = {0.5};
  cfg.folds = 1;
  CHECK_THROWS_AS(cross_validate_threshold(x, u, cfg), InvalidConfig);
}

TEST_CASE("independent cross-sections favor heavy thresholding",
          "[statistical]") {
  // diagonal truth: the loss at the top of the grid should usually undercut
  // the loss at the bottom (majority vote over seeded replications)
  mc::DgpSpec spec;
  spec.kind = mc::DgpCase::Case1;
  spec.n = 20;
  spec.t = 64;
  spec.case1 = {0.0, 0.0};
  int wins = 0;
  const int reps = 100;
  for (int r = 0; r < reps; ++r) {
    const auto f = cv_fixture(spec, rng::mix(900, static_cast<std::uint64_t>(r)));
    CvConfig cfg;
    cfg.folds = default_fold_count(spec.t);
    cfg.grid = {0.01, 1.0};
    cfg.bandwidth = auto_bandwidth(spec.t);
    const auto result = cross_validate_threshold(f.x, f.u, cfg);
    if (result.objective[1].second <= result.objective[0].second) ++wins;
  }
  CHECK(wins > reps / 2);
}

TEST_CASE("stronger cross-sectional correlation selects smaller M",
          "[statistical]") {
  mc::DgpSpec base;
  base.kind = mc::DgpCase::Case1;
  base.n = 50;
  base.t = 100;

  auto mean_selected = [&](double gamma) {
    mc::DgpSpec spec = base;
    spec.case1 = {0.0, gamma};
    double total = 0.0;
    const int reps = 40;
    for (int r = 0; r < reps; ++r) {
      const auto f = cv_fixture(spec, rng::mix(901, static_cast<std::uint64_t>(r)));
      CvConfig cfg;
      cfg.folds = default_fold_count(spec.t);
      cfg.grid = default_grid(50);
      cfg.bandwidth = auto_bandwidth(spec.t);
      cfg.mode = ThresholdMode::Soft;
      total += cross_validate_threshold(f.x, f.u, cfg).best_m;
    }
    return total / reps;
  };
  CHECK(mean_selected(1.0) < mean_selected(0.0));
}

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "panelse/panel_data.hpp"
#include "test_support.hpp"

using namespace panelse;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const auto path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path);
  out << content;
  return path;
}

PanelData random_panel(std::mt19937_64& eng, int n, int t, int k) {
  std::vector<std::string> units, times;
  for (int i = 0; i < n; ++i) units.push_back("u" + std::to_string(i + 1));
  for (int s = 0; s < t; ++s) times.push_back(std::to_string(s + 1));
  return PanelData(testsup::random_matrix(eng, n, t),
                   testsup::random_regressors(eng, n, t, k), units, times);
}

}  // namespace

TEST_CASE("load_csv reads a minimal well-formed panel") {
  const auto path = write_temp("panelse_min.csv",
                               "unit,time,y,x1\n"
                               "a,1,1.5,0.5\n"
                               "a,2,2.5,1.5\n"
                               "b,1,-1.0,2.0\n"
                               "b,2,0.25,3.0\n");
  const auto panel = load_csv(path);
  CHECK(panel.n_units() == 2);
  CHECK(panel.n_periods() == 2);
  CHECK(panel.n_regressors() == 1);
  CHECK(panel.y()(0, 1) == 2.5);
  CHECK(panel.x(0)(1, 0) == 2.0);
  CHECK(panel.unit_labels() == std::vector<std::string>{"a", "b"});
  CHECK(panel.regressor_labels() == std::vector<std::string>{"x1"});
  CHECK_FALSE(panel.demeaned());
  std::remove(path.c_str());
}

TEST_CASE("load_csv orders integer times numerically") {
  const auto path = write_temp("panelse_times.csv",
                               "unit,time,y,x1\n"
                               "a,10,3,1\n"
                               "a,2,1,1\n"
                               "a,5,2,1\n");
  const auto panel = load_csv(path);
  CHECK(panel.time_labels() == std::vector<std::string>{"2", "5", "10"});
  CHECK(panel.y()(0, 0) == 1.0);
  CHECK(panel.y()(0, 2) == 3.0);
  std::remove(path.c_str());
}

TEST_CASE("load_csv orders ISO dates lexicographically") {
  const auto path = write_temp("panelse_dates.csv",
                               "unit,time,y,x1\n"
                               "a,2020-02-01,2,1\n"
                               "a,2020-01-15,1,1\n");
  const auto panel = load_csv(path);
  CHECK(panel.time_labels() ==
        std::vector<std::string>{"2020-01-15", "2020-02-01"});
  std::remove(path.c_str());
}

TEST_CASE("load_csv rejects an unbalanced panel naming the missing pair") {
  const auto path = write_temp("panelse_missing.csv",
                               "unit,time,y,x1\n"
                               "a,1,1.5,0.5\n"
                               "a,2,2.5,1.5\n"
                               "b,1,-1.0,2.0\n");
  CHECK_THROWS_MATCHES(load_csv(path), MissingCell,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("unit=b") &&
                           Catch::Matchers::ContainsSubstring("time=2")));
  std::remove(path.c_str());
}

TEST_CASE("load_csv rejects duplicate cells") {
  const auto path = write_temp("panelse_dup.csv",
                               "unit,time,y,x1\n"
                               "a,1,1.5,0.5\n"
                               "a,1,2.5,1.5\n");
  CHECK_THROWS_AS(load_csv(path), DuplicateCell);
  std::remove(path.c_str());
}

TEST_CASE("load_csv reports the row of a parse failure") {
  const auto path = write_temp("panelse_parse.csv",
                               "unit,time,y,x1\n"
                               "a,1,1.5,0.5\n"
                               "a,2,abc,1.5\n");
  CHECK_THROWS_MATCHES(load_csv(path), ParseFailure,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("row 3")));
  std::remove(path.c_str());
}

TEST_CASE("load_csv rejects empty input") {
  const auto path = write_temp("panelse_empty.csv", "unit,time,y,x1\n");
  CHECK_THROWS_AS(load_csv(path), EmptyInput);
  std::remove(path.c_str());
}

TEST_CASE("load_csv honors a schema mapping") {
  const auto path = write_temp("panelse_schema.csv",
                               "state,year,rate,treat,other\n"
                               "a,1,1.0,0.5,9\n"
                               "a,2,2.0,1.5,9\n");
  CsvSchema schema;
  schema.unit_col = "state";
  schema.time_col = "year";
  schema.y_col = "rate";
  schema.x_cols = {"treat"};
  const auto panel = load_csv(path, schema);
  CHECK(panel.n_regressors() == 1);
  CHECK(panel.regressor_labels() == std::vector<std::string>{"treat"});
  std::remove(path.c_str());
}

TEST_CASE("save then load round-trips values exactly") {
  std::mt19937_64 eng(71);
  const auto panel = random_panel(eng, 4, 5, 2);
  const auto path =
      (std::filesystem::temp_directory_path() / "panelse_rt.csv").string();
  save_csv(panel, path);
  const auto back = load_csv(path);
  REQUIRE(back.n_units() == panel.n_units());
  REQUIRE(back.n_periods() == panel.n_periods());
  CHECK((back.y() - panel.y()).cwiseAbs().maxCoeff() == 0.0);
  for (int j = 0; j < panel.n_regressors(); ++j)
    CHECK((back.x(j) - panel.x(j)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.unit_labels() == panel.unit_labels());
  CHECK(back.time_labels() == panel.time_labels());
  std::remove(path.c_str());
}

TEST_CASE("within transform zeroes an additively separable panel") {
  Eigen::MatrixXd y(2, 2);
  y << 1, 2, 3, 4;  // y_it = r_i + c_t exactly
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(2, 2);
  PanelData panel(y, {x}, {"a", "b"}, {"1", "2"});
  const auto [out, report] = within_transform(panel);
  CHECK(out.demeaned());
  CHECK(out.y().cwiseAbs().maxCoeff() < 1e-14);
  // constant regressor is absorbed entirely by the fixed effects
  CHECK(out.x(0).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(report.grand_mean(0) == Catch::Approx(2.5));
}

TEST_CASE("within transform output has zero unit and time means") {
  std::mt19937_64 eng(5);
  const auto panel = random_panel(eng, 3, 4, 2);
  const auto [out, report] = within_transform(panel);

  auto check_zero_means = [](const Eigen::MatrixXd& z) {
    for (int i = 0; i < z.rows(); ++i) CHECK(std::abs(z.row(i).mean()) < 1e-10);
    for (int t = 0; t < z.cols(); ++t) CHECK(std::abs(z.col(t).mean()) < 1e-10);
  };
  check_zero_means(out.y());
  check_zero_means(out.x(0));
  check_zero_means(out.x(1));

  // report columns match directly computed means
  for (int i = 0; i < 3; ++i)
    CHECK(report.unit_means(i, 0) == Catch::Approx(panel.y().row(i).mean()));
  for (int t = 0; t < 4; ++t)
    CHECK(report.time_means(t, 2) == Catch::Approx(panel.x(1).col(t).mean()));
}

TEST_CASE("within transform is idempotent") {
  std::mt19937_64 eng(6);
  const auto panel = random_panel(eng, 4, 6, 1);
  const auto [once, r1] = within_transform(panel);
  PanelData rewrapped(once.y(), once.x(), once.unit_labels(), once.time_labels(),
                      /*demeaned=*/false);
  const auto [twice, r2] = within_transform(rewrapped);
  CHECK((twice.y() - once.y()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((twice.x(0) - once.x(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("within transform is linear") {
  std::mt19937_64 eng(7);
  const int n = 3, t = 5;
  const Eigen::MatrixXd z1 = testsup::random_matrix(eng, n, t);
  const Eigen::MatrixXd z2 = testsup::random_matrix(eng, n, t);
  const double a = 2.5, b = -1.25;

  auto transform_y = [&](const Eigen::MatrixXd& z) {
    PanelData p(z, {Eigen::MatrixXd::Ones(n, t)}, {"a", "b", "c"},
                {"1", "2", "3", "4", "5"});
    return within_transform(p).first.y();
  };
  const Eigen::MatrixXd lhs = transform_y(a * z1 + b * z2);
  const Eigen::MatrixXd rhs = a * transform_y(z1) + b * transform_y(z2);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("within transform refuses demeaned input") {
  std::mt19937_64 eng(8);
  const auto panel = random_panel(eng, 3, 4, 1);
  const auto once = within_transform(panel).first;
  CHECK_THROWS_AS(within_transform(once), AlreadyDemeaned);
}

TEST_CASE("panel construction rejects non-finite and misshapen input") {
  Eigen::MatrixXd y(2, 2);
  y << 1, 2, 3, std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(PanelData(y, {Eigen::MatrixXd::Ones(2, 2)}, {"a", "b"}, {"1", "2"}),
                  ParseFailure);
  Eigen::MatrixXd good = Eigen::MatrixXd::Zero(2, 2);
  CHECK_THROWS_AS(PanelData(good, {Eigen::MatrixXd::Ones(2, 3)}, {"a", "b"}, {"1", "2"}),
                  ShapeMismatch);
  CHECK_THROWS_AS(PanelData(good, {}, {"a", "b"}, {"1", "2"}), ShapeMismatch);
}

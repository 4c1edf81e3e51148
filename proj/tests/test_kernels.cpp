#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "panelse/kernels.hpp"

using namespace panelse;

TEST_CASE("bartlett weight evaluates the triangular formula") {
  CHECK(bartlett_weight(1, 3) == Catch::Approx(0.75).margin(1e-15));
  CHECK(bartlett_weight(3, 3) == Catch::Approx(0.25).margin(1e-15));
  CHECK(bartlett_weight(4, 3) == 0.0);
  CHECK(bartlett_weight(0, 3) == 1.0);
  CHECK(bartlett_weight(1, 0) == 0.0);
}

TEST_CASE("bartlett weight is monotone in lag and bandwidth") {
  for (int l = 1; l <= 12; ++l) {
    for (int h = 1; h <= l; ++h) {
      CHECK(bartlett_weight(h, l) >= 0.0);
      CHECK(bartlett_weight(h, l) <= 1.0);
      if (h > 1) CHECK(bartlett_weight(h, l) <= bartlett_weight(h - 1, l));
      CHECK(bartlett_weight(h, l + 1) >= bartlett_weight(h, l));
    }
  }
  // weight(h, L) -> 1 as L grows, for each fixed h
  for (int h = 1; h <= 5; ++h) CHECK(bartlett_weight(h, 100000) > 0.9999);
}

TEST_CASE("automatic bandwidth rule") {
  CHECK(auto_bandwidth(100) == 4);
  CHECK(auto_bandwidth(200) == 4);  // 4*2^(2/9) = 4.666..., floored
  CHECK(auto_bandwidth(33) == 3);   // 4*(0.33)^(2/9) = 3.1265..., floored
  CHECK(auto_bandwidth(2) == 1);    // floor(1.677) = 1
}

TEST_CASE("threshold scale formula") {
  const auto s = threshold_scale(4, 50, 100);
  CHECK(s.value == Catch::Approx(4.0 * std::sqrt(std::log(200.0) / 100.0)).margin(1e-12));
  CHECK(s.value == Catch::Approx(0.920722965200546).margin(1e-12));
  CHECK(s.bandwidth == 4);
  CHECK(s.n_units == 50);
  CHECK(s.n_periods == 100);

  const auto e = threshold_scale(3, 48, 33);  // empirical-study dimensions
  CHECK(e.value == Catch::Approx(3.0 * std::sqrt(std::log(144.0) / 33.0)).margin(1e-12));
  CHECK(e.value == Catch::Approx(1.1642180324823572).margin(1e-12));
}

TEST_CASE("threshold scale is recomputable from its fields") {
  for (int l : {1, 3, 7}) {
    for (int n : {2, 50, 200}) {
      for (int t : {2, 100, 333}) {
        const auto s = threshold_scale(l, n, t);
        CHECK(std::abs(s.value - l * std::sqrt(std::log(double(l) * n) / t)) < 1e-12);
      }
    }
  }
}

TEST_CASE("threshold scale monotonicity") {
  // strictly decreasing in T, strictly increasing in L (for L*N >= 3)
  CHECK(threshold_scale(3, 50, 200).value < threshold_scale(3, 50, 100).value);
  CHECK(threshold_scale(4, 50, 100).value > threshold_scale(3, 50, 100).value);
  CHECK(threshold_scale(2, 2, 10).value > threshold_scale(1, 2, 10).value);
}

TEST_CASE("threshold scale rejects degenerate dimensions") {
  CHECK_THROWS_AS(threshold_scale(0, 50, 100), DomainError);
  CHECK_THROWS_AS(threshold_scale(1, 1, 100), DomainError);
  CHECK_THROWS_AS(threshold_scale(3, 50, 1), DomainError);
}

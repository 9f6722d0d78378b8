#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "crossed/rng.hpp"
#include "crossed/stats.hpp"

#include <cmath>
#include <vector>

using namespace crossed;

TEST_CASE("moments") {
  std::vector<double> x{1, 2, 3, 4};
  CHECK(mean(x) == doctest::Approx(2.5));
  CHECK(variance(x) == doctest::Approx(5.0 / 3.0));
  CHECK_THROWS_AS(mean({}), std::invalid_argument);
  CHECK_THROWS_AS(variance({1.0}), std::invalid_argument);
}

TEST_CASE("two-sample z") {
  SUBCASE("identical samples give zero") {
    std::vector<double> a{1, 2, 3, 4, 5};
    CHECK(two_sample_z(a, a) == doctest::Approx(0.0));
  }
  SUBCASE("hand-computed example") {
    // means 2 and 4, variances 1 and 1, n = 3 each: z = -2 / sqrt(2/3)
    std::vector<double> a{1, 2, 3}, b{3, 4, 5};
    CHECK(two_sample_z(a, b) == doctest::Approx(-2.0 / std::sqrt(2.0 / 3.0)));
  }
  SUBCASE("calibration: same-law normal samples rarely exceed 4") {
    Rng rng = make_rng(5);
    int extreme = 0;
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> a, b;
      for (int i = 0; i < 200; ++i) a.push_back(draw_normal(rng));
      for (int i = 0; i < 200; ++i) b.push_back(draw_normal(rng));
      if (std::abs(two_sample_z(a, b)) > 4.0) ++extreme;
    }
    CHECK(extreme == 0);
  }
}

TEST_CASE("Kolmogorov-Smirnov two-sample") {
  SUBCASE("hand-computed statistic") {
    KsResult r = ks_two_sample({1, 2, 3}, {1.5, 2.5});
    CHECK(r.statistic == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("identical samples") {
    KsResult r = ks_two_sample({1, 2, 3}, {1, 2, 3});
    CHECK(r.statistic == doctest::Approx(0.0));
    CHECK(r.p_value == doctest::Approx(1.0));
  }
  SUBCASE("disjoint samples") {
    std::vector<double> a{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<double> b{11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
    KsResult r = ks_two_sample(a, b);
    CHECK(r.statistic == doctest::Approx(1.0));
    CHECK(r.p_value < 1e-3);
  }
  SUBCASE("same law keeps p above the rejection line") {
    Rng rng = make_rng(6);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> a, b;
      for (int i = 0; i < 2000; ++i) a.push_back(draw_normal(rng));
      for (int i = 0; i < 2000; ++i) b.push_back(draw_normal(rng));
      CHECK(ks_two_sample(a, b).p_value > 1e-3);
    }
  }
  SUBCASE("shifted law is detected") {
    Rng rng = make_rng(7);
    std::vector<double> a, b;
    for (int i = 0; i < 2000; ++i) a.push_back(draw_normal(rng));
    for (int i = 0; i < 2000; ++i) b.push_back(draw_normal(rng) + 0.5);
    CHECK(ks_two_sample(a, b).p_value < 1e-6);
  }
}

TEST_CASE("drift diagnostic") {
  SUBCASE("stationary chain stays below 4") {
    Rng rng = make_rng(8);
    std::vector<double> chain;
    for (int i = 0; i < 5000; ++i) chain.push_back(draw_normal(rng));
    CHECK(std::abs(geweke_z(chain)) < 4.0);
  }
  SUBCASE("trending chain is flagged") {
    Rng rng = make_rng(9);
    std::vector<double> chain;
    for (int i = 0; i < 5000; ++i) chain.push_back(draw_normal(rng) + i * 1e-3);
    CHECK(std::abs(geweke_z(chain)) > 4.0);
  }
  SUBCASE("constant chain gives zero") {
    std::vector<double> chain(1000, 2.0);
    CHECK(geweke_z(chain) == doctest::Approx(0.0));
  }
  SUBCASE("short chains rejected") {
    CHECK_THROWS_AS(geweke_z(std::vector<double>(50, 1.0)), std::invalid_argument);
  }
}

TEST_CASE("log-log slope") {
  SUBCASE("exact power law") {
    std::vector<double> x{10, 20, 40, 80}, y;
    for (double v : x) y.push_back(3.0 * std::pow(v, 2.5));
    CHECK(log_log_slope(x, y) == doctest::Approx(2.5).epsilon(1e-12));
  }
  SUBCASE("scale invariance in y") {
    std::vector<double> x{1, 2, 4}, y{2, 8, 32};  // slope 2
    CHECK(log_log_slope(x, y) == doctest::Approx(2.0));
    std::vector<double> y2{20, 80, 320};
    CHECK(log_log_slope(x, y2) == doctest::Approx(2.0));
  }
  SUBCASE("rejections") {
    CHECK_THROWS_AS(log_log_slope({1, 2}, {1}), std::invalid_argument);
    CHECK_THROWS_AS(log_log_slope({1, -2}, {1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(log_log_slope({3, 3}, {1, 2}), std::invalid_argument);
  }
}

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "dahl/core/errors.hpp"
#include "dahl/stats/special.hpp"
#include "dahl/stats/tests.hpp"

using namespace dahl;
using namespace dahl::stats;

namespace {

const double kAB[] = {0.5, 1.0, 2.0, 5.0, 50.0};
const double kX[] = {0.01, 0.1, 0.3, 0.45, 0.5, 0.65, 0.9, 0.99};

}  // namespace

TEST_CASE("reg_inc_beta matches quadrature on the 200-point grid") {
  double worst = 0.0;
  for (double a : kAB) {
    for (double b : kAB) {
      for (double x : kX) {
        const double got = reg_inc_beta(a, b, x);
        const double want = oracle::reg_inc_beta(a, b, x);
        worst = std::max(worst, std::fabs(got - want));
        CHECK_MESSAGE(std::fabs(got - want) <= 1e-10, "a=" << a << " b=" << b << " x=" << x);
      }
    }
  }
  MESSAGE("max abs deviation " << worst);
}

TEST_CASE("reg_inc_beta closed forms and edges") {
  CHECK(reg_inc_beta(1.0, 1.0, 0.37) == doctest::Approx(0.37).epsilon(1e-15));
  CHECK(reg_inc_beta(2.0, 1.0, 0.3) == doctest::Approx(0.09).epsilon(1e-14));
  CHECK(reg_inc_beta(1.0, 3.0, 0.2) == doctest::Approx(1.0 - std::pow(0.8, 3)).epsilon(1e-14));
  CHECK(reg_inc_beta(0.5, 0.5, 0.25) == doctest::Approx(2.0 / M_PI * std::asin(0.5)).epsilon(1e-14));
  CHECK(reg_inc_beta(3.0, 4.0, 0.0) == 0.0);
  CHECK(reg_inc_beta(3.0, 4.0, 1.0) == 1.0);
  CHECK_THROWS_AS(reg_inc_beta(0.0, 1.0, 0.5), PreconditionError);
  CHECK_THROWS_AS(reg_inc_beta(1.0, -1.0, 0.5), PreconditionError);
  CHECK_THROWS_AS(reg_inc_beta(1.0, 1.0, 1.5), PreconditionError);
}

TEST_CASE("reg_inc_beta symmetry and monotonicity") {
  for (double a : kAB) {
    for (double b : kAB) {
      double prev = 0.0;
      for (int i = 1; i < 100; ++i) {
        const double x = i / 100.0;
        const double v = reg_inc_beta(a, b, x);
        CHECK(v >= prev);
        prev = v;
        CHECK(std::fabs(v + reg_inc_beta(b, a, 1.0 - x) - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("reg_inc_beta split complement keeps precision near 1") {
  const double y = 1e-17;
  const double v = reg_inc_beta(2.0, 3.0, 1.0 - y, y);
  CHECK(v <= 1.0);
  CHECK(1.0 - v < 1e-15);
}

TEST_CASE("t_sf_two_tailed") {
  CHECK(std::fabs(t_sf_two_tailed(1.0, 1.0) - 0.5) <= 1e-12);
  // Cauchy: P(|T| >= t) = 1 - 2 atan(t) / pi
  for (double t : {0.2, 3.0, 40.0}) {
    CHECK(std::fabs(t_sf_two_tailed(t, 1.0) - (1.0 - 2.0 * std::atan(t) / M_PI)) <= 1e-12);
  }
  CHECK(t_sf_two_tailed(0.0, 7.0) == 1.0);
  CHECK(t_sf_two_tailed(-2.5, 9.0) == t_sf_two_tailed(2.5, 9.0));
  for (double df : {2.0, 5.5, 30.0, 97.0}) {
    for (double t : {0.3, 1.5, 2.2, 4.0, 6.4996}) {
      CHECK_MESSAGE(std::fabs(t_sf_two_tailed(t, df) - oracle::t_two_tailed(t, df)) <= 1e-9,
                    "t=" << t << " df=" << df);
    }
  }
}

TEST_CASE("t tail approaches the normal tail for large df") {
  for (double z : {0.5, 1.0, 1.96, 3.0}) {
    CHECK(std::fabs(t_sf_two_tailed(z, 1e6) - oracle::normal_two_tailed(z)) <= 1e-6);
  }
}

TEST_CASE("F distribution against quadrature") {
  for (double d1 : {1.0, 3.0, 10.0}) {
    for (double d2 : {2.0, 8.0, 40.0}) {
      for (double f : {0.2, 1.0, 2.5, 6.0}) {
        const double want = oracle::f_cdf(f, d1, d2);
        CHECK_MESSAGE(std::fabs(f_cdf(f, d1, d2) - want) <= 1e-9, "f=" << f << " d1=" << d1 << " d2=" << d2);
        CHECK(std::fabs(f_cdf(f, d1, d2) + f_sf(f, d1, d2) - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("pearson reproduces the reference correlation p-value") {
  const auto start = std::chrono::steady_clock::now();
  const auto [x, y] = oracle::pairs_with_r(99, 0.5508);
  const auto r = pearson({x, y});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(r.statistic == doctest::Approx(0.5508).epsilon(1e-12));
  CHECK(r.df == 97.0);
  CHECK(std::fabs(r.p_two_tailed - 3.4927e-9) / 3.4927e-9 <= 0.02);
  const double t = 0.5508 * std::sqrt(97.0 / (1 - 0.5508 * 0.5508));
  CHECK(std::fabs(r.p_two_tailed - oracle::t_two_tailed(t, 97.0)) <= 1e-15);
  CHECK(secs < 1.0);
}

TEST_CASE("pearson properties") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> nd;
  std::vector<double> x(40), y(40);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = nd(rng);
    y[i] = 0.3 * x[i] + nd(rng);
  }
  const double r = pearson({x, y}).statistic;
  CHECK(std::fabs(r - oracle::pearson_r(x, y)) <= 1e-12);

  SUBCASE("affine invariance") {
    std::vector<double> ax(x), by(y);
    for (auto& v : ax) v = 3.5 * v - 7.0;
    for (auto& v : by) v = 0.01 * v + 100.0;
    CHECK(std::fabs(pearson({ax, y}).statistic - r) <= 1e-12);
    CHECK(std::fabs(pearson({x, by}).statistic - r) <= 1e-12);
  }
  SUBCASE("perfect correlation has p = 0") {
    std::vector<double> z(x);
    for (auto& v : z) v = 2 * v + 1;
    const auto res = pearson({x, z});
    CHECK(res.statistic == doctest::Approx(1.0));
    CHECK(res.p_two_tailed == 0.0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(pearson({{1, 2}, {1, 2}}), PreconditionError);
    CHECK_THROWS_AS(pearson({{1, 2, 3}, {1, 2}}), PreconditionError);
    CHECK_THROWS_WITH(pearson({{1, 1, 1}, {1, 2, 3}}), "zero variance");
    CHECK_THROWS_AS(pearson({{1, NAN, 3}, {1, 2, 3}}), PreconditionError);
  }
}

TEST_CASE("F-test for equal variances") {
  const std::vector<double> a{1.1, 2.3, 0.7, 3.9, 2.2, 1.8, 2.9};
  const std::vector<double> b{2.0, 2.1, 1.9, 2.4, 2.2};
  const auto ab = f_test_equal_variance(a, b);
  const auto ba = f_test_equal_variance(b, a);
  CHECK(ab.statistic == ba.statistic);
  CHECK(ab.p_two_tailed == ba.p_two_tailed);
  CHECK(ab.statistic >= 1.0);
  CHECK(ab.df == 6.0);
  CHECK(*ab.df2 == 4.0);
  const double sf = 1.0 - oracle::f_cdf(ab.statistic, 6.0, 4.0);
  CHECK(std::fabs(ab.p_two_tailed - 2.0 * std::min(sf, 1.0 - sf)) <= 1e-9);

  const auto same = f_test_equal_variance(a, a);
  CHECK(same.statistic == 1.0);
  CHECK(same.p_two_tailed == doctest::Approx(1.0));
  CHECK_THROWS_AS(f_test_equal_variance(std::vector<double>{1.0}, b), PreconditionError);
}

TEST_CASE("t-test") {
  const std::vector<double> x{5.1, 4.9, 5.6, 5.8, 6.0, 5.2, 4.7};
  const std::vector<double> y{4.1, 4.5, 3.9, 4.8, 4.4, 4.0};

  SUBCASE("identical samples") {
    const auto r = t_test(x, x);
    CHECK(r.statistic == 0.0);
    CHECK(r.p_two_tailed == 1.0);
  }
  SUBCASE("antisymmetry") {
    CHECK(t_test(x, y).statistic == doctest::Approx(-t_test(y, x).statistic).epsilon(1e-15));
    CHECK(t_test(x, y).p_two_tailed == doctest::Approx(t_test(y, x).p_two_tailed).epsilon(1e-15));
    std::vector<double> shifted(x);
    for (auto& v : shifted) v += 0.4;
    CHECK(t_test(x, shifted).statistic == doctest::Approx(-t_test(shifted, x).statistic));
  }
  SUBCASE("student pooled against quadrature") {
    const auto r = t_test(x, y, TTestVariant::StudentPooled);
    CHECK(r.df == 11.0);
    CHECK(std::fabs(r.p_two_tailed - oracle::t_two_tailed(r.statistic, r.df)) <= 1e-9);
  }
  SUBCASE("welch against quadrature") {
    const auto r = t_test(x, y, TTestVariant::Welch);
    CHECK(r.df < 11.0);
    CHECK(std::fabs(r.p_two_tailed - oracle::t_two_tailed(r.statistic, r.df)) <= 1e-9);
  }
  SUBCASE("zero spread") {
    const std::vector<double> c{2, 2, 2}, d{3, 3, 3};
    CHECK(t_test(c, c).p_two_tailed == 1.0);
    CHECK_THROWS_AS(t_test(c, d), PreconditionError);
  }
  SUBCASE("variant names") {
    CHECK(parse_t_test_variant("student") == TTestVariant::StudentPooled);
    CHECK(parse_t_test_variant("welch") == TTestVariant::Welch);
    CHECK_FALSE(parse_t_test_variant("paired"));
  }
}

TEST_CASE("unit_count_compare") {
  std::vector<int> a(99);
  for (int i = 0; i < 99; ++i) a[i] = 5 + (i * 7) % 11;
  const auto same = unit_count_compare(a, a);
  CHECK(same.test.p_two_tailed == 1.0);
  CHECK_FALSE(same.significant);

  auto b = a;
  b[10] += 30;
  const auto r = unit_count_compare(a, b);
  CHECK(std::fabs(r.test.p_two_tailed - oracle::t_two_tailed(r.test.statistic, 196.0)) <= 1e-9);
  CHECK(r.significant == (r.test.p_two_tailed < 0.05));

  CHECK_THROWS_AS(unit_count_compare(std::vector<int>{1, 2}, std::vector<int>{1, 2}), PreconditionError);
  CHECK_THROWS_AS(unit_count_compare(std::vector<int>{1, 2, 3}, std::vector<int>{1, 2}), PreconditionError);
}

TEST_CASE("p-values stay in [0, 1]") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int i = 0; i < 500; ++i) {
    const double p = t_sf_two_tailed(u(rng), 0.5 + std::fabs(u(rng)));
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
}

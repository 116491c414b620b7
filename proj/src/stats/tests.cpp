#include "dahl/stats/tests.hpp"

#include <cmath>
#include <string>

#include "dahl/core/errors.hpp"
#include "dahl/stats/special.hpp"

namespace dahl::stats {
namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw PreconditionError(std::string(what) + " contains a non-finite value");
  }
}

}  // namespace

double mean(std::span<const double> v) {
  if (v.empty()) throw PreconditionError("mean of an empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
  if (v.size() < 2) throw PreconditionError("sample variance needs at least 2 values");
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

TestResult pearson(const PairedScores& pair) {
  const auto n = pair.x.size();
  if (pair.y.size() != n) throw PreconditionError("pearson requires equal-length samples");
  if (n < 3) throw PreconditionError("pearson requires n >= 3");
  require_finite(pair.x, "x");
  require_finite(pair.y, "y");

  const double mx = mean(pair.x);
  const double my = mean(pair.y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = pair.x[i] - mx;
    const double dy = pair.y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw PreconditionError("zero variance");

  double r = sxy / std::sqrt(sxx * syy);
  if (r > 1.0) r = 1.0;
  if (r < -1.0) r = -1.0;
  const double df = static_cast<double>(n - 2);
  TestResult out{r, 0.0, df, std::nullopt};
  if (std::fabs(r) < 1.0) {
    out.p_two_tailed = t_sf_two_tailed(r * std::sqrt(df / (1.0 - r * r)), df);
  }
  return out;
}

TestResult f_test_equal_variance(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 2 || y.size() < 2) throw PreconditionError("F-test requires sample sizes >= 2");
  require_finite(x, "x");
  require_finite(y, "y");
  const double vx = sample_variance(x);
  const double vy = sample_variance(y);
  if (vx == 0.0 || vy == 0.0) throw PreconditionError("zero variance");

  const bool x_on_top = vx > vy || (vx == vy && x.size() >= y.size());
  const double num = x_on_top ? vx : vy;
  const double den = x_on_top ? vy : vx;
  const double df1 = static_cast<double>((x_on_top ? x.size() : y.size()) - 1);
  const double df2 = static_cast<double>((x_on_top ? y.size() : x.size()) - 1);
  const double f = num / den;
  const double lower = f_cdf(f, df1, df2);
  const double upper = f_sf(f, df1, df2);
  double p = 2.0 * (lower < upper ? lower : upper);
  if (p > 1.0) p = 1.0;
  return TestResult{f, p, df1, df2};
}

std::optional<TTestVariant> parse_t_test_variant(std::string_view name) noexcept {
  if (name == "student" || name == "student_pooled" || name == "pooled") {
    return TTestVariant::StudentPooled;
  }
  if (name == "welch") return TTestVariant::Welch;
  return std::nullopt;
}

TestResult t_test(std::span<const double> x, std::span<const double> y, TTestVariant variant) {
  if (x.size() < 2 || y.size() < 2) throw PreconditionError("t-test requires sample sizes >= 2");
  require_finite(x, "x");
  require_finite(y, "y");
  const double n1 = static_cast<double>(x.size());
  const double n2 = static_cast<double>(y.size());
  const double m1 = mean(x);
  const double m2 = mean(y);
  const double v1 = sample_variance(x);
  const double v2 = sample_variance(y);

  double se = 0.0;
  double df = 0.0;
  if (variant == TTestVariant::StudentPooled) {
    df = n1 + n2 - 2.0;
    const double pooled = ((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / df;
    se = std::sqrt(pooled * (1.0 / n1 + 1.0 / n2));
  } else {
    const double a = v1 / n1;
    const double b = v2 / n2;
    se = std::sqrt(a + b);
    df = (a + b) * (a + b) / (a * a / (n1 - 1.0) + b * b / (n2 - 1.0));
  }

  if (se == 0.0) {
    if (m1 == m2) return TestResult{0.0, 1.0, variant == TTestVariant::Welch ? n1 + n2 - 2.0 : df, std::nullopt};
    throw PreconditionError("zero pooled variance with unequal means");
  }
  const double t = (m1 - m2) / se;
  return TestResult{t, t_sf_two_tailed(t, df), df, std::nullopt};
}

CountComparison unit_count_compare(std::span<const int> counts_a, std::span<const int> counts_b,
                                   double alpha) {
  if (counts_a.size() != counts_b.size()) {
    throw PreconditionError("unit count vectors must have equal lengths");
  }
  if (counts_a.size() < 3) throw PreconditionError("unit count comparison requires n >= 3");
  const std::vector<double> a(counts_a.begin(), counts_a.end());
  const std::vector<double> b(counts_b.begin(), counts_b.end());
  CountComparison out;
  out.alpha = alpha;
  out.test = t_test(a, b, TTestVariant::StudentPooled);
  out.significant = out.test.p_two_tailed < alpha;
  return out;
}

}  // namespace dahl::stats

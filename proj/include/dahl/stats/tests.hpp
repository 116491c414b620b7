#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace dahl::stats {

struct TestResult {
  double statistic = 0.0;
  double p_two_tailed = 1.0;
  double df = 0.0;
  std::optional<double> df2;  // denominator degrees of freedom (F-test only)
};

/// Two aligned samples (e.g. automated vs. human precision per response).
struct PairedScores {
  std::vector<double> x;
  std::vector<double> y;
};

double mean(std::span<const double> v);
/// Unbiased sample variance (n - 1 denominator).
double sample_variance(std::span<const double> v);

/// Pearson r as `statistic`, df = n - 2, p from the t transform. |r| = 1 gives p = 0.
/// Requires n >= 3, equal lengths, finite values, non-constant inputs.
TestResult pearson(const PairedScores& pair);

/// Variance-ratio test with the larger variance in the numerator (ties put
/// the larger sample there), so the result does not depend on argument order.
TestResult f_test_equal_variance(std::span<const double> x, std::span<const double> y);

enum class TTestVariant { StudentPooled, Welch };

std::optional<TTestVariant> parse_t_test_variant(std::string_view name) noexcept;

/// Two-sample t-test of mean(x) - mean(y). Zero spread with equal means
/// yields t = 0, p = 1; zero spread with different means is an error.
TestResult t_test(std::span<const double> x, std::span<const double> y,
                  TTestVariant variant = TTestVariant::StudentPooled);

struct CountComparison {
  TestResult test;
  bool significant = false;
  double alpha = 0.05;
};

/// Splitter-vs-reference unit counts: equal lengths >= 3, Student t-test,
/// decision at `alpha`.
CountComparison unit_count_compare(std::span<const int> counts_a, std::span<const int> counts_b,
                                   double alpha = 0.05);

}  // namespace dahl::stats

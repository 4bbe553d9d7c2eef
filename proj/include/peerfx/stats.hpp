#pragma once

// Power analysis, simultaneous multinomial intervals, exact and rank tests,
// covariate balance and attrition diagnostics.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "peerfx/analysis.hpp"

namespace peerfx {

// 2 asin sqrt(p1) - 2 asin sqrt(p2).
double cohens_h(double p1, double p2);

// Smallest h detectable with the given power by a two-sided test of two
// independent proportions (normal approximation, far tail ignored).
double detectable_h(double n1, double n2, double alpha, double power);

// Phi(h / sqrt(1/n1 + 1/n2) - z_{1 - alpha/2}).
double power_two_proportions(double h, double n1, double n2, double alpha);

// t^2 / (4 E^2), unrounded.
double multinomial_min_n(double t, double margin);
// Margin E at which multinomial_min_n(t, E) == n.
double multinomial_margin_for_n(double t, double n);

struct ProportionInterval {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct SisonGlazResult {
  std::vector<ProportionInterval> intervals;
  int c = 0;               // integer half-width in counts
  double gamma = 0.0;      // interpolation factor, upper endpoints get + 2 gamma / n
  double coverage_c = 0.0;       // nu(c)
  double coverage_c_plus1 = 0.0; // nu(c + 1)
};

// Simultaneous intervals for multinomial proportions with joint coverage
// 1 - alpha. Intervals are p_i - c/n and p_i + (c + 2 gamma)/n, clipped to
// [0, 1].
SisonGlazResult sison_glaz_ci(std::span<const std::uint64_t> counts, double alpha = 0.05);

// Joint coverage nu(c) of the truncated-Poisson representation, with the
// Edgeworth-corrected normal density for the sum.
double sison_glaz_coverage(std::span<const std::uint64_t> counts, int c);

using Table2x3 = std::array<std::array<std::uint64_t, 3>, 2>;

// Two-sided conditional exact test: sum of the probabilities of all tables
// with the observed margins that are no more probable than the observed one.
double fisher_exact_2x3(const Table2x3& table);

// Hypergeometric probability of `table` given its margins.
double table_probability(const Table2x3& table);

// Pearson correlation of mid-ranks.
double spearman_rho(std::span<const double> x, std::span<const double> y);

// Mid-ranks (1-based, ties averaged).
std::vector<double> mid_ranks(std::span<const double> v);

struct TestResult {
  std::optional<double> difference;  // mean(x) - mean(y) for the t test
  double statistic = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

// Welch two-sample t test with Satterthwaite df.
TestResult welch_t(std::span<const double> x, std::span<const double> y);

// Rank-sum test; statistic W = R_x - n_x (n_x + 1) / 2. Normal approximation
// with tie-corrected variance and continuity correction.
TestResult wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y);

// Exact permutation distribution of W over all splits of the pooled sample;
// p = min(1, 2 min(P(W <= w), P(W >= w))). Both groups at most 8.
TestResult wilcoxon_rank_sum_exact(std::span<const double> x, std::span<const double> y);

enum class BalanceMethod { WelchT, Wilcoxon };

const char* to_string(BalanceMethod m) noexcept;

struct BalanceRow {
  std::string covariate;
  std::optional<double> difference;
  BalanceMethod method = BalanceMethod::WelchT;
  double p_value = 1.0;
  bool unbalanced = false;  // p < 0.05
  std::size_t n_treated = 0;
  std::size_t n_control = 0;
};

inline constexpr double kBalanceLevel = 0.05;

BalanceRow balance_row(const std::string& name, std::span<const double> treated,
                       std::span<const double> control, BalanceMethod method);

// Treated versus eligible controls over the pre-treatment covariates.
// Continuous covariates use the t test, ordinal and binary ones the rank-sum
// test. Missing values are dropped per covariate.
std::vector<BalanceRow> covariate_balance(const StudyData& data);

struct LogitTest {
  double coefficient = 0.0;
  double se = 0.0;
  double p_value = 1.0;
  double rate_z0 = 0.0;  // reporting rate among z = 0
  double rate_z1 = 0.0;  // reporting rate among z = 1
  std::size_t n = 0;
};

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  std::uint64_t count = 0;
  int arm = 0;
};

struct AttritionReport {
  std::size_t n_students = 0;
  std::size_t n_reported = 0;
  double attrition_rate = 0.0;
  // r on z alone, z = 1 for treated students, 0 for everyone else. Absent
  // when nobody attrited.
  std::optional<LogitTest> on_treatment;
  // r on z and the pre-treatment covariates; histograms of its fitted
  // probabilities by arm.
  std::vector<HistogramBin> histogram;
  std::optional<std::string> covariate_model_error;
  double alpha = 0.05;
  bool mipo_violated = false;  // z coefficient significant at alpha
};

struct AttritionOptions {
  double alpha = 0.05;
  std::size_t bins = 20;
  bool covariate_model = true;
};

// r_i = 1 when the endline aspiration is present. Throws Degenerate when no
// student reported.
AttritionReport attrition_mipo(const StudyData& data, const AttritionOptions& options = {});

}  // namespace peerfx

#pragma once

// Max-type two-sample tests with extreme-value (Gumbel-type) calibration.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ucortest/data_matrix.hpp"
#include "ucortest/ustat.hpp"

namespace ucortest {

enum class Method {
  Jackknife,         ///< Kendall's tau, Jackknife variances
  Plugin,            ///< Kendall's tau, plug-in variances
  Pseudo,            ///< Kendall's tau, null (tau = 0) variance
  GenericJackknife,  ///< any kernel through the generic engine, full grid
};

std::string_view to_string(Method method);
/// Accepts jack, plug, ps, generic-jack. Throws InvalidArgumentError.
Method parse_method(std::string_view text);

/// Kernel used by Method::GenericJackknife.
enum class GenericKernel { Kendall, Spearman };

std::string_view to_string(GenericKernel kernel);
GenericKernel parse_generic_kernel(std::string_view text);

struct TestConfig {
  double alpha = 0.05;
  Method method = Method::Pseudo;
  std::optional<std::size_t> row;  ///< 0-based; set for a row test
  bool pseudo_asymptotic = false;  ///< 4/9 instead of the finite-n null variance
  GenericKernel generic_kernel = GenericKernel::Kendall;
  unsigned workers = 1;

  /// Throws InvalidArgumentError unless 0 < alpha < 1.
  void validate() const;
};

/// Per-entry statistics M_ij over a region. Entries outside the region or
/// excluded as degenerate hold NaN.
struct EntryGrid {
  Eigen::MatrixXd values;
  Region region = Region::FullGrid;
  std::vector<VariablePair> degenerate;  ///< zero denominator, excluded from the max

  bool in_region(std::size_t i, std::size_t j) const noexcept {
    return region == Region::FullGrid || i < j;
  }
};

struct TestOutcome {
  Method method = Method::Pseudo;
  double alpha = 0.05;
  std::optional<std::size_t> row;
  std::size_t q = 0;  ///< dimension used for centering
  double statistic = 0.0;
  double x_centered = 0.0;
  double critical_value = 0.0;
  double p_value = 1.0;
  bool reject = false;
  VariablePair argmax;
  EntryGrid entries;
  UMatrix u1;  ///< estimates for the first sample
  UMatrix u2;  ///< estimates for the second sample
  std::vector<std::string> warnings;
};

/// (u1 - u2)^2 / (v1 + v2) per entry in the region of u1.
///
/// Entries whose denominator is not positive are excluded and listed in
/// `degenerate`. Throws DimensionError on shape or region mismatch and
/// DegenerateError when every entry is degenerate.
EntryGrid entry_statistics(const UMatrix& u1, const UMatrix& u2, const VarianceField& v1,
                           const VarianceField& v2);

/// -log(8 pi) - 2 log(-log(1 - alpha)).
double gumbel_offset_full(double alpha);
/// -log(pi) - 2 log(-log(1 - alpha)).
double gumbel_offset_row(double alpha);

/// Rejection threshold for the full max statistic: offset + 4 log q - log log q.
/// Throws InvalidArgumentError when q < 3 or alpha is outside (0, 1).
double critical_value_full(double alpha, std::size_t q);
/// Row threshold: offset + 2 log q - log log q.
double critical_value_row(double alpha, std::size_t q);

/// M - 4 log q + log log q.
double centered_full(double statistic, std::size_t q);
/// M - 2 log q + log log q.
double centered_row(double statistic, std::size_t q);

/// Limiting null CDF exp(-exp(-x / 2) / sqrt(8 pi)) of the centered full statistic.
double limiting_cdf_full(double x);
/// Limiting null CDF exp(-exp(-x / 2) / sqrt(pi)) of the centered row statistic.
double limiting_cdf_row(double x);

/// 1 - limiting_cdf_full(centered_full(M, q)).
double p_value_full(double statistic, std::size_t q);
double p_value_row(double statistic, std::size_t q);

/// Full-matrix test. Kendall methods center by q = d over i < j; the generic
/// method centers by q = d over the full grid.
TestOutcome run_full_test(const DataMatrix& x, const DataMatrix& y, const TestConfig& config);

/// Test of row `row` (0-based): entries (row, j), j != row for Kendall methods.
TestOutcome run_row_test(const DataMatrix& x, const DataMatrix& y, std::size_t row,
                         const TestConfig& config);

/// Full tests for several Kendall methods sharing one pass over the data.
std::vector<TestOutcome> run_kendall_tests(const DataMatrix& x, const DataMatrix& y,
                                           const std::vector<Method>& methods, double alpha,
                                           bool pseudo_asymptotic = false, unsigned workers = 1);

struct DifferentialEntry {
  std::size_t i = 0;
  std::size_t j = 0;
  double statistic = 0.0;
  /// Upper tail of chi-square(1) at M_ij; no multiplicity adjustment.
  double p_marginal = 1.0;
};

/// Region entries with M_ij >= threshold, sorted by M_ij descending then (i, j).
/// For a row test only entries in that row are listed.
std::vector<DifferentialEntry> differential_entries(const TestOutcome& outcome, double threshold);

}  // namespace ucortest

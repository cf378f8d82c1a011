#pragma once

// Kendall's tau and its variance estimators.
//
// All counts are exact integers; floating point enters only in the final
// division, so every quantity here depends on the data only through the
// orderings of each column.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ucortest/data_matrix.hpp"
#include "ucortest/ustat.hpp"

namespace ucortest::kendall {

/// Per-sample concordance counts of one variable pair.
///
/// concordant[a] counts l != a with sign(x_a - x_l) sign(y_a - y_l) = +1,
/// discordant[a] those with -1. Pairs with a zero sign product are ties.
struct ConcordanceProfile {
  std::vector<std::int64_t> concordant;
  std::vector<std::int64_t> discordant;
  std::int64_t tied_pairs = 0;  ///< unordered pairs with zero sign product
  std::size_t n = 0;

  /// sum_a (c_a - d_a) / (n (n - 1)).
  double tau() const;
  /// q_a = (c_a - d_a) / (n - 1).
  std::vector<double> jackknife_components() const;
};

/// Sufficient integer sums of a profile. Both the single-pair and the
/// matrix code paths reduce to these before any division.
struct ConcordanceSums {
  std::int64_t n = 0;
  std::int64_t score = 0;          ///< sum_a (c_a - d_a) = 2 (C - D)
  std::int64_t score_squares = 0;  ///< sum_a (c_a - d_a)^2
  std::int64_t concordant = 0;     ///< sum_a c_a
  std::int64_t concordant_pairs = 0;  ///< sum_a c_a (c_a - 1)
  std::int64_t tied_pairs = 0;

  static ConcordanceSums from_profile(const ConcordanceProfile& profile);

  double tau() const;
  /// Requires n >= 3.
  double jackknife_variance() const;
  /// Requires n >= 3.
  double pi_c() const;
  double pi_cc() const;
  /// (16 / n)(pi_cc - pi_c^2); may be negative.
  double plugin_variance() const;
};

/// Kendall's tau-a of (x, y) in O(n log n) by merge-sort inversion counting.
/// Tied pairs contribute 0. Throws DimensionError on length mismatch and
/// InsufficientSamplesError when n < 2.
double tau_pair(std::span<const double> x, std::span<const double> y);

/// Per-sample concordance counts in O(n log n) using a Fenwick tree over y-ranks.
ConcordanceProfile concordance_profile(std::span<const double> x, std::span<const double> y);

/// Jackknife variance of tau_hat (kernel order 2). Throws DegenerateError when n <= 2.
double jackknife_variance_tau(const ConcordanceProfile& profile);

struct PluginEstimate {
  double variance = 0.0;  ///< raw (16 / n)(pi_cc - pi_c^2), may be negative
  double pi_c = 0.0;
  double pi_cc = 0.0;
};

/// Plug-in variance with pi_c and pi_cc as exact U-statistics computed from
/// the counts. Throws DegenerateError when n <= 2.
PluginEstimate plugin_variance_tau(const ConcordanceProfile& profile);

/// Exact finite-sample variance of tau_hat (Kruskal 1958):
/// 8/(n(n-1)) pi_c(1 - pi_c) + 16 (1/n) ((n-2)/(n-1)) (pi_cc - pi_c^2).
double kruskal_variance(double pi_c, double pi_cc, std::size_t n);

/// Null variance of sqrt(n) tau_hat for continuous independent margins:
/// 4/9 when `asymptotic`, else 2(2n + 5) / (9(n - 1)).
double pseudo_variance(std::size_t n, bool asymptotic);

/// sin(pi tau / 2): latent Gaussian-copula correlation implied by tau.
double sine_latent_correlation(double tau);

/// Floor applied to each plug-in variance before it enters a denominator.
inline constexpr double kPluginVarianceFloor = 1e-12;

/// Which variance fields tau_matrix_with_variances() should fill.
struct VarianceSelection {
  bool jackknife = false;
  bool plugin = false;
  bool pseudo = false;
  bool pseudo_asymptotic = false;
};

/// Estimates for one pair, convenient for reporting.
struct TauPairEstimates {
  double tau_hat = 0.0;
  double var_jack = 0.0;
  double var_plug = 0.0;
  double pi_c_hat = 0.0;
  double pi_cc_hat = 0.0;
};

TauPairEstimates estimate_pair(std::span<const double> x, std::span<const double> y);

/// Tau matrix with the requested variance fields.
///
/// Variance fields hold Var(tau_hat), so the pseudo field is
/// pseudo_variance(n) / n. Plug-in entries below kPluginVarianceFloor are
/// clamped and flagged. The diagonal is 1 with variance 0 and is never tested.
struct KendallFields {
  UMatrix tau;
  std::optional<VarianceField> jackknife;
  std::optional<VarianceField> plugin;
  std::optional<VarianceField> pseudo;
  std::int64_t tied_pairs = 0;  ///< summed over every variable pair
  std::size_t n = 0;
};

/// Which per-pair counting engine to use.
enum class CountingEngine {
  Automatic,  ///< bitset rows when they fit in memory, otherwise Fenwick
  Bitset,     ///< O(n^2 / 64) per pair over precomputed order bitsets
  Fenwick,    ///< O(n log n) per pair
};

/// Requires n >= 3 and d >= 3. `workers` = 0 uses the default worker count.
KendallFields tau_matrix_with_variances(const DataMatrix& data, const VarianceSelection& select,
                                        unsigned workers = 1,
                                        CountingEngine engine = CountingEngine::Automatic);

/// Integer sums for every pair i < j, laid out row-major over the upper triangle.
std::vector<ConcordanceSums> pairwise_sums(const DataMatrix& data, unsigned workers = 1,
                                           CountingEngine engine = CountingEngine::Automatic);

}  // namespace ucortest::kendall

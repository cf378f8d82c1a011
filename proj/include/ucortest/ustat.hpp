#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ucortest/data_matrix.hpp"

namespace ucortest {

/// Which index set a U-matrix is evaluated over.
enum class Region {
  FullGrid,       ///< all (i, j) in {0..q-1}^2, diagonal included
  UpperTriangle,  ///< i < j only; the lower triangle is filled by symmetry
};

/// A bounded kernel of fixed order m evaluated on m sample rows and a variable pair.
///
/// `evaluate(data, rows, i, j)` receives exactly `order` distinct row indices.
struct KernelSpec {
  using Evaluate = std::function<double(const DataMatrix& data,
                                        std::span<const std::size_t> rows,
                                        std::size_t i, std::size_t j)>;

  int order = 2;
  Evaluate evaluate;
  double bound = 1.0;
  bool symmetric = true;
  std::string name;
};

/// sign(v) with sign(0) = 0.
constexpr double sign_of(double v) noexcept {
  return static_cast<double>((0.0 < v) - (v < 0.0));
}

/// Kendall's kernel sign(x1i - x2i) sign(x1j - x2j); order 2, symmetric, bound 1.
KernelSpec kendall_kernel();

/// 3 sign(x1i - x2i) sign(x1j - x3j); order 3, not symmetric, bound 3.
///
/// Its Hoeffding symmetrization is the unbiased Spearman's rho kernel, and
/// its mean is Spearman's rho (grade correlation).
KernelSpec spearman_asymmetric_kernel();

/// Averages `kernel` over all m! orderings of its sample arguments.
/// Requires order >= 2. The result is symmetric and keeps the same bound.
KernelSpec symmetrize_kernel(const KernelSpec& kernel);

/// Upper limit on the number of m-subsets enumerated per pair.
inline constexpr std::uint64_t kMaxKernelEvaluations = 10'000'000;

/// Largest kernel order accepted by exact enumeration.
inline constexpr int kMaxKernelOrder = 3;

/// Exact binomial coefficient; saturates at UINT64_MAX.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k) noexcept;

/// Average of the kernel over all (n choose m) row subsets.
///
/// Throws InsufficientSamplesError when n < m and ComplexityLimitError when
/// m > kMaxKernelOrder or the subset count exceeds kMaxKernelEvaluations.
double u_statistic(const DataMatrix& data, const KernelSpec& kernel, VariablePair pair);

/// Leave-one-out components: entry a averages the kernel over the subsets
/// that contain row a. Their mean equals u_statistic(). Requires n >= m + 1.
std::vector<double> jackknife_components(const DataMatrix& data, const KernelSpec& kernel,
                                         VariablePair pair);

/// m^2 (n - 1) / (n (n - m)^2) * sum_a (q_a - u_hat)^2.
/// Throws DegenerateError when n <= m and DimensionError when q.size() != n.
double jackknife_variance(std::span<const double> components, double u_hat, std::size_t n,
                          int order);

/// q x q matrix of U-statistics over a region.
struct UMatrix {
  Eigen::MatrixXd entries;
  Region region = Region::FullGrid;

  std::size_t size() const noexcept { return static_cast<std::size_t>(entries.rows()); }
};

/// Per-entry variance estimates aligned with a UMatrix.
///
/// `floored` marks entries whose raw estimate fell below the floor and was
/// clamped (plug-in estimator only).
struct VarianceField {
  Eigen::MatrixXd values;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> floored;
  Region region = Region::FullGrid;
};

/// U-matrix together with its Jackknife variance field.
struct UStatFields {
  UMatrix u;
  VarianceField variance;
};

/// Evaluates u_statistic() over every pair in `region`, mirroring the upper
/// triangle when region is UpperTriangle. Per-pair failures are rethrown as
/// PairError naming (i, j). `workers` = 0 uses the default worker count.
UMatrix u_matrix(const DataMatrix& data, const KernelSpec& kernel, Region region,
                 unsigned workers = 1);

/// Jackknife variance of every entry in `region`.
VarianceField jackknife_variance_field(const DataMatrix& data, const KernelSpec& kernel,
                                       Region region, unsigned workers = 1);

/// U-matrix and Jackknife variances from a single pass over the subsets.
UStatFields u_matrix_with_jackknife(const DataMatrix& data, const KernelSpec& kernel,
                                    Region region, unsigned workers = 1);

}  // namespace ucortest

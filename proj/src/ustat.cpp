#include "ucortest/ustat.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numeric>
#include <string>

#include "compensated_sum.hpp"
#include "ucortest/error.hpp"
#include "ucortest/parallel.hpp"

namespace ucortest {
namespace {

void check_pair(const DataMatrix& data, VariablePair pair) {
  if (pair.i >= data.d() || pair.j >= data.d()) {
    throw InvalidArgumentError("variable pair (" + std::to_string(pair.i) + ", " +
                               std::to_string(pair.j) + ") out of range for d = " +
                               std::to_string(data.d()));
  }
}

void check_kernel(const KernelSpec& kernel, std::size_t n) {
  if (kernel.order < 1 || !kernel.evaluate) {
    throw InvalidArgumentError("kernel '" + kernel.name + "' is not usable");
  }
  if (kernel.order > kMaxKernelOrder) {
    throw ComplexityLimitError("kernel order " + std::to_string(kernel.order) +
                               " exceeds the exact-enumeration limit of " +
                               std::to_string(kMaxKernelOrder));
  }
  if (n < static_cast<std::size_t>(kernel.order)) {
    throw InsufficientSamplesError("kernel of order " + std::to_string(kernel.order) +
                                   " needs at least that many samples, got n = " +
                                   std::to_string(n));
  }
  if (binomial(n, static_cast<std::uint64_t>(kernel.order)) > kMaxKernelEvaluations) {
    throw ComplexityLimitError("(" + std::to_string(n) + " choose " +
                               std::to_string(kernel.order) + ") kernel evaluations exceed " +
                               std::to_string(kMaxKernelEvaluations));
  }
}

// Visits every increasing m-tuple of {0..n-1} in lexicographic order.
template <typename Visit>
void for_each_subset(std::size_t n, int order, Visit&& visit) {
  const auto m = static_cast<std::size_t>(order);
  std::array<std::size_t, kMaxKernelOrder> rows{};
  std::iota(rows.begin(), rows.begin() + m, std::size_t{0});
  while (true) {
    visit(std::span<const std::size_t>(rows.data(), m));
    std::size_t k = m;
    while (k > 0 && rows[k - 1] == n - m + (k - 1)) --k;
    if (k == 0) return;
    ++rows[k - 1];
    for (std::size_t t = k; t < m; ++t) rows[t] = rows[t - 1] + 1;
  }
}

struct PairResult {
  double u = 0.0;
  double variance = 0.0;
};

PairResult evaluate_pair(const DataMatrix& data, const KernelSpec& kernel, VariablePair pair,
                         bool with_variance) {
  if (!with_variance) return {u_statistic(data, kernel, pair), 0.0};
  const auto q = jackknife_components(data, kernel, pair);
  detail::CompensatedSum total;
  for (double v : q) total.add(v);
  const double u = total.value() / static_cast<double>(q.size());
  return {u, jackknife_variance(q, u, data.n(), kernel.order)};
}

UStatFields evaluate_grid(const DataMatrix& data, const KernelSpec& kernel, Region region,
                          unsigned workers, bool with_variance) {
  const std::size_t d = data.d();
  std::vector<VariablePair> pairs;
  for (std::size_t i = 0; i < d; ++i) {
    // The upper-triangle region still evaluates the diagonal so the matrix is complete.
    for (std::size_t j = (region == Region::UpperTriangle ? i : 0); j < d; ++j) {
      pairs.push_back({i, j});
    }
  }

  std::vector<PairResult> results(pairs.size());
  parallel_for(pairs.size(), workers, [&](std::size_t k) {
    try {
      results[k] = evaluate_pair(data, kernel, pairs[k], with_variance);
    } catch (const Error& e) {
      throw PairError(std::string(e.what()) + " at pair (" + std::to_string(pairs[k].i + 1) +
                          ", " + std::to_string(pairs[k].j + 1) + ")",
                      pairs[k].i, pairs[k].j);
    }
  });

  const auto dim = static_cast<Eigen::Index>(d);
  UStatFields out;
  out.u.region = region;
  out.u.entries = Eigen::MatrixXd::Zero(dim, dim);
  out.variance.region = region;
  out.variance.values = Eigen::MatrixXd::Zero(dim, dim);
  out.variance.floored = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(dim, dim, false);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(pairs[k].i);
    const auto j = static_cast<Eigen::Index>(pairs[k].j);
    out.u.entries(i, j) = results[k].u;
    out.variance.values(i, j) = results[k].variance;
    if (region == Region::UpperTriangle) {
      out.u.entries(j, i) = results[k].u;
      out.variance.values(j, i) = results[k].variance;
    }
  }
  return out;
}

}  // namespace

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) noexcept {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 result = 1;
  for (std::uint64_t t = 1; t <= k; ++t) {
    result = result * (n - k + t) / t;
    if (result > std::numeric_limits<std::uint64_t>::max()) {
      return std::numeric_limits<std::uint64_t>::max();
    }
  }
  return static_cast<std::uint64_t>(result);
}

KernelSpec kendall_kernel() {
  KernelSpec k;
  k.order = 2;
  k.bound = 1.0;
  k.symmetric = true;
  k.name = "kendall";
  k.evaluate = [](const DataMatrix& data, std::span<const std::size_t> rows, std::size_t i,
                  std::size_t j) {
    return sign_of(data(rows[0], i) - data(rows[1], i)) *
           sign_of(data(rows[0], j) - data(rows[1], j));
  };
  return k;
}

KernelSpec spearman_asymmetric_kernel() {
  KernelSpec k;
  k.order = 3;
  k.bound = 3.0;
  k.symmetric = false;
  k.name = "spearman-asymmetric";
  k.evaluate = [](const DataMatrix& data, std::span<const std::size_t> rows, std::size_t i,
                  std::size_t j) {
    return 3.0 * sign_of(data(rows[0], i) - data(rows[1], i)) *
           sign_of(data(rows[0], j) - data(rows[2], j));
  };
  return k;
}

KernelSpec symmetrize_kernel(const KernelSpec& kernel) {
  if (kernel.order < 2) {
    throw InvalidArgumentError("symmetrization needs kernel order >= 2");
  }
  if (kernel.order > kMaxKernelOrder) {
    throw ComplexityLimitError("kernel order " + std::to_string(kernel.order) +
                               " exceeds the exact-enumeration limit");
  }
  KernelSpec out = kernel;
  out.symmetric = true;
  out.name = kernel.name + "-symmetrized";
  out.evaluate = [inner = kernel.evaluate, m = static_cast<std::size_t>(kernel.order)](
                     const DataMatrix& data, std::span<const std::size_t> rows, std::size_t i,
                     std::size_t j) {
    std::array<std::size_t, kMaxKernelOrder> perm{};
    std::array<std::size_t, kMaxKernelOrder> permuted{};
    std::iota(perm.begin(), perm.begin() + m, std::size_t{0});
    double sum = 0.0;
    std::size_t count = 0;
    do {
      for (std::size_t t = 0; t < m; ++t) permuted[t] = rows[perm[t]];
      sum += inner(data, std::span<const std::size_t>(permuted.data(), m), i, j);
      ++count;
    } while (std::next_permutation(perm.begin(), perm.begin() + m));
    return sum / static_cast<double>(count);
  };
  return out;
}

double u_statistic(const DataMatrix& data, const KernelSpec& kernel, VariablePair pair) {
  check_pair(data, pair);
  check_kernel(kernel, data.n());
  detail::CompensatedSum sum;
  for_each_subset(data.n(), kernel.order, [&](std::span<const std::size_t> rows) {
    sum.add(kernel.evaluate(data, rows, pair.i, pair.j));
  });
  return sum.value() / static_cast<double>(binomial(data.n(), kernel.order));
}

std::vector<double> jackknife_components(const DataMatrix& data, const KernelSpec& kernel,
                                         VariablePair pair) {
  check_pair(data, pair);
  check_kernel(kernel, data.n());
  const std::size_t n = data.n();
  if (n < static_cast<std::size_t>(kernel.order) + 1) {
    throw InsufficientSamplesError("Jackknife components need n >= m + 1, got n = " +
                                   std::to_string(n) + ", m = " + std::to_string(kernel.order));
  }
  std::vector<detail::CompensatedSum> sums(n);
  for_each_subset(n, kernel.order, [&](std::span<const std::size_t> rows) {
    const double value = kernel.evaluate(data, rows, pair.i, pair.j);
    for (std::size_t r : rows) sums[r].add(value);
  });
  const auto per_component =
      static_cast<double>(binomial(n - 1, static_cast<std::uint64_t>(kernel.order - 1)));
  std::vector<double> q(n);
  for (std::size_t a = 0; a < n; ++a) q[a] = sums[a].value() / per_component;
  return q;
}

double jackknife_variance(std::span<const double> components, double u_hat, std::size_t n,
                          int order) {
  if (order < 1 || n <= static_cast<std::size_t>(order)) {
    throw DegenerateError("Jackknife variance needs n > m, got n = " + std::to_string(n) +
                          ", m = " + std::to_string(order));
  }
  if (components.size() != n) {
    throw DimensionError("expected " + std::to_string(n) + " Jackknife components, got " +
                         std::to_string(components.size()));
  }
  detail::CompensatedSum squares;
  for (double q : components) squares.add((q - u_hat) * (q - u_hat));
  const auto nn = static_cast<double>(n);
  const auto m = static_cast<double>(order);
  return m * m * (nn - 1.0) / (nn * (nn - m) * (nn - m)) * squares.value();
}

UMatrix u_matrix(const DataMatrix& data, const KernelSpec& kernel, Region region,
                 unsigned workers) {
  return evaluate_grid(data, kernel, region, workers, false).u;
}

VarianceField jackknife_variance_field(const DataMatrix& data, const KernelSpec& kernel,
                                       Region region, unsigned workers) {
  return evaluate_grid(data, kernel, region, workers, true).variance;
}

UStatFields u_matrix_with_jackknife(const DataMatrix& data, const KernelSpec& kernel,
                                    Region region, unsigned workers) {
  return evaluate_grid(data, kernel, region, workers, true);
}

}  // namespace ucortest

#include "ucortest/evt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <tuple>

#include "ucortest/error.hpp"
#include "ucortest/kendall.hpp"

namespace ucortest {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidArgumentError("alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
}

void check_q(std::size_t q) {
  if (q < 3) {
    throw InvalidArgumentError("dimension q must be at least 3 so that log log q > 0, got " +
                               std::to_string(q));
  }
}

double log_log(std::size_t q) { return std::log(std::log(static_cast<double>(q))); }

std::string format_pair(VariablePair p) {
  return "(" + std::to_string(p.i + 1) + ", " + std::to_string(p.j + 1) + ")";
}

std::string degenerate_warning(const std::vector<VariablePair>& pairs) {
  std::string msg = std::to_string(pairs.size()) +
                    " entries have a zero variance denominator and were excluded:";
  const std::size_t shown = std::min<std::size_t>(pairs.size(), 10);
  for (std::size_t k = 0; k < shown; ++k) msg += " " + format_pair(pairs[k]);
  if (shown < pairs.size()) msg += " ...";
  return msg;
}

// Max over the entries selected by `include`; ties go to the lexicographically smallest pair.
template <typename Include>
std::pair<double, VariablePair> grid_max(const EntryGrid& grid, Include&& include) {
  double best = -std::numeric_limits<double>::infinity();
  VariablePair where{};
  bool found = false;
  const auto q = static_cast<std::size_t>(grid.values.rows());
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      if (!include(i, j)) continue;
      const double v = grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (std::isnan(v)) continue;
      if (!found || v > best) {
        best = v;
        where = {i, j};
        found = true;
      }
    }
  }
  if (!found) throw DegenerateError("no testable entry in the requested region");
  return {best, where};
}

void finish_full(TestOutcome& out) {
  const auto [m, where] = grid_max(out.entries, [&](std::size_t i, std::size_t j) {
    return out.entries.in_region(i, j);
  });
  out.statistic = m;
  out.argmax = where;
  out.x_centered = centered_full(m, out.q);
  out.critical_value = critical_value_full(out.alpha, out.q);
  out.p_value = p_value_full(m, out.q);
  out.reject = m >= out.critical_value;
}

bool row_entry(const EntryGrid& grid, std::size_t row, std::size_t i, std::size_t j) {
  if (grid.region == Region::FullGrid) return i == row;
  return i < j && (i == row || j == row);
}

void finish_row(TestOutcome& out, std::size_t row) {
  const auto [m, where] = grid_max(out.entries, [&](std::size_t i, std::size_t j) {
    return row_entry(out.entries, row, i, j);
  });
  out.statistic = m;
  out.argmax = where.i == row ? where : VariablePair{where.j, where.i};
  out.x_centered = centered_row(m, out.q);
  out.critical_value = critical_value_row(out.alpha, out.q);
  out.p_value = p_value_row(m, out.q);
  out.reject = m >= out.critical_value;
}

void check_same_dimension(const DataMatrix& x, const DataMatrix& y) {
  if (x.d() != y.d()) {
    throw DimensionError("samples have different dimensions: " + std::to_string(x.d()) +
                         " vs " + std::to_string(y.d()));
  }
  check_q(x.d());
}

void add_common_warnings(TestOutcome& out, const kendall::KendallFields& fx,
                         const kendall::KendallFields& fy,
                         const std::optional<VarianceField> kendall::KendallFields::*field) {
  if (fx.tied_pairs > 0 || fy.tied_pairs > 0) {
    std::string msg = "ties present (" + std::to_string(fx.tied_pairs) + " tied pairs in X, " +
                      std::to_string(fy.tied_pairs) +
                      " in Y); tied pairs contribute 0 to tau";
    if (out.method == Method::Pseudo) msg += " and the pseudo variance assumes continuous data";
    out.warnings.push_back(msg);
  }
  if (out.method == Method::Plugin) {
    const auto floored = (fx.*field)->floored.count() + (fy.*field)->floored.count();
    if (floored > 0) {
      out.warnings.push_back(std::to_string(floored / 2) +
                             " plug-in variances were negative or zero and floored at 1e-12");
    }
  }
  if (!out.entries.degenerate.empty()) out.warnings.push_back(degenerate_warning(out.entries.degenerate));
}

std::vector<TestOutcome> kendall_outcomes(const DataMatrix& x, const DataMatrix& y,
                                          const std::vector<Method>& methods, double alpha,
                                          bool pseudo_asymptotic, unsigned workers,
                                          std::optional<std::size_t> row) {
  check_alpha(alpha);
  check_same_dimension(x, y);
  if (row && *row >= x.d()) {
    throw InvalidArgumentError("row index " + std::to_string(*row + 1) + " out of range 1.." +
                               std::to_string(x.d()));
  }
  kendall::VarianceSelection select;
  select.pseudo_asymptotic = pseudo_asymptotic;
  for (Method m : methods) {
    switch (m) {
      case Method::Jackknife: select.jackknife = true; break;
      case Method::Plugin: select.plugin = true; break;
      case Method::Pseudo: select.pseudo = true; break;
      case Method::GenericJackknife:
        throw InvalidArgumentError("generic-jack is not a Kendall method");
    }
  }
  const auto fx = kendall::tau_matrix_with_variances(x, select, workers);
  const auto fy = kendall::tau_matrix_with_variances(y, select, workers);

  std::vector<TestOutcome> outcomes;
  for (Method m : methods) {
    const std::optional<VarianceField> kendall::KendallFields::*field =
        m == Method::Jackknife ? &kendall::KendallFields::jackknife
        : m == Method::Plugin  ? &kendall::KendallFields::plugin
                               : &kendall::KendallFields::pseudo;
    TestOutcome out;
    out.method = m;
    out.alpha = alpha;
    out.row = row;
    out.q = x.d();
    out.entries = entry_statistics(fx.tau, fy.tau, *(fx.*field), *(fy.*field));
    out.u1 = fx.tau;
    out.u2 = fy.tau;
    if (row) {
      finish_row(out, *row);
    } else {
      finish_full(out);
    }
    add_common_warnings(out, fx, fy, field);
    outcomes.push_back(std::move(out));
  }
  return outcomes;
}

TestOutcome generic_outcome(const DataMatrix& x, const DataMatrix& y, const TestConfig& config,
                            std::optional<std::size_t> row) {
  check_same_dimension(x, y);
  if (row && *row >= x.d()) {
    throw InvalidArgumentError("row index " + std::to_string(*row + 1) + " out of range 1.." +
                               std::to_string(x.d()));
  }
  const KernelSpec kernel = config.generic_kernel == GenericKernel::Kendall
                                ? kendall_kernel()
                                : symmetrize_kernel(spearman_asymmetric_kernel());
  const auto fx = u_matrix_with_jackknife(x, kernel, Region::FullGrid, config.workers);
  const auto fy = u_matrix_with_jackknife(y, kernel, Region::FullGrid, config.workers);
  TestOutcome out;
  out.method = Method::GenericJackknife;
  out.alpha = config.alpha;
  out.row = row;
  out.q = x.d();
  out.entries = entry_statistics(fx.u, fy.u, fx.variance, fy.variance);
  out.u1 = fx.u;
  out.u2 = fy.u;
  if (row) {
    finish_row(out, *row);
  } else {
    finish_full(out);
  }
  if (!out.entries.degenerate.empty()) out.warnings.push_back(degenerate_warning(out.entries.degenerate));
  return out;
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Jackknife: return "jack";
    case Method::Plugin: return "plug";
    case Method::Pseudo: return "ps";
    case Method::GenericJackknife: return "generic-jack";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  if (text == "jack") return Method::Jackknife;
  if (text == "plug") return Method::Plugin;
  if (text == "ps") return Method::Pseudo;
  if (text == "generic-jack") return Method::GenericJackknife;
  throw InvalidArgumentError("unknown method '" + std::string(text) +
                             "' (expected jack, plug, ps or generic-jack)");
}

std::string_view to_string(GenericKernel kernel) {
  return kernel == GenericKernel::Kendall ? "kendall" : "spearman";
}

GenericKernel parse_generic_kernel(std::string_view text) {
  if (text == "kendall") return GenericKernel::Kendall;
  if (text == "spearman") return GenericKernel::Spearman;
  throw InvalidArgumentError("unknown kernel '" + std::string(text) +
                             "' (expected kendall or spearman)");
}

void TestConfig::validate() const { check_alpha(alpha); }

EntryGrid entry_statistics(const UMatrix& u1, const UMatrix& u2, const VarianceField& v1,
                           const VarianceField& v2) {
  const Eigen::Index q = u1.entries.rows();
  auto same_shape = [q](const Eigen::MatrixXd& m) { return m.rows() == q && m.cols() == q; };
  if (u1.entries.cols() != q || !same_shape(u2.entries) || !same_shape(v1.values) ||
      !same_shape(v2.values)) {
    throw DimensionError("U-matrices and variance fields must share one square shape");
  }
  if (u1.region != u2.region || v1.region != u1.region || v2.region != u1.region) {
    throw DimensionError("U-matrices and variance fields must share one region");
  }

  EntryGrid grid;
  grid.region = u1.region;
  grid.values = Eigen::MatrixXd::Constant(q, q, kNaN);
  std::size_t usable = 0;
  for (Eigen::Index i = 0; i < q; ++i) {
    for (Eigen::Index j = 0; j < q; ++j) {
      if (!grid.in_region(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) continue;
      const double denom = v1.values(i, j) + v2.values(i, j);
      if (!(denom > 0.0)) {
        grid.degenerate.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j)});
        continue;
      }
      const double diff = u1.entries(i, j) - u2.entries(i, j);
      grid.values(i, j) = diff * diff / denom;
      ++usable;
    }
  }
  if (usable == 0) throw DegenerateError("every entry has a zero variance denominator");
  return grid;
}

double gumbel_offset_full(double alpha) {
  check_alpha(alpha);
  return -std::log(8.0 * std::numbers::pi) - 2.0 * std::log(-std::log1p(-alpha));
}

double gumbel_offset_row(double alpha) {
  check_alpha(alpha);
  return -std::log(std::numbers::pi) - 2.0 * std::log(-std::log1p(-alpha));
}

double critical_value_full(double alpha, std::size_t q) {
  check_q(q);
  return gumbel_offset_full(alpha) + 4.0 * std::log(static_cast<double>(q)) - log_log(q);
}

double critical_value_row(double alpha, std::size_t q) {
  check_q(q);
  return gumbel_offset_row(alpha) + 2.0 * std::log(static_cast<double>(q)) - log_log(q);
}

double centered_full(double statistic, std::size_t q) {
  check_q(q);
  return statistic - 4.0 * std::log(static_cast<double>(q)) + log_log(q);
}

double centered_row(double statistic, std::size_t q) {
  check_q(q);
  return statistic - 2.0 * std::log(static_cast<double>(q)) + log_log(q);
}

double limiting_cdf_full(double x) {
  return std::exp(-std::exp(-x / 2.0) / std::sqrt(8.0 * std::numbers::pi));
}

double limiting_cdf_row(double x) {
  return std::exp(-std::exp(-x / 2.0) / std::sqrt(std::numbers::pi));
}

double p_value_full(double statistic, std::size_t q) {
  const double x = centered_full(statistic, q);
  return -std::expm1(-std::exp(-x / 2.0) / std::sqrt(8.0 * std::numbers::pi));
}

double p_value_row(double statistic, std::size_t q) {
  const double x = centered_row(statistic, q);
  return -std::expm1(-std::exp(-x / 2.0) / std::sqrt(std::numbers::pi));
}

std::vector<TestOutcome> run_kendall_tests(const DataMatrix& x, const DataMatrix& y,
                                           const std::vector<Method>& methods, double alpha,
                                           bool pseudo_asymptotic, unsigned workers) {
  return kendall_outcomes(x, y, methods, alpha, pseudo_asymptotic, workers, std::nullopt);
}

TestOutcome run_full_test(const DataMatrix& x, const DataMatrix& y, const TestConfig& config) {
  config.validate();
  if (config.row) return run_row_test(x, y, *config.row, config);
  if (config.method == Method::GenericJackknife) {
    return generic_outcome(x, y, config, std::nullopt);
  }
  return kendall_outcomes(x, y, {config.method}, config.alpha, config.pseudo_asymptotic,
                          config.workers, std::nullopt)
      .front();
}

TestOutcome run_row_test(const DataMatrix& x, const DataMatrix& y, std::size_t row,
                         const TestConfig& config) {
  config.validate();
  if (config.method == Method::GenericJackknife) return generic_outcome(x, y, config, row);
  return kendall_outcomes(x, y, {config.method}, config.alpha, config.pseudo_asymptotic,
                          config.workers, row)
      .front();
}

std::vector<DifferentialEntry> differential_entries(const TestOutcome& outcome,
                                                    double threshold) {
  std::vector<DifferentialEntry> out;
  const auto& grid = outcome.entries;
  const auto q = static_cast<std::size_t>(grid.values.rows());
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      const bool selected = outcome.row ? row_entry(grid, *outcome.row, i, j)
                                        : grid.in_region(i, j);
      if (!selected) continue;
      const double m = grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (std::isnan(m) || m < threshold) continue;
      VariablePair p{i, j};
      if (outcome.row && p.i != *outcome.row) p = {j, i};
      out.push_back({p.i, p.j, m, std::erfc(std::sqrt(m / 2.0))});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.statistic != b.statistic) return a.statistic > b.statistic;
    return std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });
  return out;
}

}  // namespace ucortest

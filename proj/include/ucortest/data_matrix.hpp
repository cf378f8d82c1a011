#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

namespace ucortest {

/// Index pair (i, j) into a variable grid, 0-based.
struct VariablePair {
  std::size_t i = 0;
  std::size_t j = 0;

  friend bool operator==(const VariablePair&, const VariablePair&) = default;
  friend auto operator<=>(const VariablePair&, const VariablePair&) = default;
};

/// n samples (rows) by d variables (columns) of finite observations.
///
/// Storage is column-major so each variable is a contiguous span.
class DataMatrix {
 public:
  /// Throws InvalidArgumentError on non-finite cells, n < 1 or d < 2.
  explicit DataMatrix(Eigen::MatrixXd values);

  std::size_t n() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(values_.cols()); }

  double operator()(std::size_t row, std::size_t col) const {
    return values_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
  }

  std::span<const double> column(std::size_t col) const {
    return {values_.data() + col * n(), n()};
  }

  const Eigen::MatrixXd& values() const noexcept { return values_; }

 private:
  Eigen::MatrixXd values_;
};

}  // namespace ucortest

#include "ucortest/data_matrix.hpp"

#include <cmath>
#include <string>

#include "ucortest/error.hpp"

namespace ucortest {

DataMatrix::DataMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.rows() < 1) {
    throw InvalidArgumentError("data matrix needs at least one sample");
  }
  if (values_.cols() < 2) {
    throw InvalidArgumentError("data matrix needs at least two variables, got " +
                               std::to_string(values_.cols()));
  }
  for (Eigen::Index c = 0; c < values_.cols(); ++c) {
    for (Eigen::Index r = 0; r < values_.rows(); ++r) {
      if (!std::isfinite(values_(r, c))) {
        throw InvalidArgumentError("non-finite value at row " + std::to_string(r + 1) +
                                   ", column " + std::to_string(c + 1));
      }
    }
  }
}

}  // namespace ucortest

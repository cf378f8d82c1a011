#pragma once

// Seeded generators for the Normal / multivariate-t / Cauchy-margin models
// and a Monte-Carlo size and power harness.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ucortest/data_matrix.hpp"
#include "ucortest/evt.hpp"

namespace ucortest::sim {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t value) noexcept;

/// Generator for replication `index`; depends only on (master_seed, index).
Rng replication_rng(std::uint64_t master_seed, std::uint64_t index);

enum class Model {
  Normal = 1,        ///< N(0, Sigma)
  StudentT = 2,      ///< Z / sqrt(W / 3), W ~ chi^2(3)
  CauchyMargin = 3,  ///< N(0, Sigma) mapped coordinate-wise to Cauchy(0, 1)
};

enum class Structure {
  Block,          ///< 0.6 inside consecutive 5 x 5 blocks
  Tridiagonal,    ///< 0.5 on the first off-diagonal
  Multidiagonal,  ///< 0.8^|i - j|
};

std::string_view to_string(Model model);
std::string_view to_string(Structure structure);
/// Accepts 1|2|3 or normal|t|cauchy.
Model parse_model(std::string_view text);
/// Accepts block|tri|multi (and the long names).
Structure parse_structure(std::string_view text);

/// Comma-separated jack|plug|ps, or "all" for ps,jack,plug.
std::vector<Method> parse_method_list(std::string_view text);

struct StructureSpec {
  Structure kind = Structure::Block;
  std::size_t d = 50;

  /// Throws InvalidArgumentError: d >= 5 for block, d >= 2 otherwise.
  void validate() const;
};

/// Unit-diagonal correlation matrix of the given structure.
Eigen::MatrixXd build_R(const StructureSpec& spec);

/// D R D with D diagonal, entries iid Uniform(0.5, 1.5).
Eigen::MatrixXd apply_D(const Eigen::MatrixXd& R, Rng& rng);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Eigen::MatrixXd& sigma);

struct CovariancePair {
  Eigen::MatrixXd sigma1;  ///< Sigma + shift I
  Eigen::MatrixXd sigma2;  ///< Sigma + Delta + shift I
  Eigen::MatrixXd delta;
  double shift = 0.0;      ///< |min(lambda_min(Sigma + Delta), lambda_min(Sigma))| + 0.05
  std::vector<VariablePair> perturbed;  ///< upper-triangle positions of Delta
};

/// Sparse symmetric perturbation: 4 distinct upper-triangle positions with
/// magnitudes iid Uniform(0, zeta * max diag(Sigma)), mirrored. zeta = 0
/// yields Delta = 0. Throws InvalidArgumentError for zeta < 0 or fewer than 4
/// upper-triangle positions.
CovariancePair perturb(const Eigen::MatrixXd& sigma, double zeta, Rng& rng);

/// n draws from `model` with scale matrix sigma. Throws DegenerateError when
/// sigma is not positive definite.
DataMatrix sample(Model model, const Eigen::MatrixXd& sigma, std::size_t n, Rng& rng);

/// n rows from N(0, sigma). sample() starts from these draws for every model.
Eigen::MatrixXd gaussian_rows(const Eigen::MatrixXd& sigma, std::size_t n, Rng& rng);

/// Cauchy(0, 1) quantile of Phi(z), computed without cancellation in the tails.
double cauchy_from_normal(double z);

struct SimSpec {
  Model model = Model::Normal;
  StructureSpec structure;
  std::size_t n1 = 500;
  std::size_t n2 = 500;
  double zeta = 0.0;
  std::vector<Method> methods{Method::Pseudo};
  double alpha = 0.05;
  std::size_t reps = 100;
  std::uint64_t master_seed = 1;
  bool pseudo_asymptotic = false;
  /// Diagnostic: use the X sample as Y in every replication.
  bool copy_x_as_y = false;

  /// Throws InvalidArgumentError on any out-of-domain field.
  void validate() const;
};

/// key = value text, one field per line; '#' starts a comment.
std::string to_config_text(const SimSpec& spec);
SimSpec parse_config_text(std::string_view text);

struct ReplicationRecord {
  std::size_t index = 0;
  std::vector<bool> reject;         ///< one per spec.methods entry
  std::vector<double> statistic;
  std::vector<double> p_value;
  std::optional<std::string> error;  ///< set when the replication failed
};

struct MethodRate {
  Method method = Method::Pseudo;
  std::size_t rejections = 0;
  std::size_t valid_reps = 0;
  double rate = 0.0;
  double standard_error = 0.0;  ///< sqrt(rate (1 - rate) / valid_reps)
};

struct SimulationResult {
  std::vector<MethodRate> rates;
  std::vector<ReplicationRecord> log;
  std::vector<std::string> warnings;
};

/// Draws the two samples of one replication from its own generator.
std::pair<DataMatrix, DataMatrix> replication_data(const SimSpec& spec, std::size_t index);

/// Runs spec.reps replications over `workers` threads (0 = default). Each
/// replication redraws D, Delta and both samples from replication_rng(seed,
/// index), so results do not depend on the worker count. Failed replications
/// are recorded and excluded with a warning.
SimulationResult empirical_rejection_rate(const SimSpec& spec, unsigned workers = 1);

}  // namespace ucortest::sim

#include "ucortest/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "ucortest/error.hpp"
#include "ucortest/parallel.hpp"

namespace ucortest::sim {
namespace {

constexpr double kBlockCorrelation = 0.6;
constexpr double kTridiagonalCorrelation = 0.5;
constexpr double kMultidiagonalBase = 0.8;
constexpr double kEigenShiftMargin = 0.05;
constexpr double kStudentDegrees = 3.0;
constexpr std::size_t kBlockSize = 5;
constexpr std::size_t kPerturbedEntries = 4;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view text, std::size_t line, std::string_view key) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError("invalid value '" + std::string(text) + "' for " + std::string(key), line);
  }
  return value;
}

bool parse_bool(std::string_view text, std::size_t line, std::string_view key) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ParseError("invalid boolean '" + std::string(text) + "' for " + std::string(key), line);
}

}  // namespace

std::vector<Method> parse_method_list(std::string_view text) {
  if (text == "all") return {Method::Pseudo, Method::Jackknife, Method::Plugin};
  std::vector<Method> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto token = trim(text.substr(start, comma == std::string_view::npos ? text.npos
                                                                               : comma - start));
    const Method m = parse_method(token);
    if (m == Method::GenericJackknife) {
      throw InvalidArgumentError("simulation supports the Kendall methods jack, plug and ps");
    }
    out.push_back(m);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::uint64_t mix64(std::uint64_t value) noexcept {
  value += 0x9e3779b97f4a7c15ULL;
  value = (value ^ (value >> 30)) * 0xbf58476d1ce4e5b9ULL;
  value = (value ^ (value >> 27)) * 0x94d049bb133111ebULL;
  return value ^ (value >> 31);
}

Rng replication_rng(std::uint64_t master_seed, std::uint64_t index) {
  const std::uint64_t stream = mix64(mix64(master_seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

std::string_view to_string(Model model) {
  switch (model) {
    case Model::Normal: return "normal";
    case Model::StudentT: return "t";
    case Model::CauchyMargin: return "cauchy";
  }
  return "?";
}

std::string_view to_string(Structure structure) {
  switch (structure) {
    case Structure::Block: return "block";
    case Structure::Tridiagonal: return "tri";
    case Structure::Multidiagonal: return "multi";
  }
  return "?";
}

Model parse_model(std::string_view text) {
  if (text == "1" || text == "normal") return Model::Normal;
  if (text == "2" || text == "t") return Model::StudentT;
  if (text == "3" || text == "cauchy") return Model::CauchyMargin;
  throw InvalidArgumentError("unknown model '" + std::string(text) + "' (expected 1, 2 or 3)");
}

Structure parse_structure(std::string_view text) {
  if (text == "block") return Structure::Block;
  if (text == "tri" || text == "tridiagonal") return Structure::Tridiagonal;
  if (text == "multi" || text == "multidiagonal") return Structure::Multidiagonal;
  throw InvalidArgumentError("unknown structure '" + std::string(text) +
                             "' (expected block, tri or multi)");
}

void StructureSpec::validate() const {
  const std::size_t min_d = kind == Structure::Block ? kBlockSize : 2;
  if (d < min_d) {
    throw InvalidArgumentError("structure " + std::string(to_string(kind)) + " needs d >= " +
                               std::to_string(min_d) + ", got " + std::to_string(d));
  }
}

Eigen::MatrixXd build_R(const StructureSpec& spec) {
  spec.validate();
  const auto d = static_cast<Eigen::Index>(spec.d);
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(d, d);
  switch (spec.kind) {
    case Structure::Block: {
      // Trailing d mod 5 variables stay uncorrelated.
      const auto blocks = static_cast<Eigen::Index>(spec.d / kBlockSize);
      const auto size = static_cast<Eigen::Index>(kBlockSize);
      for (Eigen::Index k = 0; k < blocks; ++k) {
        for (Eigen::Index i = k * size; i < (k + 1) * size; ++i) {
          for (Eigen::Index j = k * size; j < (k + 1) * size; ++j) {
            if (i != j) r(i, j) = kBlockCorrelation;
          }
        }
      }
      break;
    }
    case Structure::Tridiagonal:
      for (Eigen::Index i = 0; i + 1 < d; ++i) {
        r(i, i + 1) = r(i + 1, i) = kTridiagonalCorrelation;
      }
      break;
    case Structure::Multidiagonal:
      for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
          r(i, j) = std::pow(kMultidiagonalBase, static_cast<double>(std::abs(i - j)));
        }
      }
      break;
  }
  return r;
}

Eigen::MatrixXd apply_D(const Eigen::MatrixXd& R, Rng& rng) {
  std::uniform_real_distribution<double> scale(0.5, 1.5);
  Eigen::VectorXd diag(R.rows());
  for (Eigen::Index k = 0; k < diag.size(); ++k) diag(k) = scale(rng);
  // Element-wise so that the result is exactly symmetric.
  Eigen::MatrixXd sigma(R.rows(), R.cols());
  for (Eigen::Index j = 0; j < R.cols(); ++j) {
    for (Eigen::Index i = 0; i < R.rows(); ++i) sigma(i, j) = (diag(i) * diag(j)) * R(i, j);
  }
  return sigma;
}

double min_eigenvalue(const Eigen::MatrixXd& sigma) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sigma, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw DegenerateError("eigenvalue computation failed");
  return solver.eigenvalues().minCoeff();
}

CovariancePair perturb(const Eigen::MatrixXd& sigma, double zeta, Rng& rng) {
  if (!(zeta >= 0.0) || !std::isfinite(zeta)) {
    throw InvalidArgumentError("zeta must be a finite value >= 0");
  }
  const auto d = static_cast<std::size_t>(sigma.rows());
  const std::size_t upper = d * (d - 1) / 2;
  if (d < 2 || upper < kPerturbedEntries) {
    throw InvalidArgumentError("perturbation needs d(d-1)/2 >= 4, got d = " + std::to_string(d));
  }

  CovariancePair out;
  out.delta = Eigen::MatrixXd::Zero(sigma.rows(), sigma.cols());
  if (zeta > 0.0) {
    std::uniform_int_distribution<std::size_t> position(0, upper - 1);
    std::uniform_real_distribution<double> magnitude(0.0, zeta * sigma.diagonal().maxCoeff());
    std::set<std::size_t> chosen;
    std::vector<std::size_t> picks;
    while (picks.size() < kPerturbedEntries) {
      const std::size_t k = position(rng);
      if (chosen.insert(k).second) picks.push_back(k);
    }
    for (std::size_t k : picks) {
      // Linear index k enumerates (i, j), i < j, row by row.
      std::size_t i = 0;
      std::size_t rest = k;
      while (rest >= d - 1 - i) {
        rest -= d - 1 - i;
        ++i;
      }
      const std::size_t j = i + 1 + rest;
      const double value = magnitude(rng);
      const auto a = static_cast<Eigen::Index>(i);
      const auto b = static_cast<Eigen::Index>(j);
      out.delta(a, b) = out.delta(b, a) = value;
      out.perturbed.push_back({i, j});
    }
  }
  const double lambda_sigma = min_eigenvalue(sigma);
  const double lambda_perturbed =
      zeta > 0.0 ? min_eigenvalue(sigma + out.delta) : lambda_sigma;
  out.shift = std::abs(std::min(lambda_perturbed, lambda_sigma)) + kEigenShiftMargin;
  const Eigen::MatrixXd shift =
      out.shift * Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols());
  out.sigma1 = sigma + shift;
  out.sigma2 = sigma + out.delta + shift;
  return out;
}

Eigen::MatrixXd gaussian_rows(const Eigen::MatrixXd& sigma, std::size_t n, Rng& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw DegenerateError("covariance matrix is not positive definite");
  }
  const auto rows = static_cast<Eigen::Index>(n);
  const Eigen::Index d = sigma.rows();
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(rows, d);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) z(r, c) = normal(rng);
  }
  return z * llt.matrixU();
}

double cauchy_from_normal(double z) {
  if (z > 0.0) return -cauchy_from_normal(-z);
  // Near the centre tan(pi (u - 1/2)) = tan(pi/2 erf(z / sqrt 2)) with no cancellation.
  if (z > -1.0) return std::tan(0.5 * std::numbers::pi * std::erf(z / std::numbers::sqrt2));
  // Phi(z) via erfc keeps full relative precision in the lower tail.
  const double u = std::max(0.5 * std::erfc(-z / std::numbers::sqrt2), 1e-300);
  return -1.0 / std::tan(std::numbers::pi * u);
}

DataMatrix sample(Model model, const Eigen::MatrixXd& sigma, std::size_t n, Rng& rng) {
  if (n < 1) throw InvalidArgumentError("sample size must be at least 1");
  Eigen::MatrixXd x = gaussian_rows(sigma, n, rng);
  switch (model) {
    case Model::Normal:
      break;
    case Model::StudentT: {
      std::chi_squared_distribution<double> chi2(kStudentDegrees);
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        x.row(r) /= std::sqrt(chi2(rng) / kStudentDegrees);
      }
      break;
    }
    case Model::CauchyMargin:
      for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double sd = std::sqrt(sigma(c, c));
        for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) = cauchy_from_normal(x(r, c) / sd);
      }
      break;
  }
  return DataMatrix(std::move(x));
}

void SimSpec::validate() const {
  structure.validate();
  if (structure.d < 3) throw InvalidArgumentError("d must be at least 3");
  if (n1 < 3 || n2 < 3) throw InvalidArgumentError("n1 and n2 must be at least 3");
  if (!(zeta >= 0.0) || !std::isfinite(zeta)) throw InvalidArgumentError("zeta must be >= 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgumentError("alpha must lie in (0, 1)");
  if (reps < 1) throw InvalidArgumentError("reps must be at least 1");
  if (methods.empty()) throw InvalidArgumentError("at least one method is required");
  for (Method m : methods) {
    if (m == Method::GenericJackknife) {
      throw InvalidArgumentError("simulation supports the Kendall methods jack, plug and ps");
    }
  }
  if (zeta > 0.0 && structure.d * (structure.d - 1) / 2 < kPerturbedEntries) {
    throw InvalidArgumentError("d too small for the sparse perturbation");
  }
}

std::string to_config_text(const SimSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  os << "model = " << static_cast<int>(spec.model) << '\n'
     << "structure = " << to_string(spec.structure.kind) << '\n'
     << "d = " << spec.structure.d << '\n'
     << "n1 = " << spec.n1 << '\n'
     << "n2 = " << spec.n2 << '\n'
     << "zeta = " << spec.zeta << '\n'
     << "methods = ";
  for (std::size_t k = 0; k < spec.methods.size(); ++k) {
    os << (k ? "," : "") << to_string(spec.methods[k]);
  }
  os << '\n'
     << "alpha = " << spec.alpha << '\n'
     << "reps = " << spec.reps << '\n'
     << "seed = " << spec.master_seed << '\n'
     << "pseudo_asymptotic = " << (spec.pseudo_asymptotic ? "true" : "false") << '\n'
     << "copy_x_as_y = " << (spec.copy_x_as_y ? "true" : "false") << '\n';
  return os.str();
}

SimSpec parse_config_text(std::string_view text) {
  SimSpec spec;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value", line_no);
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    try {
      if (key == "model") spec.model = parse_model(value);
      else if (key == "structure") spec.structure.kind = parse_structure(value);
      else if (key == "d") spec.structure.d = parse_number<std::size_t>(value, line_no, key);
      else if (key == "n1") spec.n1 = parse_number<std::size_t>(value, line_no, key);
      else if (key == "n2") spec.n2 = parse_number<std::size_t>(value, line_no, key);
      else if (key == "zeta") spec.zeta = parse_number<double>(value, line_no, key);
      else if (key == "methods" || key == "method") spec.methods = parse_method_list(value);
      else if (key == "alpha") spec.alpha = parse_number<double>(value, line_no, key);
      else if (key == "reps") spec.reps = parse_number<std::size_t>(value, line_no, key);
      else if (key == "seed") spec.master_seed = parse_number<std::uint64_t>(value, line_no, key);
      else if (key == "pseudo_asymptotic") spec.pseudo_asymptotic = parse_bool(value, line_no, key);
      else if (key == "copy_x_as_y") spec.copy_x_as_y = parse_bool(value, line_no, key);
      else throw ParseError("unknown key '" + std::string(key) + "'", line_no);
    } catch (const InvalidArgumentError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return spec;
}

std::pair<DataMatrix, DataMatrix> replication_data(const SimSpec& spec, std::size_t index) {
  Rng rng = replication_rng(spec.master_seed, index);
  const Eigen::MatrixXd sigma = apply_D(build_R(spec.structure), rng);
  const CovariancePair pair = perturb(sigma, spec.zeta, rng);
  DataMatrix x = sample(spec.model, pair.sigma1, spec.n1, rng);
  if (spec.copy_x_as_y) return {x, x};
  DataMatrix y = sample(spec.model, pair.sigma2, spec.n2, rng);
  return {std::move(x), std::move(y)};
}

SimulationResult empirical_rejection_rate(const SimSpec& spec, unsigned workers) {
  spec.validate();
  SimulationResult result;
  result.log.resize(spec.reps);
  parallel_for(spec.reps, workers, [&](std::size_t index) {
    ReplicationRecord& record = result.log[index];
    record.index = index;
    try {
      const auto [x, y] = replication_data(spec, index);
      const auto outcomes = run_kendall_tests(x, y, spec.methods, spec.alpha,
                                              spec.pseudo_asymptotic, /*workers=*/1);
      for (const auto& o : outcomes) {
        record.reject.push_back(o.reject);
        record.statistic.push_back(o.statistic);
        record.p_value.push_back(o.p_value);
      }
    } catch (const Error& e) {
      record.reject.clear();
      record.statistic.clear();
      record.p_value.clear();
      record.error = e.what();
    }
  });

  std::size_t failed = 0;
  for (const auto& r : result.log) failed += r.error.has_value();
  if (failed > 0) {
    result.warnings.push_back(std::to_string(failed) + " of " + std::to_string(spec.reps) +
                              " replications failed and were excluded");
  }
  for (std::size_t m = 0; m < spec.methods.size(); ++m) {
    MethodRate rate;
    rate.method = spec.methods[m];
    for (const auto& r : result.log) {
      if (r.error) continue;
      ++rate.valid_reps;
      rate.rejections += r.reject[m];
    }
    if (rate.valid_reps > 0) {
      const auto v = static_cast<double>(rate.valid_reps);
      rate.rate = static_cast<double>(rate.rejections) / v;
      rate.standard_error = std::sqrt(rate.rate * (1.0 - rate.rate) / v);
    }
    result.rates.push_back(rate);
  }
  return result;
}

}  // namespace ucortest::sim

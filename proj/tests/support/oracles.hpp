#pragma once

// Brute-force reference implementations used only by tests. They follow the
// textbook definitions directly and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ucortest::oracle {

inline int sgn(double v) { return (v > 0) - (v < 0); }

/// 2/(n(n-1)) sum_{k<l} sign(x_k - x_l) sign(y_k - y_l).
inline double tau_definition(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  std::int64_t s = 0;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = k + 1; l < n; ++l) s += sgn(x[k] - x[l]) * sgn(y[k] - y[l]);
  }
  return 2.0 * static_cast<double>(s) / (static_cast<double>(n) * static_cast<double>(n - 1));
}

struct NaiveProfile {
  std::vector<std::int64_t> concordant;
  std::vector<std::int64_t> discordant;
};

inline NaiveProfile profile_definition(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  NaiveProfile p{std::vector<std::int64_t>(n, 0), std::vector<std::int64_t>(n, 0)};
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t l = 0; l < n; ++l) {
      if (l == a) continue;
      const int s = sgn(x[a] - x[l]) * sgn(y[a] - y[l]);
      if (s > 0) ++p.concordant[a];
      if (s < 0) ++p.discordant[a];
    }
  }
  return p;
}

/// Counts ordered distinct triples (a, b, c) where b and c are both concordant with a,
/// and ordered distinct pairs (a, b) that are concordant.
struct TripleCounts {
  std::int64_t concordant_pairs = 0;
  std::int64_t concordant_triples = 0;
};

inline TripleCounts triple_enumeration(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  auto conc = [&](std::size_t a, std::size_t b) { return (x[b] - x[a]) * (y[b] - y[a]) > 0; };
  TripleCounts t;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (b == a) continue;
      if (conc(a, b)) ++t.concordant_pairs;
      for (std::size_t c = 0; c < n; ++c) {
        if (c == a || c == b) continue;
        if (conc(a, b) && conc(a, c)) ++t.concordant_triples;
      }
    }
  }
  return t;
}

/// Average of 3 sign(x_ai - x_bi) sign(x_aj - x_cj) over all ordered distinct triples.
inline double spearman_ordered_average(const Eigen::MatrixXd& data, std::size_t i,
                                       std::size_t j) {
  const auto n = static_cast<std::size_t>(data.rows());
  long double sum = 0;
  std::int64_t count = 0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t c = 0; c < n; ++c) {
        if (a == b || b == c || a == c) continue;
        const auto A = static_cast<Eigen::Index>(a);
        const auto B = static_cast<Eigen::Index>(b);
        const auto C = static_cast<Eigen::Index>(c);
        const auto I = static_cast<Eigen::Index>(i);
        const auto J = static_cast<Eigen::Index>(j);
        sum += 3 * sgn(data(A, I) - data(B, I)) * sgn(data(A, J) - data(C, J));
        ++count;
      }
    }
  }
  return static_cast<double>(sum / count);
}

/// Jackknife variance by the textbook leave-one-out recipe for Kendall's kernel.
inline double kendall_jackknife_definition(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  std::vector<double> q(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    long double s = 0;
    for (std::size_t l = 0; l < n; ++l) {
      if (l != a) s += sgn(x[a] - x[l]) * sgn(y[a] - y[l]);
    }
    q[a] = static_cast<double>(s / static_cast<long double>(n - 1));
  }
  long double mean = 0;
  for (double v : q) mean += v;
  mean /= static_cast<long double>(n);
  long double ss = 0;
  for (double v : q) ss += (v - mean) * (v - mean);
  const long double nn = static_cast<long double>(n);
  return static_cast<double>(4.0L * (nn - 1) / (nn * (nn - 2) * (nn - 2)) * ss);
}

/// Random matrix; with `ties` the values are drawn from a small integer grid.
inline Eigen::MatrixXd random_data(std::mt19937_64& rng, std::size_t n, std::size_t d,
                                   bool ties = false) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> grid(0, 4);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      m(r, c) = ties ? static_cast<double>(grid(rng)) : normal(rng);
    }
  }
  return m;
}

/// Kolmogorov distance between a sample and a continuous CDF.
template <typename Cdf>
double kolmogorov_distance(std::vector<double> sample, Cdf&& cdf) {
  std::sort(sample.begin(), sample.end());
  const auto n = static_cast<double>(sample.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < sample.size(); ++k) {
    const double f = cdf(sample[k]);
    worst = std::max({worst, std::abs(f - static_cast<double>(k) / n),
                      std::abs(static_cast<double>(k + 1) / n - f)});
  }
  return worst;
}

}  // namespace ucortest::oracle

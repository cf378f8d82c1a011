#include "ucortest/kendall.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "ucortest/error.hpp"
#include "ucortest/parallel.hpp"

namespace ucortest::kendall {
namespace {

using i128 = __int128;

void check_lengths(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DimensionError("length mismatch: " + std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()));
  }
  if (x.size() < 2) {
    throw InsufficientSamplesError("Kendall's tau needs n >= 2, got n = " +
                                   std::to_string(x.size()));
  }
}

void require_three(std::int64_t n, const char* what) {
  if (n <= 2) {
    throw DegenerateError(std::string(what) + " needs n >= 3, got n = " + std::to_string(n));
  }
}

std::int64_t tie_pairs_in_sorted(std::span<const double> sorted) {
  std::int64_t pairs = 0;
  std::size_t run = 1;
  for (std::size_t k = 1; k <= sorted.size(); ++k) {
    if (k < sorted.size() && sorted[k] == sorted[k - 1]) {
      ++run;
    } else {
      pairs += static_cast<std::int64_t>(run * (run - 1) / 2);
      run = 1;
    }
  }
  return pairs;
}

// Sorts `values` ascending and returns the number of strict inversions.
std::int64_t sort_counting_inversions(std::vector<double>& values, std::vector<double>& scratch) {
  const std::size_t n = values.size();
  scratch.resize(n);
  std::int64_t inversions = 0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n);
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t a = lo;
      std::size_t b = mid;
      std::size_t out = lo;
      while (a < mid && b < hi) {
        if (values[b] < values[a]) {
          inversions += static_cast<std::int64_t>(mid - a);
          scratch[out++] = values[b++];
        } else {
          scratch[out++] = values[a++];
        }
      }
      while (a < mid) scratch[out++] = values[a++];
      while (b < hi) scratch[out++] = values[b++];
    }
    values.swap(scratch);
  }
  return inversions;
}

// Sorting metadata of one column shared by every pair that uses it.
struct ColumnOrder {
  std::vector<std::uint32_t> order;      // sample indices by ascending value
  std::vector<std::uint32_t> group_end;  // per sorted position: one past its tie group
  std::vector<std::uint32_t> rank;       // dense 1-based rank per sample
  std::vector<std::uint32_t> less;       // samples strictly below, per sample
  std::vector<std::uint32_t> less_equal; // samples at or below (self included), per sample
  std::uint32_t distinct = 0;
  bool has_ties = false;
};

ColumnOrder make_order(std::span<const double> v) {
  const auto n = static_cast<std::uint32_t>(v.size());
  ColumnOrder c;
  c.order.resize(n);
  std::iota(c.order.begin(), c.order.end(), 0u);
  std::stable_sort(c.order.begin(), c.order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return v[a] < v[b]; });
  c.group_end.resize(n);
  c.rank.resize(n);
  c.less.resize(n);
  c.less_equal.resize(n);
  std::uint32_t pos = 0;
  while (pos < n) {
    std::uint32_t end = pos + 1;
    while (end < n && v[c.order[end]] == v[c.order[pos]]) ++end;
    if (end - pos > 1) c.has_ties = true;
    ++c.distinct;
    for (std::uint32_t t = pos; t < end; ++t) {
      const std::uint32_t a = c.order[t];
      c.group_end[t] = end;
      c.rank[a] = c.distinct;
      c.less[a] = pos;
      c.less_equal[a] = end;
    }
    pos = end;
  }
  return c;
}

class Fenwick {
 public:
  void reset(std::size_t size) { tree_.assign(size + 1, 0); }

  void add(std::uint32_t index) {
    for (std::size_t k = index; k < tree_.size(); k += k & (~k + 1)) ++tree_[k];
  }

  std::uint32_t prefix(std::uint32_t index) const {
    std::uint32_t sum = 0;
    for (std::size_t k = index; k > 0; k -= k & (~k + 1)) sum += tree_[k];
    return sum;
  }

 private:
  std::vector<std::uint32_t> tree_;
};

// Calls emit(a, c_a, d_a) for every sample a.
template <typename Emit>
void fenwick_counts(const ColumnOrder& x, const ColumnOrder& y, Fenwick& tree, Emit&& emit) {
  const auto n = static_cast<std::uint32_t>(x.order.size());
  tree.reset(y.distinct);
  std::uint32_t pos = 0;
  while (pos < n) {
    const std::uint32_t end = x.group_end[pos];
    // Before the group is inserted the tree holds exactly the samples with smaller x.
    thread_local std::vector<std::uint32_t> below_strict;
    thread_local std::vector<std::uint32_t> below_weak;
    below_strict.resize(end - pos);
    below_weak.resize(end - pos);
    for (std::uint32_t t = pos; t < end; ++t) {
      const std::uint32_t r = y.rank[x.order[t]];
      below_strict[t - pos] = tree.prefix(r - 1);
      below_weak[t - pos] = tree.prefix(r);
    }
    for (std::uint32_t t = pos; t < end; ++t) tree.add(y.rank[x.order[t]]);
    for (std::uint32_t t = pos; t < end; ++t) {
      const std::uint32_t a = x.order[t];
      const std::uint32_t r = y.rank[a];
      const std::int64_t at_most_x_below_y = tree.prefix(r - 1);
      const std::int64_t at_most_x_at_most_y = tree.prefix(r);
      // Quadrants relative to sample a: (x below|above, y below|above).
      const std::int64_t below_below = below_strict[t - pos];
      const std::int64_t below_above = static_cast<std::int64_t>(pos) - below_weak[t - pos];
      const std::int64_t above_below = static_cast<std::int64_t>(y.less[a]) - at_most_x_below_y;
      const std::int64_t above_above = static_cast<std::int64_t>(n - y.less_equal[a]) -
                                       (static_cast<std::int64_t>(end) - at_most_x_at_most_y);
      emit(a, below_below + above_above, below_above + above_below);
    }
    pos = end;
  }
}

struct SumAccumulator {
  ConcordanceSums sums;

  void add(std::int64_t c, std::int64_t d) {
    const std::int64_t s = c - d;
    sums.score += s;
    sums.score_squares += s * s;
    sums.concordant += c;
    sums.concordant_pairs += c * (c - 1);
    sums.tied_pairs += sums.n - 1 - c - d;
  }

  ConcordanceSums finish() {
    sums.tied_pairs /= 2;
    return sums;
  }
};

// Per column, one bitset row per sample marking the samples with a larger
// value (and, for columns with ties, a second row marking smaller values).
class OrderBitsets {
 public:
  OrderBitsets(const DataMatrix& data, const std::vector<ColumnOrder>& orders)
      : n_(data.n()), words_((data.n() + 63) / 64), greater_(data.d()), less_(data.d()) {
    for (std::size_t c = 0; c < data.d(); ++c) {
      greater_[c] = build(orders[c], /*greater=*/true);
      if (orders[c].has_ties) less_[c] = build(orders[c], /*greater=*/false);
    }
  }

  static std::size_t bytes_needed(std::size_t n, std::size_t d) {
    return d * n * ((n + 63) / 64) * sizeof(std::uint64_t);
  }

  template <typename Emit>
  void counts(std::size_t i, std::size_t j, Emit&& emit) const {
    const std::uint64_t* gi = greater_[i].data();
    const std::uint64_t* gj = greater_[j].data();
    const auto last = static_cast<std::int64_t>(n_) - 1;
    if (less_[i].empty() && less_[j].empty()) {
      for (std::size_t a = 0; a < n_; ++a) {
        const std::uint64_t* ri = gi + a * words_;
        const std::uint64_t* rj = gj + a * words_;
        std::int64_t discordant = 0;
        for (std::size_t w = 0; w < words_; ++w) discordant += std::popcount(ri[w] ^ rj[w]);
        emit(a, last - discordant, discordant);
      }
      return;
    }
    for (std::size_t a = 0; a < n_; ++a) {
      std::int64_t concordant = 0;
      std::int64_t discordant = 0;
      for (std::size_t w = 0; w < words_; ++w) {
        const std::uint64_t g1 = gi[a * words_ + w];
        const std::uint64_t g2 = gj[a * words_ + w];
        const std::uint64_t l1 = less_word(i, a, w);
        const std::uint64_t l2 = less_word(j, a, w);
        concordant += std::popcount((g1 & g2) | (l1 & l2));
        discordant += std::popcount((g1 & l2) | (l1 & g2));
      }
      emit(a, concordant, discordant);
    }
  }

 private:
  std::vector<std::uint64_t> build(const ColumnOrder& col, bool greater) const {
    std::vector<std::uint64_t> rows(n_ * words_, 0);
    std::vector<std::uint64_t> running(words_, 0);
    const auto n = static_cast<std::int64_t>(n_);
    std::int64_t pos = greater ? n - 1 : 0;
    const std::int64_t step = greater ? -1 : 1;
    while (pos >= 0 && pos < n) {
      std::int64_t end = pos;
      const std::uint32_t rank = col.rank[col.order[static_cast<std::size_t>(pos)]];
      while (end >= 0 && end < n && col.rank[col.order[static_cast<std::size_t>(end)]] == rank) {
        end += step;
      }
      for (std::int64_t t = pos; t != end; t += step) {
        const std::size_t a = col.order[static_cast<std::size_t>(t)];
        std::copy(running.begin(), running.end(), rows.begin() + static_cast<std::ptrdiff_t>(a * words_));
      }
      for (std::int64_t t = pos; t != end; t += step) {
        const std::size_t a = col.order[static_cast<std::size_t>(t)];
        running[a / 64] |= std::uint64_t{1} << (a % 64);
      }
      pos = end;
    }
    return rows;
  }

  std::uint64_t less_word(std::size_t col, std::size_t a, std::size_t w) const {
    if (!less_[col].empty()) return less_[col][a * words_ + w];
    // Without ties every other sample is either greater or smaller.
    std::uint64_t valid = ~std::uint64_t{0};
    if (w == words_ - 1 && n_ % 64 != 0) valid = (std::uint64_t{1} << (n_ % 64)) - 1;
    if (a / 64 == w) valid &= ~(std::uint64_t{1} << (a % 64));
    return ~greater_[col][a * words_ + w] & valid;
  }

  std::size_t n_;
  std::size_t words_;
  std::vector<std::vector<std::uint64_t>> greater_;
  std::vector<std::vector<std::uint64_t>> less_;
};

constexpr std::size_t kBitsetMemoryLimit = std::size_t{512} << 20;

}  // namespace

double ConcordanceProfile::tau() const {
  return ConcordanceSums::from_profile(*this).tau();
}

std::vector<double> ConcordanceProfile::jackknife_components() const {
  std::vector<double> q(n);
  const auto denom = static_cast<double>(n - 1);
  for (std::size_t a = 0; a < n; ++a) {
    q[a] = static_cast<double>(concordant[a] - discordant[a]) / denom;
  }
  return q;
}

ConcordanceSums ConcordanceSums::from_profile(const ConcordanceProfile& profile) {
  SumAccumulator acc;
  acc.sums.n = static_cast<std::int64_t>(profile.n);
  for (std::size_t a = 0; a < profile.n; ++a) {
    acc.add(profile.concordant[a], profile.discordant[a]);
  }
  return acc.finish();
}

double ConcordanceSums::tau() const {
  return static_cast<double>(score) / static_cast<double>(n * (n - 1));
}

double ConcordanceSums::jackknife_variance() const {
  require_three(n, "Jackknife variance of tau");
  // 4(n-1)/(n(n-2)^2) * sum_a (q_a - tau)^2 with q_a = s_a/(n-1), reduced to
  // 4 (n S2 - S1^2) / (n^2 (n-1) (n-2)^2) and evaluated exactly up to the division.
  const i128 numerator = static_cast<i128>(n) * score_squares - static_cast<i128>(score) * score;
  const i128 denominator = static_cast<i128>(n) * n * (n - 1) * (n - 2) * (n - 2);
  return 4.0 * static_cast<double>(numerator) / static_cast<double>(denominator);
}

double ConcordanceSums::pi_c() const {
  require_three(n, "pi_c");
  return static_cast<double>(concordant) / static_cast<double>(n * (n - 1));
}

double ConcordanceSums::pi_cc() const {
  require_three(n, "pi_cc");
  return static_cast<double>(concordant_pairs) / static_cast<double>(n * (n - 1) * (n - 2));
}

double ConcordanceSums::plugin_variance() const {
  require_three(n, "plug-in variance");
  // pi_cc - pi_c^2 = [n(n-1) C2 - (n-2) C1^2] / (n^2 (n-1)^2 (n-2)).
  const i128 numerator = static_cast<i128>(n) * (n - 1) * concordant_pairs -
                         static_cast<i128>(n - 2) * concordant * concordant;
  const i128 denominator = static_cast<i128>(n) * n * (n - 1) * (n - 1) * (n - 2);
  return 16.0 / static_cast<double>(n) * static_cast<double>(numerator) /
         static_cast<double>(denominator);
}

double tau_pair(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y);
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  std::int64_t tied_x = 0;
  std::int64_t tied_xy = 0;
  std::size_t run_x = 1;
  std::size_t run_xy = 1;
  for (std::size_t k = 1; k <= n; ++k) {
    const bool same_x = k < n && x[order[k]] == x[order[k - 1]];
    const bool same_xy = same_x && y[order[k]] == y[order[k - 1]];
    if (same_x) {
      ++run_x;
    } else {
      tied_x += static_cast<std::int64_t>(run_x * (run_x - 1) / 2);
      run_x = 1;
    }
    if (same_xy) {
      ++run_xy;
    } else {
      tied_xy += static_cast<std::int64_t>(run_xy * (run_xy - 1) / 2);
      run_xy = 1;
    }
  }

  std::vector<double> ys(n);
  for (std::size_t k = 0; k < n; ++k) ys[k] = y[order[k]];
  std::vector<double> scratch;
  const std::int64_t discordant = sort_counting_inversions(ys, scratch);
  const std::int64_t tied_y = tie_pairs_in_sorted(ys);

  const auto total = static_cast<std::int64_t>(n * (n - 1) / 2);
  const std::int64_t untied = total - tied_x - tied_y + tied_xy;
  return static_cast<double>(untied - 2 * discordant) / static_cast<double>(total);
}

ConcordanceProfile concordance_profile(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y);
  const std::size_t n = x.size();
  ConcordanceProfile profile;
  profile.n = n;
  profile.concordant.assign(n, 0);
  profile.discordant.assign(n, 0);
  const ColumnOrder xo = make_order(x);
  const ColumnOrder yo = make_order(y);
  Fenwick tree;
  std::int64_t untied = 0;
  fenwick_counts(xo, yo, tree, [&](std::size_t a, std::int64_t c, std::int64_t d) {
    profile.concordant[a] = c;
    profile.discordant[a] = d;
    untied += c + d;
  });
  profile.tied_pairs = (static_cast<std::int64_t>(n * (n - 1)) - untied) / 2;
  return profile;
}

double jackknife_variance_tau(const ConcordanceProfile& profile) {
  return ConcordanceSums::from_profile(profile).jackknife_variance();
}

PluginEstimate plugin_variance_tau(const ConcordanceProfile& profile) {
  const auto sums = ConcordanceSums::from_profile(profile);
  return {sums.plugin_variance(), sums.pi_c(), sums.pi_cc()};
}

double kruskal_variance(double pi_c, double pi_cc, std::size_t n) {
  if (n < 2) throw InvalidArgumentError("Kruskal variance needs n >= 2");
  if (!(pi_c >= 0.0 && pi_c <= 1.0 && pi_cc >= 0.0 && pi_cc <= 1.0)) {
    throw InvalidArgumentError("pi_c and pi_cc must lie in [0, 1]");
  }
  const auto nn = static_cast<double>(n);
  return 8.0 / (nn * (nn - 1.0)) * pi_c * (1.0 - pi_c) +
         16.0 / nn * (nn - 2.0) / (nn - 1.0) * (pi_cc - pi_c * pi_c);
}

double pseudo_variance(std::size_t n, bool asymptotic) {
  if (asymptotic) return 4.0 / 9.0;
  if (n < 2) throw InvalidArgumentError("finite-sample pseudo variance needs n >= 2");
  const auto nn = static_cast<double>(n);
  return 2.0 * (2.0 * nn + 5.0) / (9.0 * (nn - 1.0));
}

double sine_latent_correlation(double tau) {
  if (!(std::abs(tau) <= 1.0)) {
    throw InvalidArgumentError("tau must lie in [-1, 1], got " + std::to_string(tau));
  }
  return std::sin(std::numbers::pi * tau / 2.0);
}

TauPairEstimates estimate_pair(std::span<const double> x, std::span<const double> y) {
  const auto sums = ConcordanceSums::from_profile(concordance_profile(x, y));
  return {sums.tau(), sums.jackknife_variance(), sums.plugin_variance(), sums.pi_c(),
          sums.pi_cc()};
}

std::vector<ConcordanceSums> pairwise_sums(const DataMatrix& data, unsigned workers,
                                           CountingEngine engine) {
  const std::size_t n = data.n();
  const std::size_t d = data.d();
  if (n > std::numeric_limits<std::uint32_t>::max() / 2) {
    throw InvalidArgumentError("too many samples for the counting engine");
  }
  std::vector<ColumnOrder> orders(d);
  parallel_for(d, workers, [&](std::size_t c) { orders[c] = make_order(data.column(c)); });

  if (engine == CountingEngine::Automatic) {
    engine = OrderBitsets::bytes_needed(n, d) <= kBitsetMemoryLimit ? CountingEngine::Bitset
                                                                   : CountingEngine::Fenwick;
  }

  std::vector<ConcordanceSums> out(d * (d - 1) / 2);
  // Row i of the upper triangle starts at offset i*d - i(i+1)/2.
  auto offset = [d](std::size_t i) { return i * d - i * (i + 1) / 2; };

  if (engine == CountingEngine::Bitset) {
    const OrderBitsets bits(data, orders);
    parallel_for(d - 1, workers, [&](std::size_t i) {
      for (std::size_t j = i + 1; j < d; ++j) {
        SumAccumulator acc;
        acc.sums.n = static_cast<std::int64_t>(n);
        bits.counts(i, j, [&](std::size_t, std::int64_t c, std::int64_t dd) { acc.add(c, dd); });
        out[offset(i) + (j - i - 1)] = acc.finish();
      }
    });
  } else {
    parallel_for(d - 1, workers, [&](std::size_t i) {
      Fenwick tree;
      for (std::size_t j = i + 1; j < d; ++j) {
        SumAccumulator acc;
        acc.sums.n = static_cast<std::int64_t>(n);
        fenwick_counts(orders[i], orders[j], tree,
                       [&](std::size_t, std::int64_t c, std::int64_t dd) { acc.add(c, dd); });
        out[offset(i) + (j - i - 1)] = acc.finish();
      }
    });
  }
  return out;
}

KendallFields tau_matrix_with_variances(const DataMatrix& data, const VarianceSelection& select,
                                        unsigned workers, CountingEngine engine) {
  const std::size_t n = data.n();
  const std::size_t d = data.d();
  if (n < 3) {
    throw InsufficientSamplesError("tau matrix with variances needs n >= 3, got n = " +
                                   std::to_string(n));
  }
  if (d < 3) {
    throw InvalidArgumentError("tau matrix with variances needs d >= 3, got d = " +
                               std::to_string(d));
  }
  const auto sums = pairwise_sums(data, workers, engine);

  const auto dim = static_cast<Eigen::Index>(d);
  using Flags = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
  auto blank_field = [&] {
    VarianceField f;
    f.region = Region::UpperTriangle;
    f.values = Eigen::MatrixXd::Zero(dim, dim);
    f.floored = Flags::Constant(dim, dim, false);
    return f;
  };

  KendallFields out;
  out.n = n;
  out.tau.region = Region::UpperTriangle;
  out.tau.entries = Eigen::MatrixXd::Identity(dim, dim);
  if (select.jackknife) out.jackknife = blank_field();
  if (select.plugin) out.plugin = blank_field();
  if (select.pseudo) {
    out.pseudo = blank_field();
    const double v = pseudo_variance(n, select.pseudo_asymptotic) / static_cast<double>(n);
    out.pseudo->values.setConstant(v);
    out.pseudo->values.diagonal().setZero();
  }

  std::size_t k = 0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j, ++k) {
      const auto& s = sums[k];
      const auto a = static_cast<Eigen::Index>(i);
      const auto b = static_cast<Eigen::Index>(j);
      out.tied_pairs += s.tied_pairs;
      out.tau.entries(a, b) = out.tau.entries(b, a) = s.tau();
      if (out.jackknife) {
        out.jackknife->values(a, b) = out.jackknife->values(b, a) = s.jackknife_variance();
      }
      if (out.plugin) {
        double v = s.plugin_variance();
        if (v < kPluginVarianceFloor) {
          v = kPluginVarianceFloor;
          out.plugin->floored(a, b) = out.plugin->floored(b, a) = true;
        }
        out.plugin->values(a, b) = out.plugin->values(b, a) = v;
      }
    }
  }
  return out;
}

}  // namespace ucortest::kendall

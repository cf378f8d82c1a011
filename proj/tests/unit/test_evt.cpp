#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "ucortest/error.hpp"
#include "ucortest/evt.hpp"

using namespace ucortest;

namespace {

UMatrix constant_u(double v, Eigen::Index q = 3, Region region = Region::FullGrid) {
  return {Eigen::MatrixXd::Constant(q, q, v), region};
}

VarianceField constant_v(double v, Eigen::Index q = 3, Region region = Region::FullGrid) {
  return {Eigen::MatrixXd::Constant(q, q, v),
          Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(q, q, false), region};
}

TestConfig config_for(Method method) {
  TestConfig c;
  c.method = method;
  return c;
}

}  // namespace

TEST_CASE("method names") {
  for (Method m : {Method::Jackknife, Method::Plugin, Method::Pseudo, Method::GenericJackknife}) {
    CHECK(parse_method(to_string(m)) == m);
  }
  CHECK(to_string(Method::Plugin) == "plug");
  CHECK_THROWS_AS(parse_method("bootstrap"), InvalidArgumentError);
  CHECK(parse_generic_kernel("spearman") == GenericKernel::Spearman);
}

TEST_CASE("entry_statistics") {
  SUBCASE("equal estimates give zero") {
    const auto g = entry_statistics(constant_u(0.2), constant_u(0.2), constant_v(0.1),
                                    constant_v(0.3));
    CHECK((g.values.array() == 0.0).all());
  }

  SUBCASE("scalar arithmetic") {
    const auto g = entry_statistics(constant_u(0.5), constant_u(0.3), constant_v(0.01),
                                    constant_v(0.01));
    CHECK(g.values(1, 2) == doctest::Approx(2.0).epsilon(1e-14));
  }

  SUBCASE("swapping populations") {
    std::mt19937_64 rng(3);
    UMatrix a{Eigen::MatrixXd::Random(4, 4), Region::FullGrid};
    UMatrix b{Eigen::MatrixXd::Random(4, 4), Region::FullGrid};
    VarianceField va = constant_v(0.02, 4);
    VarianceField vb = constant_v(0.05, 4);
    va.values(1, 2) = 0.3;
    const auto g1 = entry_statistics(a, b, va, vb);
    const auto g2 = entry_statistics(b, a, vb, va);
    CHECK((g1.values.array() == g2.values.array()).all());
    CHECK((g1.values.array() >= 0.0).all());
  }

  SUBCASE("upper triangle leaves the rest NaN") {
    const auto g = entry_statistics(constant_u(0.5, 3, Region::UpperTriangle),
                                    constant_u(0.3, 3, Region::UpperTriangle),
                                    constant_v(0.01, 3, Region::UpperTriangle),
                                    constant_v(0.01, 3, Region::UpperTriangle));
    CHECK(std::isnan(g.values(0, 0)));
    CHECK(std::isnan(g.values(1, 0)));
    CHECK_FALSE(std::isnan(g.values(0, 1)));
  }

  SUBCASE("degenerate entries are excluded") {
    VarianceField v = constant_v(0.01);
    v.values(0, 1) = 0.0;
    VarianceField w = constant_v(0.0);
    const auto g = entry_statistics(constant_u(0.5), constant_u(0.3), v, w);
    REQUIRE(g.degenerate.size() == 1);
    CHECK(g.degenerate[0] == VariablePair{0, 1});
    CHECK(std::isnan(g.values(0, 1)));
    CHECK_THROWS_AS(entry_statistics(constant_u(0.5), constant_u(0.3), w, w), DegenerateError);
  }

  SUBCASE("shape and region mismatches") {
    CHECK_THROWS_AS(entry_statistics(constant_u(0.5, 3), constant_u(0.3, 4), constant_v(0.01, 3),
                                     constant_v(0.01, 3)),
                    DimensionError);
    CHECK_THROWS_AS(entry_statistics(constant_u(0.5), constant_u(0.3, 3, Region::UpperTriangle),
                                     constant_v(0.01), constant_v(0.01)),
                    DimensionError);
  }
}

TEST_CASE("critical values") {
  CHECK(gumbel_offset_full(0.05) == doctest::Approx(2.7162190705550930).epsilon(1e-14));
  CHECK(critical_value_full(0.05, 200) == doctest::Approx(22.242099244605780).epsilon(1e-14));
  CHECK(gumbel_offset_row(0.05) == doctest::Approx(4.7956606122349289).epsilon(1e-14));
  CHECK(gumbel_offset_row(0.05) ==
        doctest::Approx(gumbel_offset_full(0.05) + std::log(8.0)).epsilon(1e-14));
  CHECK(critical_value_row(0.05, 200) == doctest::Approx(13.724906053189543).epsilon(1e-14));

  for (std::size_t q : {3u, 10u, 200u, 5000u}) {
    CHECK(critical_value_full(0.01, q) > critical_value_full(0.05, q));
    CHECK(critical_value_full(0.05, q) > critical_value_full(0.10, q));
    CHECK(critical_value_full(0.05, q + 1) > critical_value_full(0.05, q));
    CHECK(critical_value_row(0.05, q) < critical_value_full(0.05, q));
  }

  CHECK_THROWS_AS(critical_value_full(0.05, 2), InvalidArgumentError);
  CHECK_THROWS_AS(critical_value_full(0.0, 10), InvalidArgumentError);
  CHECK_THROWS_AS(critical_value_row(1.0, 10), InvalidArgumentError);
  TestConfig bad;
  bad.alpha = 1.5;
  CHECK_THROWS_AS(bad.validate(), InvalidArgumentError);
}

TEST_CASE("p-values") {
  const double q = 50;
  const double zero_full = 4.0 * std::log(q) - std::log(std::log(q));
  const double zero_row = 2.0 * std::log(q) - std::log(std::log(q));
  CHECK(p_value_full(zero_full, 50) == doctest::Approx(0.18083613862358884).epsilon(1e-12));
  CHECK(p_value_row(zero_row, 50) == doctest::Approx(0.43117905813597976).epsilon(1e-12));
  CHECK(p_value_full(1e4, 50) < 1e-300);
  CHECK(p_value_full(-1e3, 50) == 1.0);

  for (double alpha : {0.01, 0.05, 0.1}) {
    for (std::size_t qq : {3u, 50u, 1000u}) {
      CHECK(std::abs(p_value_full(critical_value_full(alpha, qq), qq) - alpha) <= 1e-12);
      CHECK(std::abs(p_value_row(critical_value_row(alpha, qq), qq) - alpha) <= 1e-12);
    }
  }

  double prev = 1.0;
  for (double m = -10; m < 60; m += 0.5) {
    const double p = p_value_row(m, 20);
    CHECK(p <= prev);
    CHECK(p >= 0.0);
    prev = p;
  }

  CHECK(limiting_cdf_full(0.0) == doctest::Approx(1.0 - 0.18083613862358884).epsilon(1e-14));
  CHECK(limiting_cdf_row(0.0) == doctest::Approx(1.0 - 0.43117905813597976).epsilon(1e-14));
}

TEST_CASE("decision trinity") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> qs(3, 2000);
  std::uniform_real_distribution<double> alphas(0.001, 0.5);
  std::uniform_real_distribution<double> offset(-8.0, 8.0);
  for (int k = 0; k < 1000; ++k) {
    const std::size_t q = qs(rng);
    const double alpha = alphas(rng);
    const double m = std::max(0.0, critical_value_full(alpha, q) + offset(rng));
    CHECK((m >= critical_value_full(alpha, q)) == (p_value_full(m, q) <= alpha));
    const double r = std::max(0.0, critical_value_row(alpha, q) + offset(rng));
    CHECK((r >= critical_value_row(alpha, q)) == (p_value_row(r, q) <= alpha));
  }
}

TEST_CASE("run_full_test") {
  std::mt19937_64 rng(41);
  const DataMatrix x(oracle::random_data(rng, 60, 8));
  const DataMatrix y(oracle::random_data(rng, 70, 8));

  SUBCASE("identical samples never reject") {
    for (Method m : {Method::Jackknife, Method::Plugin, Method::Pseudo}) {
      const auto out = run_full_test(x, x, config_for(m));
      CHECK(out.statistic == 0.0);
      CHECK_FALSE(out.reject);
      CHECK(out.argmax == VariablePair{0, 1});
    }
  }

  SUBCASE("outcome invariants") {
    for (Method m : {Method::Jackknife, Method::Plugin, Method::Pseudo}) {
      const auto out = run_full_test(x, y, config_for(m));
      CHECK(out.q == 8);
      CHECK(out.reject == (out.statistic >= out.critical_value));
      CHECK(out.reject == (out.p_value <= out.alpha));
      CHECK(out.x_centered == doctest::Approx(centered_full(out.statistic, 8)));
      CHECK(out.argmax.i < out.argmax.j);
      double max = 0.0;
      for (Eigen::Index i = 0; i < 8; ++i) {
        for (Eigen::Index j = i + 1; j < 8; ++j) max = std::max(max, out.entries.values(i, j));
      }
      CHECK(out.statistic == max);
      CHECK(out.entries.values(static_cast<Eigen::Index>(out.argmax.i),
                               static_cast<Eigen::Index>(out.argmax.j)) == max);
    }
  }

  SUBCASE("population swap") {
    const auto a = run_full_test(x, y, config_for(Method::Plugin));
    const auto b = run_full_test(y, x, config_for(Method::Plugin));
    CHECK(a.statistic == b.statistic);
    CHECK(a.p_value == b.p_value);
    CHECK(a.argmax == b.argmax);
  }

  SUBCASE("rank invariance of the full outcome") {
    Eigen::MatrixXd t = x.values();
    t = t.array().exp();
    Eigen::MatrixXd s = y.values();
    s = s.array().cube() + 2.0 * s.array();
    for (Method m : {Method::Jackknife, Method::Plugin, Method::Pseudo}) {
      const auto a = run_full_test(x, y, config_for(m));
      const auto b = run_full_test(DataMatrix(t), DataMatrix(s), config_for(m));
      CHECK(a.statistic == b.statistic);
      CHECK(a.p_value == b.p_value);
      CHECK(a.reject == b.reject);
      CHECK(a.argmax == b.argmax);
    }
  }

  SUBCASE("monotone in alpha") {
    Eigen::MatrixXd shifted = y.values();
    shifted.col(1) = 0.7 * shifted.col(0) + 0.3 * shifted.col(1);
    const DataMatrix y2(shifted);
    bool rejected_before = false;
    for (double alpha : {0.001, 0.01, 0.05, 0.1, 0.3}) {
      TestConfig c = config_for(Method::Jackknife);
      c.alpha = alpha;
      const bool r = run_full_test(x, y2, c).reject;
      if (rejected_before) CHECK(r);
      rejected_before = rejected_before || r;
    }
    CHECK(rejected_before);
  }

  SUBCASE("several methods in one pass match single runs") {
    const auto outs = run_kendall_tests(x, y, {Method::Pseudo, Method::Jackknife}, 0.05);
    REQUIRE(outs.size() == 2);
    CHECK(outs[0].statistic == run_full_test(x, y, config_for(Method::Pseudo)).statistic);
    CHECK(outs[1].statistic == run_full_test(x, y, config_for(Method::Jackknife)).statistic);
  }

  SUBCASE("pseudo uses the null variance") {
    const auto out = run_full_test(x, y, config_for(Method::Pseudo));
    const double tx = out.u1.entries(0, 1);
    const double ty = out.u2.entries(0, 1);
    const double denom = 2.0 * (2 * 60 + 5) / (9.0 * 59) / 60 + 2.0 * (2 * 70 + 5) / (9.0 * 69) / 70;
    CHECK(out.entries.values(0, 1) == doctest::Approx((tx - ty) * (tx - ty) / denom));
  }

  SUBCASE("errors") {
    const DataMatrix narrow(oracle::random_data(rng, 30, 5));
    CHECK_THROWS_AS(run_full_test(x, narrow, config_for(Method::Pseudo)), DimensionError);
    TestConfig c = config_for(Method::Pseudo);
    c.alpha = 0.0;
    CHECK_THROWS_AS(run_full_test(x, y, c), InvalidArgumentError);
  }

  SUBCASE("ties and constant columns are reported") {
    Eigen::MatrixXd a = oracle::random_data(rng, 30, 4, true);
    Eigen::MatrixXd b = oracle::random_data(rng, 30, 4, true);
    a.col(3).setConstant(2.0);
    b.col(3).setConstant(-1.0);
    const auto out = run_full_test(DataMatrix(a), DataMatrix(b), config_for(Method::Jackknife));
    CHECK(out.entries.degenerate.size() == 3);
    CHECK(out.argmax.j != 3);
    CHECK(out.warnings.size() == 2);
  }
}

TEST_CASE("generic engine") {
  std::mt19937_64 rng(6);
  const DataMatrix x(oracle::random_data(rng, 20, 4));
  const DataMatrix y(oracle::random_data(rng, 22, 4));
  TestConfig c = config_for(Method::GenericJackknife);

  SUBCASE("Kendall kernel agrees with the specialized Jackknife off the diagonal") {
    const auto g = run_full_test(x, y, c);
    const auto k = run_full_test(x, y, config_for(Method::Jackknife));
    CHECK(g.entries.region == Region::FullGrid);
    for (Eigen::Index i = 0; i < 4; ++i) {
      CHECK(std::isnan(g.entries.values(i, i)));
      for (Eigen::Index j = i + 1; j < 4; ++j) {
        CHECK(std::abs(g.entries.values(i, j) - k.entries.values(i, j)) <= 1e-10);
        CHECK(g.entries.values(i, j) == g.entries.values(j, i));
      }
    }
    CHECK(g.entries.degenerate.size() == 4);
    CHECK_FALSE(g.warnings.empty());
  }

  SUBCASE("Spearman kernel") {
    c.generic_kernel = GenericKernel::Spearman;
    const auto g = run_full_test(x, y, c);
    CHECK(g.statistic >= 0.0);
    CHECK(g.reject == (g.p_value <= g.alpha));
  }
}

TEST_CASE("run_row_test") {
  std::mt19937_64 rng(43);
  const DataMatrix x(oracle::random_data(rng, 50, 6));
  const DataMatrix y(oracle::random_data(rng, 50, 6));

  CHECK_FALSE(run_row_test(x, x, 2, config_for(Method::Jackknife)).reject);

  for (Method m : {Method::Jackknife, Method::Plugin, Method::Pseudo}) {
    const auto full = run_full_test(x, y, config_for(m));
    for (std::size_t r = 0; r < 6; ++r) {
      const auto row = run_row_test(x, y, r, config_for(m));
      CHECK(row.statistic <= full.statistic);
      CHECK(row.argmax.i == r);
      CHECK(row.argmax.j != r);
      CHECK(row.critical_value == critical_value_row(0.05, 6));
      CHECK(row.reject == (row.p_value <= 0.05));
    }
  }
  CHECK_THROWS_AS(run_row_test(x, y, 6, config_for(Method::Pseudo)), InvalidArgumentError);
}

TEST_CASE("differential_entries") {
  std::mt19937_64 rng(8);
  const DataMatrix x(oracle::random_data(rng, 40, 5));
  const DataMatrix y(oracle::random_data(rng, 40, 5));
  const auto out = run_full_test(x, y, config_for(Method::Jackknife));

  CHECK(differential_entries(out, out.statistic + 1.0).empty());
  const auto all = differential_entries(out, 0.0);
  CHECK(all.size() == 10);
  CHECK(all.front().statistic == out.statistic);
  CHECK(all.front().i == out.argmax.i);
  CHECK(all.front().j == out.argmax.j);
  for (std::size_t k = 1; k < all.size(); ++k) CHECK(all[k - 1].statistic >= all[k].statistic);
  for (const auto& e : all) {
    CHECK(e.i < e.j);
    CHECK(e.p_marginal == doctest::Approx(std::erfc(std::sqrt(e.statistic / 2.0))));
  }

  TestConfig c = config_for(Method::Jackknife);
  c.row = 3;
  const auto row = run_full_test(x, y, c);
  const auto entries = differential_entries(row, 0.0);
  CHECK(entries.size() == 4);
  for (const auto& e : entries) CHECK(e.i == 3);
}

TEST_CASE("argmax ties go to the smallest pair") {
  const auto g = entry_statistics(constant_u(0.5, 4, Region::UpperTriangle),
                                  constant_u(0.3, 4, Region::UpperTriangle),
                                  constant_v(0.01, 4, Region::UpperTriangle),
                                  constant_v(0.01, 4, Region::UpperTriangle));
  TestOutcome out;
  out.entries = g;
  const auto list = differential_entries(out, 0.0);
  REQUIRE(list.size() == 6);
  CHECK(list[0].i == 0);
  CHECK(list[0].j == 1);
  CHECK(list[5].i == 2);
  CHECK(list[5].j == 3);
}

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ucortest/error.hpp"
#include "ucortest/kendall.hpp"
#include "ucortest/simulation.hpp"

using namespace ucortest;
using namespace ucortest::sim;

TEST_CASE("names and parsing") {
  CHECK(parse_model("1") == Model::Normal);
  CHECK(parse_model("t") == Model::StudentT);
  CHECK(parse_model("cauchy") == Model::CauchyMargin);
  CHECK(parse_structure("tri") == Structure::Tridiagonal);
  CHECK(parse_structure(to_string(Structure::Multidiagonal)) == Structure::Multidiagonal);
  CHECK_THROWS_AS(parse_model("4"), InvalidArgumentError);
  CHECK_THROWS_AS(parse_structure("banded"), InvalidArgumentError);
  CHECK(parse_method_list("all") ==
        std::vector<Method>{Method::Pseudo, Method::Jackknife, Method::Plugin});
  CHECK(parse_method_list("plug,ps") == std::vector<Method>{Method::Plugin, Method::Pseudo});
  CHECK_THROWS_AS(parse_method_list("ps,,jack"), InvalidArgumentError);
  CHECK_THROWS_AS(parse_method_list("generic-jack"), InvalidArgumentError);
}

TEST_CASE("build_R") {
  const auto block = build_R({Structure::Block, 5});
  for (Eigen::Index i = 0; i < 5; ++i) {
    for (Eigen::Index j = 0; j < 5; ++j) CHECK(block(i, j) == (i == j ? 1.0 : 0.6));
  }

  const auto block7 = build_R({Structure::Block, 7});
  CHECK(block7(5, 6) == 0.0);
  CHECK(block7(4, 5) == 0.0);
  CHECK(block7(6, 6) == 1.0);

  const auto tri = build_R({Structure::Tridiagonal, 3});
  CHECK(tri(0, 2) == 0.0);
  CHECK(tri(0, 1) == 0.5);
  CHECK(tri(2, 1) == 0.5);

  const auto multi = build_R({Structure::Multidiagonal, 4});
  CHECK(multi(0, 2) == doctest::Approx(0.64).epsilon(1e-15));
  CHECK(multi(3, 0) == doctest::Approx(0.512).epsilon(1e-15));

  CHECK_THROWS_AS(build_R({Structure::Block, 4}), InvalidArgumentError);
  CHECK_THROWS_AS(build_R({Structure::Tridiagonal, 1}), InvalidArgumentError);
}

TEST_CASE("apply_D") {
  Rng rng(3);
  const auto R = build_R({Structure::Multidiagonal, 12});
  const auto S = apply_D(R, rng);
  for (Eigen::Index i = 0; i < 12; ++i) {
    CHECK(S(i, i) > 0.25);
    CHECK(S(i, i) < 2.25);
    for (Eigen::Index j = 0; j < 12; ++j) {
      CHECK(std::abs(S(i, j) / std::sqrt(S(i, i) * S(j, j)) - R(i, j)) <= 1e-12);
      CHECK(S(i, j) == S(j, i));
    }
  }
}

TEST_CASE("perturb") {
  Rng rng(5);
  const auto sigma = apply_D(build_R({Structure::Block, 10}), rng);

  SUBCASE("zeta = 0 is the identity pair") {
    const auto p = perturb(sigma, 0.0, rng);
    CHECK((p.delta.array() == 0.0).all());
    CHECK((p.sigma1.array() == p.sigma2.array()).all());
    CHECK(p.perturbed.empty());
  }

  SUBCASE("alternative") {
    for (int trial = 0; trial < 50; ++trial) {
      const auto p = perturb(sigma, 0.5, rng);
      CHECK((p.delta.array() != 0.0).count() == 8);
      CHECK((p.delta.array() == p.delta.transpose().array()).all());
      CHECK((p.delta.array() >= 0.0).all());
      CHECK(p.delta.maxCoeff() <= 0.5 * sigma.diagonal().maxCoeff());
      REQUIRE(p.perturbed.size() == 4);
      for (const auto& pos : p.perturbed) CHECK(pos.i < pos.j);
      CHECK(min_eigenvalue(p.sigma1) >= 0.05 - 1e-9);
      CHECK(min_eigenvalue(p.sigma2) >= 0.05 - 1e-9);
      CHECK((p.sigma2 - p.sigma1 - p.delta).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(perturb(sigma, -0.1, rng), InvalidArgumentError);
    CHECK_THROWS_AS(perturb(Eigen::MatrixXd::Identity(3, 3), 0.2, rng), InvalidArgumentError);
    CHECK_NOTHROW(perturb(Eigen::MatrixXd::Identity(4, 4), 0.2, rng));
  }
}

TEST_CASE("sample") {
  Rng rng(9);
  const auto sigma = apply_D(build_R({Structure::Tridiagonal, 6}), rng);

  for (Model m : {Model::Normal, Model::StudentT, Model::CauchyMargin}) {
    const auto data = sample(m, sigma, 40, rng);
    CHECK(data.n() == 40);
    CHECK(data.d() == 6);
    CHECK(data.values().allFinite());
  }

  SUBCASE("Cauchy margins keep the normal ranks") {
    Rng a(21);
    Rng b(21);
    const auto normal = sample(Model::Normal, sigma, 200, a);
    const auto cauchy = sample(Model::CauchyMargin, sigma, 200, b);
    const kendall::VarianceSelection sel{true, true, false, false};
    const auto fa = kendall::tau_matrix_with_variances(normal, sel);
    const auto fb = kendall::tau_matrix_with_variances(cauchy, sel);
    CHECK((fa.tau.entries.array() == fb.tau.entries.array()).all());
    CHECK((fa.jackknife->values.array() == fb.jackknife->values.array()).all());
  }

  SUBCASE("cauchy_from_normal") {
    CHECK(cauchy_from_normal(0.0) == 0.0);
    CHECK(cauchy_from_normal(1.0) == doctest::Approx(-cauchy_from_normal(-1.0)).epsilon(1e-15));
    const double u = 0.5 * std::erfc(-1.3 / std::numbers::sqrt2);
    CHECK(cauchy_from_normal(1.3) ==
          doctest::Approx(std::tan(std::numbers::pi * (u - 0.5))).epsilon(1e-10));
    double prev = -std::numeric_limits<double>::infinity();
    for (double z = -30; z <= 30; z += 0.25) {
      const double c = cauchy_from_normal(z);
      CHECK(std::isfinite(c));
      CHECK(c > prev);
      prev = c;
    }
  }

  SUBCASE("t(3) marginal variance is three times the scale") {
    Rng r(1234);
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2, 2);
    s(0, 0) = 2.0;
    const auto data = sample(Model::StudentT, s, 100000, r);
    // t(3) has infinite fourth moment, so the sample variance converges slowly;
    // the median absolute value is checked as well.
    const Eigen::VectorXd c0 = data.values().col(0);
    const double var0 = c0.squaredNorm() / static_cast<double>(c0.size());
    CHECK(var0 == doctest::Approx(6.0).epsilon(0.05));
    std::vector<double> abs1(static_cast<std::size_t>(data.n()));
    for (std::size_t k = 0; k < abs1.size(); ++k) abs1[k] = std::abs(data(k, 1));
    std::nth_element(abs1.begin(), abs1.begin() + abs1.size() / 2, abs1.end());
    CHECK(abs1[abs1.size() / 2] == doctest::Approx(0.7648923284).epsilon(0.02));
  }

  CHECK_THROWS_AS(sample(Model::Normal, -Eigen::MatrixXd::Identity(3, 3), 5, rng),
                  DegenerateError);
}

TEST_CASE("replication streams") {
  CHECK(mix64(1) != mix64(2));
  Rng a = replication_rng(7, 3);
  Rng b = replication_rng(7, 3);
  Rng c = replication_rng(7, 4);
  Rng d = replication_rng(8, 3);
  const auto va = a();
  CHECK(va == b());
  CHECK(va != c());
  CHECK(va != d());
}

TEST_CASE("SimSpec config text") {
  SimSpec spec;
  spec.model = Model::StudentT;
  spec.structure = {Structure::Multidiagonal, 17};
  spec.n1 = 80;
  spec.n2 = 90;
  spec.zeta = 0.25;
  spec.methods = {Method::Jackknife, Method::Plugin};
  spec.alpha = 0.1;
  spec.reps = 12;
  spec.master_seed = 123456789012345ULL;
  spec.pseudo_asymptotic = true;
  const auto back = parse_config_text(to_config_text(spec));
  CHECK(back.model == spec.model);
  CHECK(back.structure.kind == spec.structure.kind);
  CHECK(back.structure.d == 17);
  CHECK(back.n1 == 80);
  CHECK(back.n2 == 90);
  CHECK(back.zeta == 0.25);
  CHECK(back.methods == spec.methods);
  CHECK(back.alpha == 0.1);
  CHECK(back.reps == 12);
  CHECK(back.master_seed == spec.master_seed);
  CHECK(back.pseudo_asymptotic);
  CHECK_FALSE(back.copy_x_as_y);

  CHECK(parse_config_text("# comment\nmodel = 3\n\nd = 8 # trailing\n").structure.d == 8);
  CHECK_THROWS_AS(parse_config_text("colour = red\n"), ParseError);
  CHECK_THROWS_AS(parse_config_text("reps = many\n"), ParseError);
  CHECK_THROWS_AS(parse_config_text("reps = 0\n").validate(), InvalidArgumentError);
  CHECK_THROWS_AS(parse_config_text("zeta = -1\n").validate(), InvalidArgumentError);
  CHECK_THROWS_AS(parse_config_text("model = 9\n"), ParseError);
}

TEST_CASE("SimSpec validation") {
  SimSpec spec;
  spec.structure.d = 10;
  CHECK_NOTHROW(spec.validate());
  spec.alpha = 1.0;
  CHECK_THROWS_AS(spec.validate(), InvalidArgumentError);
  spec.alpha = 0.05;
  spec.structure = {Structure::Tridiagonal, 2};
  CHECK_THROWS_AS(spec.validate(), InvalidArgumentError);
  spec.structure = {Structure::Tridiagonal, 10};
  spec.n1 = 2;
  CHECK_THROWS_AS(spec.validate(), InvalidArgumentError);
  spec.n1 = 10;
  spec.methods.clear();
  CHECK_THROWS_AS(spec.validate(), InvalidArgumentError);
  spec.methods = {Method::GenericJackknife};
  CHECK_THROWS_AS(spec.validate(), InvalidArgumentError);
}

TEST_CASE("empirical_rejection_rate") {
  SimSpec spec;
  spec.structure = {Structure::Block, 10};
  spec.n1 = 40;
  spec.n2 = 50;
  spec.methods = {Method::Pseudo, Method::Jackknife, Method::Plugin};
  spec.reps = 12;
  spec.master_seed = 99;

  SUBCASE("result does not depend on worker count") {
    spec.zeta = 0.3;
    const auto a = empirical_rejection_rate(spec, 1);
    const auto b = empirical_rejection_rate(spec, 3);
    REQUIRE(a.log.size() == 12);
    for (std::size_t k = 0; k < 12; ++k) {
      CHECK(a.log[k].index == k);
      CHECK(a.log[k].reject == b.log[k].reject);
      CHECK(a.log[k].statistic == b.log[k].statistic);
    }
    for (std::size_t m = 0; m < 3; ++m) CHECK(a.rates[m].rate == b.rates[m].rate);
  }

  SUBCASE("copying X into Y never rejects") {
    spec.copy_x_as_y = true;
    const auto r = empirical_rejection_rate(spec, 2);
    for (const auto& rate : r.rates) {
      CHECK(rate.rejections == 0);
      CHECK(rate.rate == 0.0);
      CHECK(rate.valid_reps == 12);
      CHECK(rate.standard_error == 0.0);
    }
  }

  SUBCASE("replication data are reproducible") {
    const auto [x1, y1] = replication_data(spec, 5);
    const auto [x2, y2] = replication_data(spec, 5);
    CHECK(x1.values() == x2.values());
    CHECK(y1.values() == y2.values());
    CHECK(x1.n() == 40);
    CHECK(y1.n() == 50);
  }

  SUBCASE("rate and standard error are consistent") {
    spec.zeta = 1.0;
    spec.n1 = spec.n2 = 100;
    const auto r = empirical_rejection_rate(spec, 1);
    for (std::size_t m = 0; m < 3; ++m) {
      const auto& rate = r.rates[m];
      CHECK(rate.method == spec.methods[m]);
      std::size_t count = 0;
      for (const auto& rec : r.log) count += rec.reject[m] ? 1 : 0;
      CHECK(rate.rejections == count);
      CHECK(rate.rate == doctest::Approx(static_cast<double>(count) / 12.0));
      CHECK(rate.standard_error ==
            doctest::Approx(std::sqrt(rate.rate * (1.0 - rate.rate) / 12.0)));
    }
  }
}

TEST_CASE("row test holds its level on null data") {
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(20, 20);
  std::size_t rejections = 0;
  constexpr std::size_t kReps = 300;
  for (std::size_t k = 0; k < kReps; ++k) {
    Rng rng = replication_rng(2718, k);
    const auto x = sample(Model::Normal, identity, 150, rng);
    const auto y = sample(Model::Normal, identity, 150, rng);
    TestConfig c;
    c.method = Method::Pseudo;
    rejections += run_row_test(x, y, k % 20, c).reject ? 1 : 0;
  }
  const double rate = static_cast<double>(rejections) / kReps;
  CHECK(rate >= 0.01);
  CHECK(rate <= 0.10);
}

TEST_CASE("the perturbed entry leads the differential list") {
  std::size_t hits = 0;
  constexpr std::size_t kTrials = 20;
  for (std::size_t k = 0; k < kTrials; ++k) {
    Rng rng = replication_rng(161, k);
    const auto sigma = apply_D(build_R({Structure::Block, 50}), rng);
    const auto pair = perturb(sigma, 1.0, rng);
    const auto x = sample(Model::Normal, pair.sigma1, 500, rng);
    const auto y = sample(Model::Normal, pair.sigma2, 500, rng);
    TestConfig c;
    c.method = Method::Jackknife;
    const auto out = run_full_test(x, y, c);
    const auto top = differential_entries(out, 0.0).front();
    const VariablePair where{top.i, top.j};
    hits += std::find(pair.perturbed.begin(), pair.perturbed.end(), where) != pair.perturbed.end();
  }
  CHECK(hits >= 16);
}

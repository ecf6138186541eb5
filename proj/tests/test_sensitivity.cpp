#include <cmath>
#include <random>

#include "costsens/error.hpp"
#include "costsens/sensitivity.hpp"
#include "doctest.h"
#include "mgf_oracle.hpp"

using namespace costsens;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("log-MGF reference values") {
  CHECK(log_mgf(ConfounderLaw::poisson(1.0), 0.0) == 0.0);
  CHECK(log_mgf(ConfounderLaw::bernoulli(0.5), std::log(2.0)) == doctest::Approx(std::log(1.5)).epsilon(1e-15));
  CHECK(log_mgf(ConfounderLaw::gamma(2.0, 0.3), 1.0) == doctest::Approx(0.713350).epsilon(1e-6));
  CHECK(log_mgf(ConfounderLaw::normal(1.0, 2.0), 0.5) == doctest::Approx(0.5 + 0.5));
  CHECK(code_of([] { log_mgf(ConfounderLaw::gamma(1.0, 1.0), 1.0); }) == ErrorCode::MgfDomain);
}

TEST_CASE("log-MGF is zero at gamma = 0 for every family") {
  for (const auto& law : {ConfounderLaw::bernoulli(0.3), ConfounderLaw::normal(2, 3), ConfounderLaw::poisson(4),
                          ConfounderLaw::gamma(2, 5)})
    CHECK(log_mgf(law, 0.0) == 0.0);
}

TEST_CASE("closed forms match numerical oracles on a randomized admissible grid") {
  std::mt19937_64 rng(20241015);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int checked = 0;
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const int fam = i % 4;
    ConfounderLaw law;
    double g = -1.0 + 2.0 * unit(rng);
    switch (fam) {
      case 0: law = ConfounderLaw::bernoulli(unit(rng)); break;
      case 1: law = ConfounderLaw::normal(-2.0 + 4.0 * unit(rng), 0.1 + 2.0 * unit(rng)); break;
      case 2: law = ConfounderLaw::poisson(0.1 + 20.0 * unit(rng)); break;
      default: {
        law = ConfounderLaw::gamma(0.3 + 5.0 * unit(rng), 0.1 + 2.0 * unit(rng));
        g = -1.0 + (1.0 + 0.9 / law.second) * unit(rng);  // theta * g < 0.9
        break;
      }
    }
    const double closed = log_mgf(law, g);
    const double oracle = testing::oracle_log_mgf(law, g);
    const double err = std::abs(closed - oracle) / std::max(1.0, std::abs(oracle));
    worst = std::max(worst, err);
    CHECK_MESSAGE(err < 1e-9, law.describe(), " gamma=", g, " closed=", closed, " oracle=", oracle);
    ++checked;
  }
  CHECK(checked == 200);
  MESSAGE("largest relative discrepancy ", worst);
}

TEST_CASE("Bernoulli closed form keeps precision for tiny effects") {
  const double g = 1e-12;
  CHECK(log_mgf(ConfounderLaw::bernoulli(0.4), g) == doctest::Approx(0.4 * g).epsilon(1e-12));
}

TEST_CASE("law validation") {
  CHECK_THROWS_AS(ConfounderLaw::bernoulli(1.5).validate(), Error);
  CHECK_THROWS_AS(ConfounderLaw::normal(0, 0).validate(), Error);
  CHECK_THROWS_AS(ConfounderLaw::poisson(-1).validate(), Error);
  CHECK_THROWS_AS(ConfounderLaw::gamma(1, 0).validate(), Error);
  CHECK(ConfounderLaw::gamma(2, 3).mean() == 6.0);
  CHECK(ConfounderLaw::gamma(2, 3).variance() == 18.0);
  CHECK(parse_family("Poisson") == ConfounderFamily::Poisson);
  CHECK(code_of([] { parse_family("weibull"); }) == ErrorCode::Config);
  ConfounderModel mixed{ConfounderLaw::bernoulli(0.2), ConfounderLaw::poisson(1), 0.1, 0.1};
  CHECK_THROWS_AS(mixed.validate(), Error);
}

TEST_CASE("apparent effect from a reported interval") {
  const auto a = ApparentEffect::from_cost_ratio_ci(0.873, 0.793, 0.960);
  CHECK(a.beta_star == doctest::Approx(std::log(0.873)));
  CHECK(a.se == doctest::Approx(0.04875).epsilon(1e-3));
  CHECK_THROWS_AS(ApparentEffect::from_cost_ratio_ci(0.9, 1.0, 0.8), Error);
}

TEST_CASE("reference adjustment rows") {
  const ApparentEffect a{std::log(0.873), 0.04872, 0.95};
  auto round2 = [](double x) { return std::round(x * 100.0) / 100.0; };

  ConfounderModel bern{ConfounderLaw::bernoulli(0.7), ConfounderLaw::bernoulli(0.5), std::log(1.1), std::log(1.1)};
  const auto b = adjust_effect(a, bern);
  CHECK(round2(b.cost_ratio) == 0.89);
  CHECK(round2(b.cr_low) == 0.81);
  CHECK(round2(b.cr_high) == 0.98);

  ConfounderModel pois{ConfounderLaw::poisson(19), ConfounderLaw::poisson(11), std::log(1.005), std::log(1.005)};
  const auto p = adjust_effect(a, pois);
  CHECK(round2(p.cost_ratio) == 0.91);
  CHECK(round2(p.cr_low) == 0.83);
  CHECK(round2(p.cr_high) == 1.00);
}

TEST_CASE("null confounder and SE pass-through") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const ApparentEffect a{-1.0 + 2.0 * u(rng), 0.01 + u(rng), 0.9};
    ConfounderModel m{ConfounderLaw::gamma(0.5 + u(rng), 0.5 + u(rng)), ConfounderLaw::gamma(0.5 + u(rng), 0.5), 0.0, 0.0};
    const auto r = adjust_effect(a, m);
    CHECK(std::abs(r.beta - a.beta_star) <= 1e-12);
    CHECK(r.se == a.se);
    CHECK(r.ci_low < r.ci_high);
    CHECK(r.cost_ratio == std::exp(r.beta));
    m.gamma_control = m.gamma_treated = 0.3;
    CHECK(adjust_effect(a, m).se == a.se);
  }
}

TEST_CASE("normal closed-form shift") {
  const ApparentEffect a{0.2, 0.1, 0.95};
  ConfounderModel m{ConfounderLaw::normal(0, 1), ConfounderLaw::normal(1, 1), 0.5, 0.5};
  CHECK(adjust_effect(a, m).beta == doctest::Approx(0.2 - 0.5).epsilon(1e-15));
  CHECK(correction(m) == doctest::Approx(-0.5));
}

TEST_CASE("sweep flags significance changes and marks domain errors per row") {
  const ApparentEffect a{std::log(0.873), 0.04872, 0.95};
  std::vector<GridEntry> grid;
  grid.push_back({{ConfounderLaw::bernoulli(0.7), ConfounderLaw::bernoulli(0.5), std::log(1.1), std::log(1.1)}, "a"});
  grid.push_back({{ConfounderLaw::bernoulli(0.8), ConfounderLaw::bernoulli(0.3), std::log(1.5), std::log(1.5)}, "b"});
  grid.push_back({{ConfounderLaw::gamma(1, 1), ConfounderLaw::gamma(1, 1), 1.0, 1.0}, "c"});
  const auto rows = sweep(a, grid);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].significant);
  CHECK_FALSE(rows[0].significance_changed);
  CHECK(rows[1].significance_changed);
  CHECK_FALSE(rows[2].effect);
  CHECK(rows[2].error == "mgf-domain");
  CHECK(sweep(a, {}).empty());
}

TEST_CASE("rounded and strict significance rules differ on boundary rows") {
  // Upper bound 0.9975 rounds to 1.00: changed at two decimals, not strictly.
  const ApparentEffect a{std::log(0.873), 0.04872, 0.95};
  std::vector<GridEntry> grid{
      {{ConfounderLaw::bernoulli(0.8), ConfounderLaw::bernoulli(0.4), std::log(1.1), std::log(1.1)}, "row"}};
  const auto r = sweep(a, grid)[0];
  REQUIRE(r.effect);
  CHECK(r.effect->cr_high < 1.0);
  CHECK(r.significance_changed);
  CHECK_FALSE(r.significance_changed_strict);
  CHECK_FALSE(sweep(a, grid, {.decision_digits = std::nullopt})[0].significance_changed);
}

TEST_CASE("gamma ratio normalizations") {
  const auto m = gamma_ratio_model(1.1, 2.0, 1.05, GammaNormalization::TreatedMean);
  CHECK(m.treated.mean() == doctest::Approx(1.0));
  CHECK(m.control.mean() == doctest::Approx(1.1));
  CHECK(m.treated.second == 2.0);
  const auto s = gamma_ratio_model(1.1, 2.0, 1.05, GammaNormalization::TreatedShape);
  CHECK(s.treated.first == doctest::Approx(1.0));
  CHECK(s.control.mean() / s.treated.mean() == doctest::Approx(1.1));
  const ApparentEffect a{std::log(0.873), 0.04872, 0.95};
  CHECK(std::round(adjust_effect(a, m).cost_ratio * 100) / 100 == 0.88);
  CHECK(parse_normalization("TREATED-SHAPE") == GammaNormalization::TreatedShape);
}

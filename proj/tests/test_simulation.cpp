#include <cmath>

#include "costsens/censoring.hpp"
#include "costsens/data.hpp"
#include "costsens/error.hpp"
#include "costsens/simulation.hpp"
#include "costsens/stats.hpp"
#include "doctest.h"

using namespace costsens;
using namespace costsens::sim;

namespace {

CIScenario bernoulli_cell(double gamma, double censor = 0.0) {
  CIScenario s;
  s.name = "cell";
  s.confounder = ci_preset("ci-bernoulli", gamma);
  s.censor_prob = censor;
  return s;
}

}  // namespace

TEST_CASE("conditionally independent draws are deterministic and balanced") {
  const auto s = bernoulli_cell(0.5);
  const auto a = generate_ci_dataset(s, 5, 3), b = generate_ci_dataset(s, 5, 3), c = generate_ci_dataset(s, 5, 4);
  CHECK(format_dataset(a.data) == format_dataset(b.data));
  CHECK(format_dataset(a.data) != format_dataset(c.data));
  CHECK(a.data.count_arm(0) == 100);
  CHECK(a.data.count_arm(1) == 100);
  CHECK(a.u.size() == 200);
  CHECK(a.data.count_uncensored() == 200);
  for (double w : ipw_weights(a.data)) CHECK(w == 1.0);
}

TEST_CASE("censoring probability controls the censored share") {
  auto s = bernoulli_cell(0.5, 0.25);
  s.n_per_arm = 2000;
  const auto d = generate_ci_dataset(s, 8, 0).data;
  CHECK(std::abs(d.censoring_rate() - 0.25) < 3 * std::sqrt(0.25 * 0.75 / 4000));
}

TEST_CASE("no confounding leaves the reduced model unbiased") {
  auto s = bernoulli_cell(0.0);
  StudyOptions o;
  o.replications = 200;
  o.seed = 99;
  const auto r = run_study(s, o);
  CHECK(r.correction == 0.0);
  CHECK(std::abs(r.mean_beta_unadjusted - 1.0) < 3 * r.mc_standard_error);
}

TEST_CASE("IPW estimator is unbiased under independent censoring") {
  auto s = bernoulli_cell(0.0, 0.25);
  s.n_per_arm = 500;
  StudyOptions o;
  o.replications = 200;
  o.seed = 31;
  const auto r = run_study(s, o);
  CHECK(std::abs(r.mean_beta_unadjusted - 1.0) < 3 * r.mc_standard_error);
}

TEST_CASE("adjustment centers a confounded cell") {
  StudyOptions o;
  o.replications = 300;
  o.seed = 12;
  const auto r = run_study(bernoulli_cell(0.5), o);
  CHECK(r.mean_beta_unadjusted > 1.1);
  CHECK(std::abs(r.mean_beta_adjusted - 1.0) < 3 * r.mc_standard_error);
  CHECK(r.coverage_adjusted > 0.9);
}

TEST_CASE("studies do not depend on the worker count") {
  StudyOptions o;
  o.replications = 40;
  o.seed = 4;
  auto s = bernoulli_cell(0.25, 0.25);
  const auto a = run_study(s, o);
  o.workers = 8;
  const auto b = run_study(s, o);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].beta_star == b.records[i].beta_star);
    CHECK(a.records[i].se == b.records[i].se);
  }
  CHECK(a.mean_beta_adjusted == b.mean_beta_adjusted);
  CHECK(a.coverage_adjusted == b.coverage_adjusted);
}

TEST_CASE("a single replication is reproducible") {
  StudyOptions o;
  o.replications = 1;
  o.seed = 2;
  const auto a = run_study(bernoulli_cell(0.25), o), b = run_study(bernoulli_cell(0.25), o);
  CHECK(a.mean_beta_adjusted == b.mean_beta_adjusted);
  CHECK(a.records.size() == 1);
}

TEST_CASE("dependent design: independent treatment keeps corr(U, Z) near 0.1") {
  CDScenario s;
  s.family = ConfounderFamily::Normal;
  s.n = 10000;
  const auto d = generate_cd_dataset(s, 21, 0);
  std::vector<double> z;
  for (const auto& r : d.data.records()) z.push_back(r.covariates[0]);
  const double r = pearson(z, d.u);
  const double population = 0.1 / std::sqrt(1.0 + 0.01);
  CHECK(std::abs(r - population) < 3.0 / std::sqrt(10000.0));
}

TEST_CASE("dependent design with no confounding is unbiased for both estimators") {
  CDScenario s;
  s.family = ConfounderFamily::Bernoulli;
  s.phi1 = -1;
  s.phi2 = 1;
  StudyOptions o;
  o.replications = 200;
  o.seed = 6;
  const auto r = run_study(s, o);
  CHECK(std::abs(r.mean_beta_unadjusted - 1.0) < 3 * r.mc_standard_error);
  CHECK(std::abs(r.mean_beta_adjusted - 1.0) < 3 * r.mc_standard_error);
}

TEST_CASE("marginal laws for dependent designs") {
  CDScenario s;
  s.family = ConfounderFamily::Bernoulli;
  s.phi1 = -1;
  s.phi2 = 1;
  s.phi3 = 2;
  s.gamma = 0.75;
  const auto m = cd_marginal_model(s);
  CHECK(m.control.first == doctest::Approx(0.35907).epsilon(1e-4));
  CHECK(m.treated.first == doctest::Approx(0.78295).epsilon(1e-4));
  CHECK(m.gamma_control == 0.75);
  s.phi3 = 0;
  s.phi2 = 0;
  const auto flat = cd_marginal_model(s);
  CHECK(flat.control.first == doctest::Approx(flat.treated.first).epsilon(1e-12));
  for (auto f : {ConfounderFamily::Normal, ConfounderFamily::Poisson, ConfounderFamily::Gamma}) {
    s.family = f;
    s.phi3 = 1;
    const auto mm = cd_marginal_model(s);
    CHECK(mm.treated.mean() > mm.control.mean());
  }
}

TEST_CASE("conditional-independence presets") {
  CHECK(ci_preset("ci-bernoulli", 0.5).treated.first == 0.866);
  CHECK(ci_preset("ci-gamma", 1).control == ConfounderLaw::gamma(0.5, 0.75));
  CHECK(ci_preset("ci-gamma-common-shape", 1).treated == ConfounderLaw::gamma(0.75, 0.868));
  CHECK_THROWS_AS(ci_preset("nope", 1), Error);
  CHECK(ci_preset_names().size() == 5);
}

TEST_CASE("scenario files expand lists and reject unknown keys") {
  const auto v = parse_scenario_config("[scenario]\nname = b\npreset = ci-bernoulli\ngamma = 0.25, 0.5\n"
                                       "censor_prob = 0, 0.75\n[scenario]\nkind = cd\nfamily = gamma\nphi3 = 1\n");
  REQUIRE(v.size() == 5);
  CHECK(scenario_name(v[0]) == "b gamma=0.25 censor_prob=0");
  CHECK(scenario_censor_prob(v[3]) == 0.75);
  CHECK(std::holds_alternative<CDScenario>(v[4]));
  try {
    parse_scenario_config("[scenario]\npreset = ci-normal\ngamma = 1\nwidth = 3\ndepth = 2\n");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
    CHECK(std::string(e.what()).find("width") != std::string::npos);
    CHECK(std::string(e.what()).find("depth") != std::string::npos);
  }
}

TEST_CASE("propensity correlation study") {
  PropensityStudyOptions o;
  o.replications = 40;
  o.seed = 3;
  o.model = CorrelationModelKind::Custom;
  o.correlations = {0.0, 0.0, 0.0};
  o.phi = {-1.0, 1.0, 0.0};  // U unrelated to Z and to treatment
  const auto flat = propensity_correlation_study(o);
  CHECK(flat.correction == doctest::Approx(0.0));
  CHECK(std::abs(flat.mean_corr_treated) < 0.03);
  CHECK(std::abs(flat.mean_corr_control) < 0.03);
  CHECK(std::abs(flat.bias_adjusted) < 3 * flat.mc_standard_error);

  // When U also drives treatment, selection on X makes U and Z dependent
  // within each arm even though they are independent overall.
  o.phi = {-1.0, 1.0, 1.0};
  const auto collider = propensity_correlation_study(o);
  CHECK(collider.mean_corr_treated < -0.05);
  CHECK(collider.mean_corr_control < -0.05);

  o.model = CorrelationModelKind::Model1;
  const auto m1 = propensity_correlation_study(o);
  CHECK(std::abs(m1.bias_adjusted) < 0.03);

  o.model = CorrelationModelKind::Custom;
  o.correlations = {0.7, 0.7, 0.7};
  try {
    propensity_correlation_study(o);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CorrelationModel);
  }
}

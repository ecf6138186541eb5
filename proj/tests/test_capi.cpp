// Exercises the shared library through its C header only.
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "costsens/costsens.h"
#include "doctest.h"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  cs_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("status names and error messages") {
  CHECK(std::string(cs_status_name(CS_OK)) == "ok");
  CHECK(std::string(cs_status_name(CS_MGF_DOMAIN)) == "mgf-domain");
  cs_dataset* d = nullptr;
  CHECK(cs_dataset_load("/no/such/file.csv", nullptr, &d) == CS_INPUT_NOT_FOUND);
  CHECK(d == nullptr);
  CHECK(std::strlen(cs_last_error_message()) > 0);
  CHECK(cs_dataset_load(nullptr, nullptr, &d) == CS_INVALID_ARGUMENT);
}

TEST_CASE("dataset parsing, shifting and fitting") {
  const char* csv =
      "cost,time,event,treat,z\n0,1,1,0,0.1\n2,2,1,0,0.4\n3,3,0,0,0.2\n5,1,1,1,0.3\n8,2,1,1,0.9\n"
      "4,4,1,1,0.5\n1,3,1,0,0.7\n7,5,1,1,0.2\n";
  cs_dataset* d = nullptr;
  REQUIRE(cs_dataset_parse(csv, nullptr, &d) == CS_OK);
  CHECK(cs_dataset_size(d) == 8);
  CHECK(cs_dataset_covariate_count(d) == 1);
  CHECK(cs_dataset_count_treated(d) == 4);
  CHECK(cs_dataset_count_zero_cost(d) == 1);
  CHECK(cs_dataset_censoring_rate(d) == doctest::Approx(0.125));

  cs_dataset* shifted = nullptr;
  REQUIRE(cs_dataset_shift_zero(d, &shifted) == CS_OK);
  CHECK(cs_dataset_count_zero_cost(shifted) == 0);

  double w[8];
  REQUIRE(cs_ipw_weights(d, 0, w, 8) == CS_OK);
  CHECK(w[2] == 0.0);
  CHECK(cs_ipw_weights(d, 0, w, 7) == CS_INVALID_ARGUMENT);

  cs_fit* fit = nullptr;
  cs_fit_options o = cs_fit_options_default();
  REQUIRE(cs_fit_cost(shifted, &o, &fit) == CS_OK);
  CHECK(cs_fit_converged(fit));
  CHECK(cs_fit_coefficient_count(fit) == 3);
  double b = 0, se = 0;
  REQUIRE(cs_fit_treatment(fit, &b, &se) == CS_OK);
  CHECK(std::isfinite(b));
  CHECK(se > 0);
  CHECK(cs_fit_coefficient(fit, 3, &b, &se) == CS_INVALID_ARGUMENT);
  const std::string table = take([&] {
    char* s = nullptr;
    cs_fit_render(fit, CS_FORMAT_TABLE, &s);
    return s;
  }());
  CHECK(table.find("treat") != std::string::npos);
  cs_fit_free(fit);
  cs_dataset_free(shifted);
  cs_dataset_free(d);
}

TEST_CASE("log-MGF and adjustment through the C interface") {
  double v = 0;
  REQUIRE(cs_log_mgf(CS_BERNOULLI, 0.5, 0, std::log(2.0), &v) == CS_OK);
  CHECK(v == doctest::Approx(std::log(1.5)));
  CHECK(cs_log_mgf(CS_GAMMA, 1, 1, 1, &v) == CS_MGF_DOMAIN);

  cs_family f;
  REQUIRE(cs_family_from_name("Poisson", &f) == CS_OK);
  CHECK(f == CS_POISSON);

  double beta_star = 0, se = 0;
  REQUIRE(cs_apparent_from_ci(0.873, 0.793, 0.960, 0.95, &beta_star, &se) == CS_OK);
  cs_confounder c{CS_POISSON, {19, 0}, {11, 0}, std::log(1.005), std::log(1.005)};
  cs_adjusted a;
  REQUIRE(cs_adjust(beta_star, se, 0.95, &c, &a) == CS_OK);
  CHECK(std::round(a.cost_ratio * 100) == 91);
  CHECK(a.se == se);
}

TEST_CASE("grid from pairs and sweep rows") {
  cs_grid* g = nullptr;
  REQUIRE(cs_grid_from_pairs("bernoulli", "pi0=0.7;pi1=0.5 effect=1.1,1.5", nullptr, &g) == CS_OK);
  CHECK(cs_grid_size(g) == 2);
  CHECK_FALSE(cs_grid_apparent(g, nullptr, nullptr, nullptr));
  cs_sweep* s = nullptr;
  REQUIRE(cs_sweep_run(g, std::log(0.873), 0.04872, 0.95, 2, &s) == CS_OK);
  REQUIRE(cs_sweep_size(s) == 2);
  cs_adjusted a;
  int ok = 0, changed = 0;
  REQUIRE(cs_sweep_row(s, 0, &a, &ok, &changed) == CS_OK);
  CHECK(ok == 1);
  CHECK(changed == 0);
  REQUIRE(cs_sweep_row(s, 1, &a, &ok, &changed) == CS_OK);
  CHECK(changed == 1);
  char* csv = nullptr;
  REQUIRE(cs_sweep_render(s, CS_FORMAT_CSV, &csv) == CS_OK);
  CHECK(take(csv).rfind("label,family", 0) == 0);
  cs_sweep_free(s);
  cs_grid_free(g);

  CHECK(cs_grid_from_pairs("bernoulli", "pi0", nullptr, &g) == CS_CONFIG_ERROR);
  CHECK(cs_grid_parse("[sweep]\nfamily=gamma\n[grid]\nshape0=1\nscale0=1\nshape1=1\nscale1=1\neffect=3\n", &g) == CS_OK);
  REQUIRE(cs_sweep_run(g, 0.1, 0.1, 0.95, -1, &s) == CS_OK);
  REQUIRE(cs_sweep_row(s, 0, &a, &ok, &changed) == CS_OK);
  CHECK(ok == 0);
  CHECK(std::isnan(a.beta));
  cs_sweep_free(s);
  cs_grid_free(g);
}

TEST_CASE("study runs through opaque handles") {
  cs_scenario_set* set = nullptr;
  REQUIRE(cs_scenario_set_parse("[scenario]\npreset = ci-bernoulli\ngamma = 0.25\n", &set) == CS_OK);
  CHECK(cs_scenario_set_size(set) == 1);
  cs_study_options o = cs_study_options_default();
  o.replications = 20;
  o.seed = 5;
  cs_study* st = nullptr;
  REQUIRE(cs_study_run(set, &o, &st) == CS_OK);
  cs_study_summary sum;
  REQUIRE(cs_study_summary_at(st, 0, &sum) == CS_OK);
  CHECK(sum.replications == 20);
  CHECK(std::isnan(sum.mean_beta_true_model));
  char* reps = nullptr;
  REQUIRE(cs_study_render_replications(st, &reps) == CS_OK);
  CHECK(take(reps).find('\n') != std::string::npos);
  cs_study_free(st);
  o.variance = 7;
  CHECK(cs_study_run(set, &o, &st) == CS_INVALID_ARGUMENT);
  cs_scenario_set_free(set);
}

TEST_CASE("diagnostics through the C interface") {
  cs_dataset* d = nullptr;
  REQUIRE(cs_synth_cohort(3, &d) == CS_OK);
  CHECK(cs_dataset_size(d) == 1860);
  std::vector<double> ps(cs_dataset_size(d));
  REQUIRE(cs_propensity_scores(d, ps.data(), ps.size()) == CS_OK);
  for (double p : ps) CHECK((p > 0 && p < 1));
  cs_report* r = nullptr;
  cs_diag_options o = cs_diag_options_default();
  REQUIRE(cs_diagnose(d, &o, &r) == CS_OK);
  CHECK(cs_report_size(r) == cs_dataset_covariate_count(d));
  char* text = nullptr;
  REQUIRE(cs_report_render(r, CS_FORMAT_TABLE, &text) == CS_OK);
  CHECK(!take(text).empty());
  cs_report_free(r);
  cs_dataset_free(d);
}

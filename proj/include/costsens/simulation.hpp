#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "costsens/data.hpp"
#include "costsens/sensitivity.hpp"

namespace costsens::sim {

/// U independent of Z given X. U ~ confounder.control / .treated per arm,
/// Z ~ Normal(arm, 1), mean cost exp(alpha + beta X + gamma U + theta Z).
struct CIScenario {
  std::string name;
  std::size_t n_per_arm = 100;
  ConfounderModel confounder;  // gamma_control == gamma_treated == gamma
  double alpha = 5.0;
  double beta = 1.0;
  double theta = 1.0;
  double censor_prob = 0.0;
};

/// U depends on Z ~ Normal(1, 1):
///   bernoulli  P(U=1|z) = expit(0.5 + 0.2 z)
///   normal     U|z ~ Normal(1 + 0.1 z, 1)
///   poisson    U|z ~ Poisson(max(0.9 + 0.1 z, 0))
///   gamma      U|z ~ Gamma(shape 0.5, scale 0.65 + 0.2 |z|)
/// and X ~ Bernoulli(expit(phi1 + phi2 z + phi3 u)).
struct CDScenario {
  std::string name;
  ConfounderFamily family = ConfounderFamily::Bernoulli;
  double phi1 = 0.0;
  double phi2 = 0.0;
  double phi3 = 0.0;
  std::size_t n = 500;
  double gamma = 0.0;
  double alpha = 5.0;
  double beta = 1.0;
  double theta = 1.0;
  double censor_prob = 0.0;
};

using Scenario = std::variant<CIScenario, CDScenario>;

const std::string& scenario_name(const Scenario& s);
double scenario_beta(const Scenario& s);
double scenario_censor_prob(const Scenario& s);
/// Throws Error{InvalidArgument} when a field is out of range.
void validate_scenario(const Scenario& s);

struct SimulatedData {
  CostDataset data;           // covariate "z"
  std::vector<double> u;      // unmeasured confounder, aligned with records
  std::size_t regenerations = 0;
};

/// Deterministic in (scenario, seed, replication). Records: n control then n treated.
SimulatedData generate_ci_dataset(const CIScenario& scenario, std::uint64_t seed, std::uint64_t replication);

/// Deterministic in (scenario, seed, replication). A draw with an empty arm is
/// redrawn from the next stream and counted in `regenerations`.
SimulatedData generate_cd_dataset(const CDScenario& scenario, std::uint64_t seed, std::uint64_t replication);

/// Per-arm confounder laws used to adjust a CD scenario, matched on
/// E[U | X = x] by quadrature over Z (and over U where it is continuous).
/// Bernoulli gives the exact per-arm law; Normal keeps sd 1; Gamma keeps
/// shape 0.5.
ConfounderModel cd_marginal_model(const CDScenario& scenario);

/// The model used to adjust the reduced-model estimate.
ConfounderModel adjustment_model(const Scenario& scenario);

enum class VarianceChoice {
  Auto,      // model-based for the plain GLM (no censoring), sandwich for IPW
  Sandwich,
  Model,
};

VarianceChoice parse_variance(const std::string& name);
std::string_view variance_name(VarianceChoice v) noexcept;

struct StudyOptions {
  std::size_t replications = 1000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  VarianceChoice variance = VarianceChoice::Auto;
  double level = 0.95;
  bool stratified_censoring = false;
  bool fit_true_model = false;  // also fit [1, X, Z, U]
};

struct ReplicationRecord {
  std::size_t replication = 0;
  bool converged = false;
  double beta_star = 0.0;
  double se = 0.0;
  double beta_adjusted = 0.0;
  bool covered_unadjusted = false;
  bool covered_adjusted = false;
  double corr_treated = 0.0;  // Pearson corr(U, Z) within X = 1
  double corr_control = 0.0;  // within X = 0
  double max_abs_corr = 0.0;
  bool true_converged = false;
  double beta_true_model = 0.0;
  std::size_t regenerations = 0;
};

struct SimulationResult {
  std::string scenario;
  std::size_t replications = 0;
  std::size_t converged = 0;
  std::size_t convergence_failures = 0;
  double correction = 0.0;  // ln M_control(gamma) - ln M_treated(gamma)
  double mean_beta_unadjusted = 0.0;
  double mean_beta_adjusted = 0.0;
  double bias_unadjusted = 0.0;  // mean - beta (absolute; relative when beta = 1)
  double bias_adjusted = 0.0;
  double coverage_unadjusted = 0.0;
  double coverage_adjusted = 0.0;
  double sd_beta_adjusted = 0.0;
  double mean_se = 0.0;
  double mc_standard_error = 0.0;  // of mean_beta_adjusted
  double mean_corr_treated = 0.0;
  double mean_corr_control = 0.0;
  double max_within_stratum_corr = 0.0;  // larger of |mean corr| over the two strata
  std::size_t regenerations = 0;
  std::size_t true_model_converged = 0;
  double mean_beta_true_model = 0.0;
  double mc_se_true_model = 0.0;
  std::vector<ReplicationRecord> records;
};

/// Replications run on `workers` threads and are reduced in index order, so
/// the result does not depend on the worker count.
SimulationResult run_study(const Scenario& scenario, const StudyOptions& options);

/// Named conditional-independence parameter sets: ci-bernoulli, ci-normal,
/// ci-poisson, ci-gamma, ci-gamma-common-shape.
ConfounderModel ci_preset(const std::string& name, double gamma);
std::vector<std::string> ci_preset_names();

/// Scenario file: one or more [scenario] sections. Keys: name, kind (ci|cd),
/// preset, family, family parameters as in sweep grids, gamma, n, censor_prob,
/// alpha, beta, theta, phi1, phi2, phi3. Comma lists expand as in grids.
std::vector<Scenario> parse_scenario_config(const std::string& text);
std::vector<Scenario> load_scenario_config(const std::filesystem::path& path);

// --- propensity-score correlation study ---

enum class CorrelationModelKind { Model1, Model2, Custom };

struct PropensityStudyOptions {
  CorrelationModelKind model = CorrelationModelKind::Model1;
  std::array<double, 3> correlations{0.1, 0.1, 0.1};  // corr(U, Z_j); used when model == Custom
  std::size_t n = 1000;
  std::size_t replications = 200;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  double gamma = 0.5;
  std::array<double, 3> phi{-1.0, 1.0, 1.0};  // X ~ expit(phi1 + phi2 (Z1+Z2+Z3) + phi3 U)
};

struct PropensityStudyResult {
  std::array<double, 3> correlations{};
  std::size_t replications = 0;
  std::size_t failures = 0;
  double correction = 0.0;
  double mean_corr_treated = 0.0;  // corr(U, fitted propensity) within X = 1
  double mean_corr_control = 0.0;
  double mean_beta_unadjusted = 0.0;
  double mean_beta_adjusted = 0.0;
  double bias_unadjusted = 0.0;
  double bias_adjusted = 0.0;
  double mc_standard_error = 0.0;
};

/// (U, Z1, Z2, Z3) multivariate normal with unit variances, Z means 1, U mean 0
/// and the Z_j mutually uncorrelated. Throws Error{CorrelationModel} when the
/// implied correlation matrix is not positive definite.
PropensityStudyResult propensity_correlation_study(const PropensityStudyOptions& options);

// --- synthetic registry-like data ---

/// 1860 records, 1440 controls, 725 censored, two zero costs; indicator
/// covariates for grade, sex, race, ethnicity, marital status, urban category,
/// comorbidities and registry site plus age, tract income and diagnosis year.
/// The treatment log cost ratio is ln 0.873.
CostDataset synth_registry_cohort(std::uint64_t seed);

}  // namespace costsens::sim

#pragma once

#include <span>
#include <string>
#include <vector>

#include "costsens/data.hpp"
#include "costsens/glm.hpp"

namespace costsens {

/// Right-continuous step function starting at 1.
class StepSurvival {
 public:
  StepSurvival() = default;
  StepSurvival(std::vector<double> jump_times, std::vector<double> values);

  /// Value after the last jump at or before t; 1 before the first jump.
  double operator()(double t) const;

  const std::vector<double>& jump_times() const noexcept { return times_; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::vector<double> times_;
  std::vector<double> values_;
};

/// Kaplan-Meier estimate of the censoring survival function K(t): censorings
/// are the events. Failures tied with censorings at t stay in the risk set
/// for the censoring jump at t.
StepSurvival km_censoring_survival(std::span<const double> times, std::span<const bool> uncensored);

/// w_i = delta_i / K(T_i). `stratified` estimates K separately per arm.
std::vector<double> ipw_weights(const CostDataset& dataset, bool stratified = false);

struct CostFitOptions {
  bool ipw = true;
  bool stratified_censoring = false;
  double tolerance = glm::kDefaultTolerance;
  int max_iterations = glm::kDefaultMaxIterations;
};

/// Design [1, X, Z] with LogGamma family and unit weights.
glm::DesignSpec cost_design(const CostDataset& dataset);

/// Coefficient labels matching cost_design: "(intercept)", "treat", covariates.
std::vector<std::string> cost_coefficient_names(const CostDataset& dataset);

/// Log-link Gamma GLM for cost; with options.ipw the records are weighted by
/// inverse probability of censoring. The sandwich is FitResult::covariance.
glm::FitResult fit_censored_cost(const CostDataset& dataset, const CostFitOptions& options = {});

}  // namespace costsens

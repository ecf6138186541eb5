#pragma once

#include <string>
#include <vector>

#include "costsens/data.hpp"

namespace costsens::diag {

/// Fitted Pr(X = 1 | Z) from a logit-link fit of treatment on [1, Z].
/// `columns` selects covariates by index; empty means all. Throws
/// Error{Separation} naming the separating covariate direction.
std::vector<double> propensity_scores(const CostDataset& dataset, const std::vector<std::size_t>& columns = {});

enum class CorrelationMethod { Pearson, Spearman };

struct DiagnosticOptions {
  CorrelationMethod method = CorrelationMethod::Pearson;
  double threshold = 0.15;  // flag when a within-stratum score correlation exceeds this in magnitude
};

/// Correlations of one covariate with the propensity score fitted without it,
/// overall and within each arm, and its largest-magnitude correlation (signed)
/// with any single other covariate within each arm. NaN marks an undefined
/// cell (fewer than 3 records or no variation in the stratum).
///
/// Indicator columns named "col=level" are treated as one variable: all
/// levels of the same column leave the propensity model together and are not
/// compared with each other.
struct CorrelationReport {
  std::string covariate;
  double corr_unconditional = 0.0;
  double corr_treated = 0.0;
  double corr_control = 0.0;
  double largest_individual_treated = 0.0;
  double largest_individual_control = 0.0;
  std::string largest_partner_treated;
  std::string largest_partner_control;
  bool flagged = false;
};

CorrelationReport loo_correlation_report(const CostDataset& dataset, const std::string& covariate,
                                         const DiagnosticOptions& options = {});

/// One report per covariate, in dataset order.
std::vector<CorrelationReport> loo_correlation_table(const CostDataset& dataset, const DiagnosticOptions& options = {});

/// Variable group of a covariate label: the text before '=' for indicator columns.
std::string covariate_group(const std::string& label);

}  // namespace costsens::diag

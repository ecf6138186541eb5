#include "costsens/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "costsens/error.hpp"
#include "costsens/glm.hpp"
#include "costsens/stats.hpp"

namespace costsens::diag {

namespace {

std::vector<double> covariate_column(const CostDataset& d, std::size_t j) {
  std::vector<double> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = d[i].covariates[j];
  return out;
}

std::vector<double> subset(const std::vector<double>& v, const CostDataset& d, int arm) {
  std::vector<double> out;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i].treatment == arm) out.push_back(v[i]);
  return out;
}

double correlate(const std::vector<double>& x, const std::vector<double>& y, CorrelationMethod method) {
  return method == CorrelationMethod::Pearson ? pearson(x, y) : spearman(x, y);
}

/// Single covariate whose ranges in the two arms do not overlap.
void check_univariate_separation(const CostDataset& d, const std::vector<std::size_t>& columns) {
  for (std::size_t j : columns) {
    double lo[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    double hi[2] = {-lo[0], -lo[0]};
    for (const auto& r : d.records()) {
      lo[r.treatment] = std::min(lo[r.treatment], r.covariates[j]);
      hi[r.treatment] = std::max(hi[r.treatment], r.covariates[j]);
    }
    const std::string& name = d.covariate_names()[j];
    if (std::min(lo[0], lo[1]) == std::max(hi[0], hi[1])) continue;  // constant: a design problem, not separation
    if (hi[0] <= lo[1])
      fail(ErrorCode::Separation, "treatment is separated by covariate '" + name + "': higher " + name +
                                      " predicts treatment (+" + name + " direction)");
    if (hi[1] <= lo[0])
      fail(ErrorCode::Separation, "treatment is separated by covariate '" + name + "': lower " + name +
                                      " predicts treatment (-" + name + " direction)");
  }
}

}  // namespace

std::string covariate_group(const std::string& label) {
  const auto eq = label.find('=');
  return eq == std::string::npos ? label : label.substr(0, eq);
}

std::vector<double> propensity_scores(const CostDataset& d, const std::vector<std::size_t>& requested) {
  if (d.empty()) fail(ErrorCode::EmptyDataset, "dataset has no records");
  if (d.count_arm(0) == 0 || d.count_arm(1) == 0)
    fail(ErrorCode::InvalidArgument, "propensity scores need records in both arms");
  std::vector<std::size_t> columns = requested;
  if (columns.empty()) {
    columns.resize(d.covariate_count());
    std::iota(columns.begin(), columns.end(), std::size_t{0});
  }
  for (std::size_t j : columns)
    if (j >= d.covariate_count()) fail(ErrorCode::InvalidArgument, "covariate index out of range");
  check_univariate_separation(d, columns);

  const auto n = static_cast<Eigen::Index>(d.size());
  glm::DesignSpec spec;
  spec.family = glm::Family::LogitBinomial;
  spec.response.resize(n);
  spec.weights = Eigen::VectorXd::Ones(n);
  spec.design.resize(n, static_cast<Eigen::Index>(columns.size()) + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = d[static_cast<std::size_t>(i)];
    spec.response[i] = r.treatment;
    spec.design(i, 0) = 1.0;
    for (std::size_t k = 0; k < columns.size(); ++k)
      spec.design(i, static_cast<Eigen::Index>(k) + 1) = r.covariates[columns[k]];
  }
  const glm::FitResult fit = glm::irls_fit(spec);
  const Eigen::VectorXd eta = spec.design * fit.coefficients;

  std::size_t perfect = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if ((spec.response[i] == 1 && eta[i] > 15) || (spec.response[i] == 0 && eta[i] < -15)) ++perfect;
  if (!fit.converged || perfect == static_cast<std::size_t>(n)) {
    // Direction of the diverging coefficients, scaled by covariate spread.
    std::size_t best = 0;
    double best_size = -1.0;
    for (std::size_t k = 0; k < columns.size(); ++k) {
      const double size = std::abs(fit.coefficients[static_cast<Eigen::Index>(k) + 1]) *
                          sample_sd(covariate_column(d, columns[k]));
      if (size > best_size) { best_size = size; best = k; }
    }
    const std::string& name = d.covariate_names()[columns.empty() ? 0 : columns[best]];
    const char sign = fit.coefficients[static_cast<Eigen::Index>(best) + 1] >= 0 ? '+' : '-';
    fail(ErrorCode::Separation, "propensity model does not converge: treatment is (quasi-)separated by a linear "
                                "combination of covariates, dominated by the " +
                                    std::string(1, sign) + name + " direction" +
                                    (fit.message.empty() ? "" : " (" + fit.message + ")"));
  }
  std::vector<double> scores(d.size());
  for (Eigen::Index i = 0; i < n; ++i) scores[static_cast<std::size_t>(i)] = 1.0 / (1.0 + std::exp(-eta[i]));
  return scores;
}

CorrelationReport loo_correlation_report(const CostDataset& d, const std::string& covariate,
                                         const DiagnosticOptions& options) {
  const auto index = d.covariate_index(covariate);
  if (!index) fail(ErrorCode::InvalidArgument, "unknown covariate '" + covariate + "'");
  if (d.covariate_count() < 2) fail(ErrorCode::InvalidArgument, "leave-one-out diagnostics need at least 2 covariates");
  if (d.count_arm(0) == 0 || d.count_arm(1) == 0) fail(ErrorCode::InvalidArgument, "both arms need records");

  const std::string group = covariate_group(covariate);
  std::vector<std::size_t> others;
  for (std::size_t j = 0; j < d.covariate_count(); ++j)
    if (covariate_group(d.covariate_names()[j]) != group) others.push_back(j);
  if (others.empty()) fail(ErrorCode::InvalidArgument, "no covariates remain after leaving out '" + group + "'");

  const std::vector<double> score = propensity_scores(d, others);
  const std::vector<double> z = covariate_column(d, *index);

  CorrelationReport rep;
  rep.covariate = covariate;
  rep.corr_unconditional = correlate(z, score, options.method);
  rep.corr_treated = correlate(subset(z, d, 1), subset(score, d, 1), options.method);
  rep.corr_control = correlate(subset(z, d, 0), subset(score, d, 0), options.method);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int arm : {1, 0}) {
    const std::vector<double> zs = subset(z, d, arm);
    double best = nan;
    std::string partner;
    for (std::size_t j : others) {
      const double r = correlate(zs, subset(covariate_column(d, j), d, arm), options.method);
      if (std::isnan(r)) continue;
      if (std::isnan(best) || std::abs(r) > std::abs(best)) {
        best = r;
        partner = d.covariate_names()[j];
      }
    }
    (arm == 1 ? rep.largest_individual_treated : rep.largest_individual_control) = best;
    (arm == 1 ? rep.largest_partner_treated : rep.largest_partner_control) = partner;
  }
  auto exceeds = [&](double r) { return !std::isnan(r) && std::abs(r) > options.threshold; };
  rep.flagged = exceeds(rep.corr_treated) || exceeds(rep.corr_control);
  return rep;
}

std::vector<CorrelationReport> loo_correlation_table(const CostDataset& d, const DiagnosticOptions& options) {
  std::vector<CorrelationReport> out;
  out.reserve(d.covariate_count());
  for (const auto& name : d.covariate_names()) out.push_back(loo_correlation_report(d, name, options));
  return out;
}

}  // namespace costsens::diag

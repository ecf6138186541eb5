#include "costsens/censoring.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "costsens/error.hpp"

namespace costsens {

StepSurvival::StepSurvival(std::vector<double> jump_times, std::vector<double> values)
    : times_(std::move(jump_times)), values_(std::move(values)) {
  if (times_.size() != values_.size()) fail(ErrorCode::InvalidArgument, "jump times and values differ in length");
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1])) fail(ErrorCode::InvalidArgument, "jump times must be strictly increasing");
    if (values_[i] > values_[i - 1]) fail(ErrorCode::InvalidArgument, "survival values must be non-increasing");
  }
}

double StepSurvival::operator()(double t) const {
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 1.0;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

StepSurvival km_censoring_survival(std::span<const double> times, std::span<const bool> uncensored) {
  if (times.size() != uncensored.size()) fail(ErrorCode::InvalidArgument, "times and indicators differ in length");
  if (times.empty()) fail(ErrorCode::EmptyDataset, "no records for Kaplan-Meier estimation");
  for (double t : times)
    if (!(t > 0.0) || !std::isfinite(t)) fail(ErrorCode::InvalidArgument, "times must be finite and > 0");

  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

  std::vector<double> jump_times;
  std::vector<double> values;
  double survival = 1.0;
  std::size_t at_risk = times.size();
  for (std::size_t k = 0; k < order.size();) {
    const double t = times[order[k]];
    std::size_t tied = 0;
    std::size_t censored = 0;
    while (k + tied < order.size() && times[order[k + tied]] == t) {
      if (!uncensored[order[k + tied]]) ++censored;
      ++tied;
    }
    if (censored > 0) {
      survival *= 1.0 - static_cast<double>(censored) / static_cast<double>(at_risk);
      jump_times.push_back(t);
      values.push_back(survival);
    }
    at_risk -= tied;
    k += tied;
  }
  return StepSurvival(std::move(jump_times), std::move(values));
}

namespace {

void assign_weights(const CostDataset& dataset, const std::vector<std::size_t>& members, std::vector<double>& weights) {
  std::vector<double> times;
  std::vector<char> flags;
  times.reserve(members.size());
  flags.reserve(members.size());
  for (std::size_t i : members) {
    times.push_back(dataset[i].time);
    flags.push_back(dataset[i].uncensored ? 1 : 0);
  }
  std::unique_ptr<bool[]> delta(new bool[flags.size()]);
  for (std::size_t k = 0; k < flags.size(); ++k) delta[k] = flags[k] != 0;
  const StepSurvival km = km_censoring_survival(times, std::span<const bool>(delta.get(), flags.size()));

  for (std::size_t i : members) {
    const auto& r = dataset[i];
    if (!r.uncensored) {
      weights[i] = 0.0;
      continue;
    }
    const double k = km(r.time);
    if (!(k > 0.0))
      fail(ErrorCode::ZeroProbability, "censoring survival is zero at the follow-up time of uncensored record " +
                                           std::to_string(i + 1));
    weights[i] = 1.0 / k;
  }
}

}  // namespace

std::vector<double> ipw_weights(const CostDataset& dataset, bool stratified) {
  if (dataset.empty()) fail(ErrorCode::EmptyDataset, "dataset has no records");
  std::vector<double> weights(dataset.size(), 0.0);
  if (!stratified) {
    std::vector<std::size_t> all(dataset.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    assign_weights(dataset, all, weights);
    return weights;
  }
  for (int arm : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < dataset.size(); ++i)
      if (dataset[i].treatment == arm) members.push_back(i);
    if (!members.empty()) assign_weights(dataset, members, weights);
  }
  return weights;
}

glm::DesignSpec cost_design(const CostDataset& dataset) {
  const auto n = static_cast<Eigen::Index>(dataset.size());
  const auto k = static_cast<Eigen::Index>(dataset.covariate_count());
  glm::DesignSpec spec;
  spec.family = glm::Family::LogGamma;
  spec.response.resize(n);
  spec.weights = Eigen::VectorXd::Ones(n);
  spec.design.resize(n, k + 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = dataset[static_cast<std::size_t>(i)];
    spec.response[i] = r.cost;
    spec.design(i, 0) = 1.0;
    spec.design(i, 1) = r.treatment;
    for (Eigen::Index j = 0; j < k; ++j) spec.design(i, j + 2) = r.covariates[static_cast<std::size_t>(j)];
  }
  return spec;
}

std::vector<std::string> cost_coefficient_names(const CostDataset& dataset) {
  std::vector<std::string> names{"(intercept)", "treat"};
  names.insert(names.end(), dataset.covariate_names().begin(), dataset.covariate_names().end());
  return names;
}

glm::FitResult fit_censored_cost(const CostDataset& dataset, const CostFitOptions& options) {
  if (dataset.empty()) fail(ErrorCode::EmptyDataset, "dataset has no records");
  if (dataset.count_arm(0) == 0 || dataset.count_arm(1) == 0)
    fail(ErrorCode::InvalidArgument, "both treatment arms need at least one record");

  glm::DesignSpec spec = cost_design(dataset);
  if (options.ipw) {
    const auto w = ipw_weights(dataset, options.stratified_censoring);
    spec.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  }
  return glm::irls_fit(spec, options.tolerance, options.max_iterations);
}

}  // namespace costsens

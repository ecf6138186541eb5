#include "costsens/sensitivity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "costsens/data.hpp"
#include "costsens/error.hpp"
#include "costsens/normal.hpp"

namespace costsens {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

double round_to(double x, int digits) {
  const double scale = std::pow(10.0, digits);
  return std::round(x * scale) / scale;
}

}  // namespace

std::string_view family_name(ConfounderFamily family) noexcept {
  switch (family) {
    case ConfounderFamily::Bernoulli: return "bernoulli";
    case ConfounderFamily::Normal: return "normal";
    case ConfounderFamily::Poisson: return "poisson";
    case ConfounderFamily::Gamma: return "gamma";
  }
  return "unknown";
}

ConfounderFamily parse_family(std::string_view name) {
  const std::string n = lower(name);
  if (n == "bernoulli") return ConfounderFamily::Bernoulli;
  if (n == "normal") return ConfounderFamily::Normal;
  if (n == "poisson") return ConfounderFamily::Poisson;
  if (n == "gamma") return ConfounderFamily::Gamma;
  fail(ErrorCode::Config, "unknown confounder family '" + std::string(name) + "'");
}

double ConfounderLaw::mean() const noexcept {
  switch (family) {
    case ConfounderFamily::Bernoulli:
    case ConfounderFamily::Normal:
    case ConfounderFamily::Poisson: return first;
    case ConfounderFamily::Gamma: return first * second;
  }
  return 0.0;
}

double ConfounderLaw::variance() const noexcept {
  switch (family) {
    case ConfounderFamily::Bernoulli: return first * (1.0 - first);
    case ConfounderFamily::Normal: return second * second;
    case ConfounderFamily::Poisson: return first;
    case ConfounderFamily::Gamma: return first * second * second;
  }
  return 0.0;
}

void ConfounderLaw::validate() const {
  auto bad = [&](const std::string& what) { fail(ErrorCode::InvalidArgument, std::string(family_name(family)) + ": " + what); };
  switch (family) {
    case ConfounderFamily::Bernoulli:
      if (!(first >= 0.0 && first <= 1.0)) bad("prevalence must lie in [0, 1]");
      break;
    case ConfounderFamily::Normal:
      if (!std::isfinite(first)) bad("mean must be finite");
      if (!(second > 0.0) || !std::isfinite(second)) bad("sd must be > 0");
      break;
    case ConfounderFamily::Poisson:
      if (!(first > 0.0) || !std::isfinite(first)) bad("rate must be > 0");
      break;
    case ConfounderFamily::Gamma:
      if (!(first > 0.0) || !std::isfinite(first)) bad("shape must be > 0");
      if (!(second > 0.0) || !std::isfinite(second)) bad("scale must be > 0");
      break;
  }
}

std::string ConfounderLaw::describe() const {
  std::ostringstream os;
  os << family_name(family) << '(';
  switch (family) {
    case ConfounderFamily::Bernoulli: os << "prevalence=" << format_double(first); break;
    case ConfounderFamily::Normal: os << "mean=" << format_double(first) << ", sd=" << format_double(second); break;
    case ConfounderFamily::Poisson: os << "rate=" << format_double(first); break;
    case ConfounderFamily::Gamma: os << "shape=" << format_double(first) << ", scale=" << format_double(second); break;
  }
  os << ')';
  return os.str();
}

double log_mgf(const ConfounderLaw& law, double gamma) {
  law.validate();
  if (!std::isfinite(gamma)) fail(ErrorCode::InvalidArgument, "confounder effect must be finite");
  switch (law.family) {
    case ConfounderFamily::Bernoulli:
      // ln(1 + pi (e^g - 1)) keeps precision for small g.
      return std::log1p(law.first * std::expm1(gamma));
    case ConfounderFamily::Normal:
      return law.first * gamma + 0.5 * law.second * law.second * gamma * gamma;
    case ConfounderFamily::Poisson:
      return law.first * std::expm1(gamma);
    case ConfounderFamily::Gamma: {
      const double t = law.second * gamma;
      if (!(t < 1.0))
        fail(ErrorCode::MgfDomain, "gamma family: scale * effect = " + format_double(t) +
                                       " must be < 1 for the moment generating function to exist");
      return -law.first * std::log1p(-t);
    }
  }
  return 0.0;
}

void ConfounderModel::validate() const {
  if (control.family != treated.family)
    fail(ErrorCode::InvalidArgument, "control and treated confounder laws must share a family");
  control.validate();
  treated.validate();
  if (!std::isfinite(gamma_control) || !std::isfinite(gamma_treated))
    fail(ErrorCode::InvalidArgument, "confounder effects must be finite");
}

ApparentEffect ApparentEffect::from_cost_ratio_ci(double cost_ratio, double ci_low, double ci_high, double level) {
  if (!(cost_ratio > 0.0 && ci_low > 0.0 && ci_high > ci_low))
    fail(ErrorCode::InvalidArgument, "cost ratio interval must satisfy 0 < low < high and ratio > 0");
  const double z = two_sided_z(level);
  return {std::log(cost_ratio), (std::log(ci_high) - std::log(ci_low)) / (2.0 * z), level};
}

AdjustedEffect make_interval(double beta, double se, double level) {
  if (!(se > 0.0) || !std::isfinite(se)) fail(ErrorCode::InvalidArgument, "standard error must be finite and > 0");
  const double z = two_sided_z(level);
  AdjustedEffect out;
  out.beta = beta;
  out.se = se;
  out.ci_low = beta - z * se;
  out.ci_high = beta + z * se;
  out.cost_ratio = std::exp(beta);
  out.cr_low = std::exp(out.ci_low);
  out.cr_high = std::exp(out.ci_high);
  return out;
}

double correction(const ConfounderModel& model) {
  model.validate();
  return log_mgf(model.control, model.gamma_control) - log_mgf(model.treated, model.gamma_treated);
}

AdjustedEffect adjust_effect(const ApparentEffect& apparent, const ConfounderModel& model) {
  if (!std::isfinite(apparent.beta_star)) fail(ErrorCode::InvalidArgument, "apparent effect must be finite");
  model.validate();
  const double treated = log_mgf(model.treated, model.gamma_treated);
  const double control = log_mgf(model.control, model.gamma_control);
  return make_interval(apparent.beta_star - treated + control, apparent.se, apparent.level);
}

bool excludes_null(double cr_low, double cr_high, std::optional<int> digits) {
  if (digits) {
    cr_low = round_to(cr_low, *digits);
    cr_high = round_to(cr_high, *digits);
  }
  return cr_low > 1.0 || cr_high < 1.0;
}

std::vector<SweepRow> sweep(const ApparentEffect& apparent, const std::vector<GridEntry>& grid,
                            const SweepOptions& options) {
  const AdjustedEffect base = make_interval(apparent.beta_star, apparent.se, apparent.level);
  const bool base_sig = excludes_null(base.cr_low, base.cr_high, options.decision_digits);
  const bool base_sig_strict = excludes_null(base.cr_low, base.cr_high, std::nullopt);

  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (const auto& entry : grid) {
    SweepRow row;
    row.entry = entry;
    try {
      const AdjustedEffect adj = adjust_effect(apparent, entry.model);
      row.effect = adj;
      row.significant = excludes_null(adj.cr_low, adj.cr_high, options.decision_digits);
      row.significance_changed = row.significant != base_sig;
      row.significance_changed_strict = excludes_null(adj.cr_low, adj.cr_high, std::nullopt) != base_sig_strict;
    } catch (const Error& e) {
      row.error = std::string(error_code_name(e.code()));
      row.message = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string_view normalization_name(GammaNormalization n) noexcept {
  return n == GammaNormalization::TreatedMean ? "treated-mean" : "treated-shape";
}

GammaNormalization parse_normalization(std::string_view name) {
  const std::string n = lower(name);
  if (n == "treated-mean") return GammaNormalization::TreatedMean;
  if (n == "treated-shape") return GammaNormalization::TreatedShape;
  fail(ErrorCode::Config, "unknown gamma normalization '" + std::string(name) + "' (treated-mean, treated-shape)");
}

ConfounderModel gamma_ratio_model(double mean_ratio, double var_to_mean, double effect,
                                  GammaNormalization normalization) {
  if (!(mean_ratio > 0.0) || !(var_to_mean > 0.0) || !(effect > 0.0))
    fail(ErrorCode::InvalidArgument, "mean ratio, variance-to-mean ratio and effect must be > 0");
  const double theta = var_to_mean;
  const double treated_mean = normalization == GammaNormalization::TreatedMean ? 1.0 : theta;
  ConfounderModel m;
  m.treated = ConfounderLaw::gamma(treated_mean / theta, theta);
  m.control = ConfounderLaw::gamma(mean_ratio * treated_mean / theta, theta);
  m.gamma_control = m.gamma_treated = std::log(effect);
  return m;
}

}  // namespace costsens

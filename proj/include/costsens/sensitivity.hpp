#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace costsens {

enum class ConfounderFamily { Bernoulli, Normal, Poisson, Gamma };

std::string_view family_name(ConfounderFamily family) noexcept;
/// Case-insensitive; throws Error{Config} on an unknown name.
ConfounderFamily parse_family(std::string_view name);

/// Distribution of the unmeasured confounder U within one arm.
///
/// Bernoulli(prevalence), Normal(mean, sd), Poisson(rate), Gamma(shape, scale)
/// with mean shape*scale and variance shape*scale^2.
struct ConfounderLaw {
  ConfounderFamily family = ConfounderFamily::Bernoulli;
  double first = 0.0;
  double second = 0.0;

  static ConfounderLaw bernoulli(double prevalence) { return {ConfounderFamily::Bernoulli, prevalence, 0.0}; }
  static ConfounderLaw normal(double mean, double sd = 1.0) { return {ConfounderFamily::Normal, mean, sd}; }
  static ConfounderLaw poisson(double rate) { return {ConfounderFamily::Poisson, rate, 0.0}; }
  static ConfounderLaw gamma(double shape, double scale) { return {ConfounderFamily::Gamma, shape, scale}; }

  double mean() const noexcept;
  double variance() const noexcept;
  /// Throws Error{InvalidArgument} when a parameter is outside its domain.
  void validate() const;
  std::string describe() const;

  bool operator==(const ConfounderLaw&) const = default;
};

/// ln E[exp(gamma U)] in closed form. Throws Error{MgfDomain} for a Gamma law
/// with scale * gamma >= 1.
double log_mgf(const ConfounderLaw& law, double gamma);

/// Per-arm laws and log-scale effects of U on mean cost.
struct ConfounderModel {
  ConfounderLaw control;
  ConfounderLaw treated;
  double gamma_control = 0.0;
  double gamma_treated = 0.0;

  /// Same family in both arms, parameters in domain.
  void validate() const;
  bool operator==(const ConfounderModel&) const = default;
};

struct ApparentEffect {
  double beta_star = 0.0;
  double se = 1.0;
  double level = 0.95;

  /// Recovers se from a reported cost-ratio interval: (ln hi - ln lo) / (2 z).
  static ApparentEffect from_cost_ratio_ci(double cost_ratio, double ci_low, double ci_high, double level = 0.95);
};

struct AdjustedEffect {
  double beta = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double cost_ratio = 1.0;
  double cr_low = 1.0;
  double cr_high = 1.0;
};

/// Interval beta +- z se and its exponentiated counterparts.
AdjustedEffect make_interval(double beta, double se, double level);

/// beta = beta* - ln M_treated(gamma_1) + ln M_control(gamma_0); se unchanged.
AdjustedEffect adjust_effect(const ApparentEffect& apparent, const ConfounderModel& model);

/// Correction term ln M_control(gamma_0) - ln M_treated(gamma_1).
double correction(const ConfounderModel& model);

struct GridEntry {
  ConfounderModel model;
  std::string label;  // free text carried into the output, e.g. "pi0=0.7 pi1=0.5 effect=1.1"
};

struct SweepOptions {
  /// Significance is judged on cost-ratio bounds rounded to this many
  /// decimals (the precision of typical reports). nullopt uses full
  /// precision.
  std::optional<int> decision_digits = 2;
};

struct SweepRow {
  GridEntry entry;
  std::optional<AdjustedEffect> effect;  // empty when the row failed
  std::string error;                     // error-code name when the row failed
  std::string message;
  bool significant = false;
  bool significance_changed = false;
  bool significance_changed_strict = false;  // full-precision rule
};

/// Whether the cost-ratio interval excludes 1, optionally after rounding.
bool excludes_null(double cr_low, double cr_high, std::optional<int> digits);

/// One row per entry, in input order. A domain violation marks the row only.
std::vector<SweepRow> sweep(const ApparentEffect& apparent, const std::vector<GridEntry>& grid,
                            const SweepOptions& options = {});

/// How the Gamma confounder's arm means are anchored when a grid gives only the
/// mean ratio and the common variance-to-mean ratio theta.
enum class GammaNormalization {
  TreatedMean,   // Mean_1 = 1, so shape_1 = 1/theta and shape_0 = ratio/theta
  TreatedShape,  // shape_1 = 1, so Mean_1 = theta and shape_0 = ratio
};

std::string_view normalization_name(GammaNormalization n) noexcept;
GammaNormalization parse_normalization(std::string_view name);

/// Gamma model from (Mean_0 / Mean_1, Var / Mean, multiplicative effect).
ConfounderModel gamma_ratio_model(double mean_ratio, double var_to_mean, double effect,
                                  GammaNormalization normalization = GammaNormalization::TreatedMean);

}  // namespace costsens

#include "costsens/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "costsens/data.hpp"
#include "costsens/normal.hpp"

namespace costsens::report {

namespace {

/// Right-aligned columns separated by two spaces; first column left-aligned.
std::string render(const std::vector<std::vector<std::string>>& rows) {
  if (rows.empty()) return {};
  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) width[c] = std::max(width[c], r[c].size());
  std::string out;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    std::string line;
    for (std::size_t c = 0; c < r.size(); ++c) {
      const std::string pad(width[c] - r[c].size(), ' ');
      if (c > 0) line += "  ";
      line += c == 0 ? r[c] + pad : pad + r[c];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
    if (k == 0) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c > 0 ? 2 : 0);
      out += std::string(total, '-') + '\n';
    }
  }
  return out;
}

std::string join_csv(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) line += (i ? "," : "") + csv_cell(cells[i]);
  return line + '\n';
}

std::vector<std::string> law_headers(ConfounderFamily family) {
  switch (family) {
    case ConfounderFamily::Bernoulli: return {"pi0", "pi1"};
    case ConfounderFamily::Normal: return {"mu0", "sd0", "mu1", "sd1"};
    case ConfounderFamily::Poisson: return {"lambda0", "lambda1"};
    case ConfounderFamily::Gamma: return {"shape0", "scale0", "shape1", "scale1", "mean0", "mean1"};
  }
  return {};
}

std::vector<double> law_values(const ConfounderModel& m) {
  switch (m.control.family) {
    case ConfounderFamily::Bernoulli:
    case ConfounderFamily::Poisson: return {m.control.first, m.treated.first};
    case ConfounderFamily::Normal: return {m.control.first, m.control.second, m.treated.first, m.treated.second};
    case ConfounderFamily::Gamma:
      return {m.control.first, m.control.second, m.treated.first, m.treated.second, m.control.mean(), m.treated.mean()};
  }
  return {};
}

std::string flag(bool b) { return b ? "1" : "0"; }

}  // namespace

std::string csv_number(double value) { return std::isnan(value) ? "NA" : format_double(value); }

std::string fixed(double value, int decimals) {
  if (std::isnan(value)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string s = buf;
  if (s.rfind("-0.", 0) == 0 && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string csv_cell(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

// --- fit ---

std::string fit_csv(const FitSummary& s) {
  const double z = two_sided_z(s.level);
  const Eigen::MatrixXd& cov = s.model_variance ? s.fit.model_covariance : s.fit.covariance;
  std::string out = join_csv({"term", "estimate", "se", "ci_low", "ci_high", "ratio", "ratio_low", "ratio_high"});
  for (Eigen::Index j = 0; j < s.fit.coefficients.size(); ++j) {
    const double b = s.fit.coefficients[j];
    const double se = std::sqrt(cov(j, j));
    out += join_csv({s.names[static_cast<std::size_t>(j)], csv_number(b), csv_number(se), csv_number(b - z * se),
                     csv_number(b + z * se), csv_number(std::exp(b)), csv_number(std::exp(b - z * se)),
                     csv_number(std::exp(b + z * se))});
  }
  return out;
}

std::string fit_table(const FitSummary& s) {
  const double z = two_sided_z(s.level);
  const Eigen::MatrixXd& cov = s.model_variance ? s.fit.model_covariance : s.fit.covariance;
  std::ostringstream os;
  os << "Log-link Gamma cost model" << (s.ipw ? " (inverse probability of censoring weights)" : "") << '\n';
  os << "records " << s.records << ", uncensored " << s.uncensored << ", censoring rate " << fixed(s.censoring_rate, 3)
     << ", n_effective " << s.fit.n_effective << '\n';
  os << "variance " << (s.model_variance ? "model-based" : "sandwich") << ", iterations " << s.fit.iterations
     << (s.fit.converged ? "" : ", NOT CONVERGED: " + s.fit.message) << "\n\n";
  std::vector<std::vector<std::string>> rows{{"term", "estimate", "se", "ratio", fixed(s.level * 100, 0) + "% CI"}};
  for (Eigen::Index j = 0; j < s.fit.coefficients.size(); ++j) {
    const double b = s.fit.coefficients[j];
    const double se = std::sqrt(cov(j, j));
    rows.push_back({s.names[static_cast<std::size_t>(j)], fixed(b, 3), fixed(se, 3), fixed(std::exp(b), 2),
                    "(" + fixed(std::exp(b - z * se), 2) + ", " + fixed(std::exp(b + z * se), 2) + ")"});
  }
  os << render(rows);
  if (s.fit.coefficients.size() > 1) {
    const double b = s.fit.coefficients[1];
    const double se = std::sqrt(cov(1, 1));
    os << "\ntreatment cost ratio " << fixed(std::exp(b), 3) << " (" << fixed(s.level * 100, 0) << "% CI "
       << fixed(std::exp(b - z * se), 3) << ", " << fixed(std::exp(b + z * se), 3) << ")\n";
  }
  return os.str();
}

// --- sweep ---

std::string sweep_csv(const ApparentEffect& apparent, ConfounderFamily family, const std::vector<SweepRow>& rows) {
  std::vector<std::string> header{"label", "family"};
  for (auto& h : law_headers(family)) header.push_back(h);
  for (const char* h : {"gamma0", "gamma1", "effect0", "effect1", "beta_star", "beta", "se", "ci_low", "ci_high",
                        "cost_ratio", "cr_low", "cr_high", "significant", "significance_changed",
                        "significance_changed_exact", "error"})
    header.push_back(h);
  std::string out = join_csv(header);
  for (const auto& row : rows) {
    const auto& m = row.entry.model;
    std::vector<std::string> cells{row.entry.label, std::string(family_name(family))};
    for (double v : law_values(m)) cells.push_back(csv_number(v));
    cells.push_back(csv_number(m.gamma_control));
    cells.push_back(csv_number(m.gamma_treated));
    cells.push_back(csv_number(std::exp(m.gamma_control)));
    cells.push_back(csv_number(std::exp(m.gamma_treated)));
    cells.push_back(csv_number(apparent.beta_star));
    if (row.effect) {
      const auto& e = *row.effect;
      for (double v : {e.beta, e.se, e.ci_low, e.ci_high, e.cost_ratio, e.cr_low, e.cr_high}) cells.push_back(csv_number(v));
      cells.push_back(flag(row.significant));
      cells.push_back(flag(row.significance_changed));
      cells.push_back(flag(row.significance_changed_strict));
      cells.push_back("");
    } else {
      for (int k = 0; k < 10; ++k) cells.push_back("NA");
      cells.push_back(row.error);
    }
    out += join_csv(cells);
  }
  return out;
}

std::string sweep_table(const ApparentEffect& apparent, ConfounderFamily family, const std::vector<SweepRow>& rows,
                        const std::string& note) {
  const AdjustedEffect base = make_interval(apparent.beta_star, apparent.se, apparent.level);
  const std::string pct = fixed(apparent.level * 100, 0) + "% CI";
  bool common_effect = true;
  for (const auto& r : rows) common_effect = common_effect && r.entry.model.gamma_control == r.entry.model.gamma_treated;

  std::vector<std::string> header;
  if (family == ConfounderFamily::Gamma) header = {"mean0", "mean1", "var/mean0", "var/mean1"};
  else header = law_headers(family);
  if (common_effect) header.push_back("effect");
  else { header.push_back("effect0"); header.push_back("effect1"); }
  header.push_back("cost ratio");
  header.push_back(pct);
  header.push_back("");

  std::vector<std::vector<std::string>> table{header};
  for (const auto& row : rows) {
    const auto& m = row.entry.model;
    std::vector<std::string> cells;
    if (family == ConfounderFamily::Gamma) {
      for (double v : {m.control.mean(), m.treated.mean(), m.control.second, m.treated.second}) cells.push_back(fixed(v, 3));
    } else {
      for (double v : law_values(m)) cells.push_back(format_double(v));
    }
    cells.push_back(format_double(std::round(std::exp(m.gamma_control) * 1e6) / 1e6));
    if (!common_effect) cells.push_back(format_double(std::round(std::exp(m.gamma_treated) * 1e6) / 1e6));
    if (row.effect) {
      cells.push_back(fixed(row.effect->cost_ratio, 2));
      cells.push_back("(" + fixed(row.effect->cr_low, 2) + ", " + fixed(row.effect->cr_high, 2) + ")");
      cells.push_back(row.significance_changed ? "*" : "");
    } else {
      cells.push_back("NA");
      cells.push_back(row.error);
      cells.push_back("");
    }
    table.push_back(std::move(cells));
  }
  std::ostringstream os;
  os << "Sensitivity to an unmeasured " << family_name(family) << " confounder\n";
  os << "unadjusted cost ratio " << fixed(base.cost_ratio, 2) << " (" << pct << " " << fixed(base.cr_low, 2) << ", "
     << fixed(base.cr_high, 2) << "), beta* = " << fixed(apparent.beta_star, 4) << ", se = " << fixed(apparent.se, 5)
     << "\n\n";
  if (rows.empty()) os << "(empty grid)\n";
  else os << render(table);
  os << "\n* confidence interval changes the unadjusted inference\n";
  if (!note.empty()) os << note << '\n';
  return os.str();
}

// --- simulation ---

std::string simulation_csv(const std::vector<sim::SimulationResult>& results) {
  std::string out = join_csv({"scenario", "replications", "converged", "convergence_failures", "correction",
                              "mean_beta_unadjusted", "coverage_unadjusted", "bias_unadjusted", "mean_beta_adjusted",
                              "coverage_adjusted", "bias_adjusted", "sd_beta_adjusted", "mean_se", "mc_standard_error",
                              "mean_corr_treated", "mean_corr_control", "max_within_stratum_corr", "regenerations",
                              "true_model_converged", "mean_beta_true_model", "mc_se_true_model"});
  for (const auto& r : results)
    out += join_csv({r.scenario, std::to_string(r.replications), std::to_string(r.converged),
                     std::to_string(r.convergence_failures), csv_number(r.correction), csv_number(r.mean_beta_unadjusted),
                     csv_number(r.coverage_unadjusted), csv_number(r.bias_unadjusted), csv_number(r.mean_beta_adjusted),
                     csv_number(r.coverage_adjusted), csv_number(r.bias_adjusted), csv_number(r.sd_beta_adjusted),
                     csv_number(r.mean_se), csv_number(r.mc_standard_error), csv_number(r.mean_corr_treated),
                     csv_number(r.mean_corr_control), csv_number(r.max_within_stratum_corr),
                     std::to_string(r.regenerations), std::to_string(r.true_model_converged),
                     csv_number(r.mean_beta_true_model), csv_number(r.mc_se_true_model)});
  return out;
}

std::string simulation_table(const std::vector<sim::SimulationResult>& results) {
  std::vector<std::vector<std::string>> t{{"scenario", "reps", "failed", "unadjusted (cov)", "adjusted (cov)",
                                           "bias adj", "MC se", "corr X=1", "corr X=0"}};
  for (const auto& r : results)
    t.push_back({r.scenario, std::to_string(r.replications), std::to_string(r.convergence_failures),
                 fixed(r.mean_beta_unadjusted, 3) + " (" + fixed(r.coverage_unadjusted, 3) + ")",
                 fixed(r.mean_beta_adjusted, 3) + " (" + fixed(r.coverage_adjusted, 3) + ")", fixed(r.bias_adjusted, 3),
                 fixed(r.mc_standard_error, 4), fixed(r.mean_corr_treated, 3), fixed(r.mean_corr_control, 3)});
  return render(t);
}

std::string replications_csv(const std::vector<sim::SimulationResult>& results) {
  std::string out = join_csv({"scenario", "replication", "converged", "beta_star", "se", "beta_adjusted",
                              "covered_unadjusted", "covered_adjusted", "corr_treated", "corr_control", "max_abs_corr",
                              "regenerations", "beta_true_model"});
  for (const auto& r : results)
    for (const auto& rec : r.records) {
      const bool ok = rec.converged;
      out += join_csv({r.scenario, std::to_string(rec.replication), flag(ok), ok ? csv_number(rec.beta_star) : "NA",
                       ok ? csv_number(rec.se) : "NA", ok ? csv_number(rec.beta_adjusted) : "NA",
                       ok ? flag(rec.covered_unadjusted) : "NA", ok ? flag(rec.covered_adjusted) : "NA",
                       csv_number(rec.corr_treated), csv_number(rec.corr_control), csv_number(rec.max_abs_corr),
                       std::to_string(rec.regenerations), rec.true_converged ? csv_number(rec.beta_true_model) : "NA"});
    }
  return out;
}

std::string propensity_study_csv(const std::vector<sim::PropensityStudyResult>& results) {
  std::string out = join_csv({"corr_u_z1", "corr_u_z2", "corr_u_z3", "replications", "failures", "correction",
                              "mean_corr_treated", "mean_corr_control", "mean_beta_unadjusted", "mean_beta_adjusted",
                              "bias_unadjusted", "bias_adjusted", "mc_standard_error"});
  for (const auto& r : results)
    out += join_csv({csv_number(r.correlations[0]), csv_number(r.correlations[1]), csv_number(r.correlations[2]),
                     std::to_string(r.replications), std::to_string(r.failures), csv_number(r.correction),
                     csv_number(r.mean_corr_treated), csv_number(r.mean_corr_control),
                     csv_number(r.mean_beta_unadjusted), csv_number(r.mean_beta_adjusted),
                     csv_number(r.bias_unadjusted), csv_number(r.bias_adjusted), csv_number(r.mc_standard_error)});
  return out;
}

std::string propensity_study_table(const std::vector<sim::PropensityStudyResult>& results) {
  std::vector<std::vector<std::string>> t{
      {"corr(U, Z)", "reps", "corr(U, e) X=1", "corr(U, e) X=0", "bias unadj", "bias adj", "MC se"}};
  for (const auto& r : results)
    t.push_back({format_double(r.correlations[0]) + "/" + format_double(r.correlations[1]) + "/" +
                     format_double(r.correlations[2]),
                 std::to_string(r.replications), fixed(r.mean_corr_treated, 3), fixed(r.mean_corr_control, 3),
                 fixed(r.bias_unadjusted, 3), fixed(r.bias_adjusted, 3), fixed(r.mc_standard_error, 4)});
  return render(t);
}

// --- diagnostics ---

std::string diagnostics_csv(const std::vector<diag::CorrelationReport>& rows) {
  std::string out = join_csv({"covariate", "corr_unconditional", "corr_treated", "corr_control",
                              "largest_individual_treated", "partner_treated", "largest_individual_control",
                              "partner_control", "flagged"});
  for (const auto& r : rows)
    out += join_csv({r.covariate, csv_number(r.corr_unconditional), csv_number(r.corr_treated),
                     csv_number(r.corr_control), csv_number(r.largest_individual_treated), r.largest_partner_treated,
                     csv_number(r.largest_individual_control), r.largest_partner_control, flag(r.flagged)});
  return out;
}

std::string diagnostics_table(const std::vector<diag::CorrelationReport>& rows, double threshold) {
  std::vector<std::vector<std::string>> t{{"covariate", "unconditional", "treated", "control", "largest treated",
                                           "largest control", ""}};
  for (const auto& r : rows)
    t.push_back({r.covariate, fixed(r.corr_unconditional, 3), fixed(r.corr_treated, 3), fixed(r.corr_control, 3),
                 fixed(r.largest_individual_treated, 3), fixed(r.largest_individual_control, 3), r.flagged ? "!" : ""});
  std::ostringstream os;
  os << "Correlation of each covariate with the propensity score fitted without it\n\n" << render(t);
  os << "\nlargest: signed value of the largest-magnitude correlation with one other covariate in the arm\n";
  os << "! within-arm score correlation above " << fixed(threshold, 2) << " in magnitude; NA: undefined\n";
  return os.str();
}

}  // namespace costsens::report

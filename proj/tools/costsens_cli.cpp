// costsens: command-line front end over the C interface.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "costsens/costsens.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitEstimation = 1;
constexpr int kExitUsage = 2;

/// Carries a status out of a command body.
struct Failure {
  cs_status status;
  std::string message;
};

void check(cs_status s) {
  if (s != CS_OK) throw Failure{s, cs_last_error_message()};
}

int exit_code_for(cs_status s) {
  switch (s) {
    case CS_NO_POSITIVE_COST:
    case CS_SINGULAR_DESIGN:
    case CS_EMPTY_FIT:
    case CS_ZERO_PROBABILITY:
    case CS_SEPARATION:
    case CS_NOT_CONVERGED:
    case CS_MGF_DOMAIN:
      return kExitEstimation;
    default:
      return kExitUsage;
  }
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Dataset = std::unique_ptr<cs_dataset, Deleter<cs_dataset, cs_dataset_free>>;
using Fit = std::unique_ptr<cs_fit, Deleter<cs_fit, cs_fit_free>>;
using Grid = std::unique_ptr<cs_grid, Deleter<cs_grid, cs_grid_free>>;
using Sweep = std::unique_ptr<cs_sweep, Deleter<cs_sweep, cs_sweep_free>>;
using Scenarios = std::unique_ptr<cs_scenario_set, Deleter<cs_scenario_set, cs_scenario_set_free>>;
using Study = std::unique_ptr<cs_study, Deleter<cs_study, cs_study_free>>;
using Report = std::unique_ptr<cs_report, Deleter<cs_report, cs_report_free>>;

/// Takes ownership of a library string.
std::string take(char* text) {
  std::string out = text ? text : "";
  cs_string_free(text);
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{CS_IO_ERROR, "cannot open '" + path + "' for writing"};
  out << text;
  if (!out) throw Failure{CS_IO_ERROR, "failed writing '" + path + "'"};
}

struct Options {
  std::string input;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::size_t reps = 1000;
  unsigned workers = 1;
  double level = 0.95;
  bool ipw = true;
  std::string variance = "sandwich";
  std::string format = "table";
  bool shift_zero = false;
  bool stratify = false;

  std::string cost_col, time_col, event_col, treat_col, covariates, categorical;

  std::string grid;
  std::optional<double> beta_star, se;
  std::optional<double> cost_ratio, ci_low, ci_high;
  std::string family;
  std::vector<std::string> confounder;
  std::string normalization;
  int decision_digits = 2;
  bool strict = false;

  std::string scenarios;
  std::string replications_output;
  bool true_model = false;
  std::string propensity;
  std::vector<double> correlations;
  std::size_t n = 1000;
  double gamma = 0.5;

  bool spearman = false;
  double threshold = 0.15;
};

cs_format output_format(const Options& o) { return o.format == "csv" ? CS_FORMAT_CSV : CS_FORMAT_TABLE; }

/// stdout carries the chosen format; --output always receives CSV.
template <class Render>
void emit(const Options& o, Render&& render) {
  std::cout << take(render(output_format(o)));
  if (!o.output.empty()) write_file(o.output, take(render(CS_FORMAT_CSV)));
}

Dataset load(const Options& o) {
  cs_column_spec spec{};
  spec.cost = o.cost_col.empty() ? nullptr : o.cost_col.c_str();
  spec.time = o.time_col.empty() ? nullptr : o.time_col.c_str();
  spec.event = o.event_col.empty() ? nullptr : o.event_col.c_str();
  spec.treat = o.treat_col.empty() ? nullptr : o.treat_col.c_str();
  spec.covariates = o.covariates.empty() ? nullptr : o.covariates.c_str();
  spec.categorical = o.categorical.empty() ? nullptr : o.categorical.c_str();
  cs_dataset* raw = nullptr;
  check(cs_dataset_load(o.input.c_str(), &spec, &raw));
  Dataset data(raw);
  if (o.shift_zero) {
    cs_dataset* shifted = nullptr;
    check(cs_dataset_shift_zero(data.get(), &shifted));
    data.reset(shifted);
  } else if (cs_dataset_count_zero_cost(data.get()) > 0) {
    std::cerr << "note: " << cs_dataset_count_zero_cost(data.get())
              << " zero-cost record(s) kept as is; --shift-zero adds half the smallest positive cost\n";
  }
  return data;
}

cs_fit_options fit_options(const Options& o) {
  cs_fit_options f = cs_fit_options_default();
  f.ipw = o.ipw ? 1 : 0;
  f.stratified_censoring = o.stratify ? 1 : 0;
  f.model_variance = o.variance == "model" ? 1 : 0;
  f.level = o.level;
  return f;
}

Fit fit_dataset(const Options& o) {
  Dataset data = load(o);
  cs_fit* raw = nullptr;
  const cs_fit_options f = fit_options(o);
  check(cs_fit_cost(data.get(), &f, &raw));
  return Fit(raw);
}

int cmd_fit(const Options& o) {
  Fit fit = fit_dataset(o);
  emit(o, [&](cs_format f) {
    char* s = nullptr;
    check(cs_fit_render(fit.get(), f, &s));
    return s;
  });
  if (!cs_fit_converged(fit.get())) {
    std::cerr << "error: not-converged: cost regression did not converge; estimates are unreliable\n";
    return kExitEstimation;
  }
  return kExitOk;
}

struct Apparent {
  double beta_star;
  double se;
  double level;
};

/// Apparent effect from flags, then a fitted dataset, then the grid file.
Apparent resolve_apparent(const Options& o, const cs_grid* grid) {
  const bool direct = o.beta_star || o.se;
  const bool from_ci = o.cost_ratio || o.ci_low || o.ci_high;
  if (direct && from_ci) throw Failure{CS_INVALID_ARGUMENT, "give --beta-star/--se or --cost-ratio/--ci-low/--ci-high"};
  if (direct) {
    if (!o.beta_star || !o.se) throw Failure{CS_INVALID_ARGUMENT, "--beta-star and --se go together"};
    return {*o.beta_star, *o.se, o.level};
  }
  if (from_ci) {
    if (!o.cost_ratio || !o.ci_low || !o.ci_high)
      throw Failure{CS_INVALID_ARGUMENT, "--cost-ratio, --ci-low and --ci-high go together"};
    Apparent a{0, 0, o.level};
    check(cs_apparent_from_ci(*o.cost_ratio, *o.ci_low, *o.ci_high, o.level, &a.beta_star, &a.se));
    return a;
  }
  if (!o.input.empty()) {
    Fit fit = fit_dataset(o);
    if (!cs_fit_converged(fit.get())) throw Failure{CS_NOT_CONVERGED, "cost regression did not converge"};
    Apparent a{0, 0, o.level};
    check(cs_fit_treatment(fit.get(), &a.beta_star, &a.se));
    return a;
  }
  Apparent a{0, 0, 0};
  if (grid && cs_grid_apparent(grid, &a.beta_star, &a.se, &a.level)) return a;
  throw Failure{CS_INVALID_ARGUMENT, "no apparent effect: give --beta-star/--se, --cost-ratio/--ci-low/--ci-high, "
                                     "--input, or put one in the grid file"};
}

int run_sweep(const Options& o, const cs_grid* grid) {
  const Apparent a = resolve_apparent(o, grid);
  cs_sweep* raw = nullptr;
  check(cs_sweep_run(grid, a.beta_star, a.se, a.level, o.strict ? -1 : o.decision_digits, &raw));
  Sweep sweep(raw);
  emit(o, [&](cs_format f) {
    char* s = nullptr;
    check(cs_sweep_render(sweep.get(), f, &s));
    return s;
  });
  return kExitOk;
}

int cmd_adjust(const Options& o) {
  if (o.family.empty()) throw Failure{CS_INVALID_ARGUMENT, "--family is required"};
  if (o.confounder.empty()) throw Failure{CS_INVALID_ARGUMENT, "--confounder key=value pairs are required"};
  std::string pairs;
  for (const auto& p : o.confounder) pairs += p + " ";
  cs_grid* raw = nullptr;
  check(cs_grid_from_pairs(o.family.c_str(), pairs.c_str(), o.normalization.empty() ? nullptr : o.normalization.c_str(),
                           &raw));
  Grid grid(raw);
  return run_sweep(o, grid.get());
}

int cmd_sweep(const Options& o) {
  cs_grid* raw = nullptr;
  check(cs_grid_load(o.grid.c_str(), &raw));
  Grid grid(raw);
  return run_sweep(o, grid.get());
}

int cmd_simulate(const Options& o) {
  if (!o.propensity.empty()) {
    cs_propensity_options p = cs_propensity_options_default();
    if (o.propensity == "model1") p.model = 1;
    else if (o.propensity == "model2") p.model = 2;
    else if (o.propensity == "custom") {
      if (o.correlations.size() != 3) throw Failure{CS_INVALID_ARGUMENT, "--correlations needs three values"};
      p.model = 0;
      for (int j = 0; j < 3; ++j) p.correlations[j] = o.correlations[j];
    } else
      throw Failure{CS_INVALID_ARGUMENT, "--propensity must be model1, model2 or custom"};
    p.n = o.n;
    p.replications = o.reps;
    p.seed = *o.seed;
    p.workers = o.workers;
    p.gamma = o.gamma;
    emit(o, [&](cs_format f) {
      char* s = nullptr;
      check(cs_propensity_study(&p, f, &s, nullptr));
      return s;
    });
    return kExitOk;
  }
  if (o.scenarios.empty()) throw Failure{CS_INVALID_ARGUMENT, "--scenarios (or --propensity) is required"};
  cs_scenario_set* raw = nullptr;
  check(cs_scenario_set_load(o.scenarios.c_str(), &raw));
  Scenarios set(raw);
  cs_study_options so = cs_study_options_default();
  so.seed = *o.seed;
  so.replications = o.reps;
  so.workers = o.workers;
  so.variance = o.variance == "auto" ? 0 : o.variance == "sandwich" ? 1 : 2;
  so.level = o.level;
  so.stratified_censoring = o.stratify ? 1 : 0;
  so.fit_true_model = o.true_model ? 1 : 0;
  cs_study* sraw = nullptr;
  check(cs_study_run(set.get(), &so, &sraw));
  Study study(sraw);
  emit(o, [&](cs_format f) {
    char* s = nullptr;
    check(cs_study_render(study.get(), f, &s));
    return s;
  });
  if (!o.replications_output.empty()) {
    char* s = nullptr;
    check(cs_study_render_replications(study.get(), &s));
    write_file(o.replications_output, take(s));
  }
  return kExitOk;
}

int cmd_diagnose(const Options& o) {
  Dataset data = load(o);
  cs_diag_options d = cs_diag_options_default();
  d.spearman = o.spearman ? 1 : 0;
  d.threshold = o.threshold;
  cs_report* raw = nullptr;
  check(cs_diagnose(data.get(), &d, &raw));
  Report report(raw);
  emit(o, [&](cs_format f) {
    char* s = nullptr;
    check(cs_report_render(report.get(), f, &s));
    return s;
  });
  return kExitOk;
}

int cmd_synth(const Options& o) {
  cs_dataset* raw = nullptr;
  check(cs_synth_cohort(*o.seed, &raw));
  Dataset data(raw);
  if (!o.output.empty()) {
    check(cs_dataset_save(data.get(), o.output.c_str()));
    std::cerr << "wrote " << cs_dataset_size(data.get()) << " records to " << o.output << "\n";
  } else {
    char* s = nullptr;
    check(cs_dataset_to_csv(data.get(), &s));
    std::cout << take(s);
  }
  return kExitOk;
}

void add_data_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--cost-col", o.cost_col, "Cost column (default cost)");
  cmd->add_option("--time-col", o.time_col, "Follow-up time column (default time)");
  cmd->add_option("--event-col", o.event_col, "Event indicator column, 1 = uncensored (default event)");
  cmd->add_option("--treat-col", o.treat_col, "Treatment column (default treat)");
  cmd->add_option("--covariates", o.covariates, "Comma-separated covariate columns (default: all others)");
  cmd->add_option("--categorical", o.categorical, "Comma-separated columns to expand into indicators");
  cmd->add_flag("--shift-zero", o.shift_zero, "Add half the smallest positive cost to every record");
}

void add_fit_flags(CLI::App* cmd, Options& o) {
  cmd->add_flag("--ipw,!--no-ipw", o.ipw, "Inverse-probability-of-censoring weighting (default on)");
  cmd->add_flag("--stratify-censoring", o.stratify, "Estimate the censoring distribution per arm");
  cmd->add_option("--variance", o.variance, "Standard errors: sandwich or model")
      ->check(CLI::IsMember({"sandwich", "model"}));
}

void add_apparent_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--input", o.input, "Dataset to fit for the apparent effect");
  cmd->add_option("--beta-star", o.beta_star, "Apparent log cost ratio");
  cmd->add_option("--se", o.se, "Standard error of the apparent log cost ratio");
  cmd->add_option("--cost-ratio", o.cost_ratio, "Apparent cost ratio");
  cmd->add_option("--ci-low", o.ci_low, "Lower confidence bound of the cost ratio");
  cmd->add_option("--ci-high", o.ci_high, "Upper confidence bound of the cost ratio");
  cmd->add_option("--decision-digits", o.decision_digits, "Decimals of the cost-ratio CI used to judge significance")
      ->check(CLI::Range(0, 12));
  cmd->add_flag("--strict", o.strict, "Judge significance on the unrounded interval");
  add_data_flags(cmd, o);
  add_fit_flags(cmd, o);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cost regression under censoring and sensitivity analysis for unmeasured confounding"};
  app.require_subcommand(1);
  Options o;

  auto* fit = app.add_subcommand("fit", "Fit the weighted Gamma cost regression");
  fit->add_option("--input", o.input, "Dataset CSV")->required();
  add_data_flags(fit, o);
  add_fit_flags(fit, o);

  auto* adjust = app.add_subcommand("adjust", "Adjust an apparent effect for one confounder specification");
  add_apparent_flags(adjust, o);
  adjust->add_option("--family", o.family, "bernoulli, normal, poisson or gamma")->required();
  adjust->add_option("--confounder", o.confounder, "key=value parameters, e.g. pi0=0.7 pi1=0.5 effect=1.1")->required();
  adjust->add_option("--normalization", o.normalization, "Gamma mean_ratio/var_mean convention");

  auto* sweep = app.add_subcommand("sweep", "Adjust an apparent effect over a grid of confounder specifications");
  add_apparent_flags(sweep, o);
  sweep->add_option("--grid", o.grid, "Grid file")->required();

  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo study");
  simulate->add_option("--scenarios,--input", o.scenarios, "Scenario file");
  simulate->add_option("--propensity", o.propensity, "Propensity correlation study: model1, model2 or custom");
  simulate->add_option("--correlations", o.correlations, "corr(U, Z1..Z3) for --propensity custom")->expected(3);
  simulate->add_option("--n", o.n, "Subjects per replication for --propensity");
  simulate->add_option("--gamma", o.gamma, "Confounder effect for --propensity");
  simulate->add_option("--seed", o.seed, "Random seed")->required();
  simulate->add_option("--reps", o.reps, "Replications per scenario")->check(CLI::PositiveNumber);
  simulate->add_option("--workers", o.workers, "Worker threads")->check(CLI::Range(1u, 1024u));
  simulate->add_option("--variance", o.variance, "auto, sandwich or model")
      ->check(CLI::IsMember({"auto", "sandwich", "model"}))
      ->default_str("auto");
  simulate->add_flag("--stratify-censoring", o.stratify, "Estimate the censoring distribution per arm");
  simulate->add_option("--replications-output", o.replications_output, "Write per-replication CSV here");
  simulate->add_flag("--true-model", o.true_model, "Also fit the model that includes U");

  auto* diagnose = app.add_subcommand("diagnose", "Leave-one-out covariate correlation diagnostics");
  diagnose->add_option("--input", o.input, "Dataset CSV")->required();
  add_data_flags(diagnose, o);
  diagnose->add_flag("--spearman", o.spearman, "Rank correlations");
  diagnose->add_option("--threshold", o.threshold, "Flag within-arm correlations above this magnitude");

  auto* synth = app.add_subcommand("synth", "Write a synthetic registry-like cohort");
  synth->add_option("--seed", o.seed, "Random seed")->required();

  for (auto* sub : {fit, adjust, sweep, simulate, diagnose, synth}) {
    sub->add_option("--output", o.output, "Also write CSV output to this file");
    sub->add_option("--format", o.format, "Standard output format: table or csv")->check(CLI::IsMember({"csv", "table"}));
    sub->add_option("--level", o.level, "Confidence level")->check(CLI::Range(0.0, 1.0));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (simulate->parsed() && simulate->count("--variance") == 0) o.variance = "auto";

  try {
    if (fit->parsed()) return cmd_fit(o);
    if (adjust->parsed()) return cmd_adjust(o);
    if (sweep->parsed()) return cmd_sweep(o);
    if (simulate->parsed()) return cmd_simulate(o);
    if (diagnose->parsed()) return cmd_diagnose(o);
    if (synth->parsed()) return cmd_synth(o);
  } catch (const Failure& f) {
    std::cout.flush();
    std::cerr << "error: " << cs_status_name(f.status) << ": " << f.message << "\n";
    return exit_code_for(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error: internal-error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

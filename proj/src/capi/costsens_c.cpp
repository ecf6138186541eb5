#include "costsens/costsens.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "costsens/censoring.hpp"
#include "costsens/config.hpp"
#include "costsens/data.hpp"
#include "costsens/diagnostics.hpp"
#include "costsens/error.hpp"
#include "costsens/grid.hpp"
#include "costsens/report.hpp"
#include "costsens/sensitivity.hpp"
#include "costsens/simulation.hpp"

using namespace costsens;

struct cs_dataset {
  CostDataset data;
};

struct cs_fit {
  report::FitSummary summary;
};

struct cs_grid {
  SweepConfig config;
};

struct cs_sweep {
  ApparentEffect apparent;
  ConfounderFamily family;
  std::string note;
  std::vector<SweepRow> rows;
};

struct cs_scenario_set {
  std::vector<sim::Scenario> scenarios;
};

struct cs_study {
  std::vector<sim::SimulationResult> results;
};

struct cs_report {
  std::vector<diag::CorrelationReport> rows;
  double threshold;
};

namespace {

thread_local std::string last_error;

cs_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InputNotFound: return CS_INPUT_NOT_FOUND;
    case ErrorCode::Io: return CS_IO_ERROR;
    case ErrorCode::Schema: return CS_SCHEMA_ERROR;
    case ErrorCode::Parse: return CS_PARSE_ERROR;
    case ErrorCode::EmptyDataset: return CS_EMPTY_DATASET;
    case ErrorCode::NoPositiveCost: return CS_NO_POSITIVE_COST;
    case ErrorCode::SingularDesign: return CS_SINGULAR_DESIGN;
    case ErrorCode::EmptyFit: return CS_EMPTY_FIT;
    case ErrorCode::ZeroProbability: return CS_ZERO_PROBABILITY;
    case ErrorCode::MgfDomain: return CS_MGF_DOMAIN;
    case ErrorCode::Separation: return CS_SEPARATION;
    case ErrorCode::CorrelationModel: return CS_CORRELATION_MODEL;
    case ErrorCode::Config: return CS_CONFIG_ERROR;
    case ErrorCode::InvalidArgument: return CS_INVALID_ARGUMENT;
    case ErrorCode::NotConverged: return CS_NOT_CONVERGED;
  }
  return CS_INTERNAL_ERROR;
}

/// Runs body, translating exceptions into status codes and the thread's message.
template <class Body>
cs_status guarded(Body&& body) {
  try {
    body();
    last_error.clear();
    return CS_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown failure";
  }
  return CS_INTERNAL_ERROR;
}

void require(const void* p, const char* what) {
  if (!p) fail(ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<std::string> list(const char* text) {
  if (!text || !*text) return {};
  return split_trimmed(text, ',');
}

ColumnMapping mapping_from(const cs_column_spec* spec) {
  ColumnMapping m;
  if (!spec) return m;
  if (spec->cost) m.cost = spec->cost;
  if (spec->time) m.time = spec->time;
  if (spec->event) m.event = spec->event;
  if (spec->treat) m.treatment = spec->treat;
  m.covariates = list(spec->covariates);
  m.categorical = list(spec->categorical);
  return m;
}

ConfounderLaw law_from(cs_family family, const double p[2]) {
  switch (family) {
    case CS_BERNOULLI: return ConfounderLaw::bernoulli(p[0]);
    case CS_NORMAL: return ConfounderLaw::normal(p[0], p[1]);
    case CS_POISSON: return ConfounderLaw::poisson(p[0]);
    case CS_GAMMA: return ConfounderLaw::gamma(p[0], p[1]);
  }
  fail(ErrorCode::InvalidArgument, "unknown confounder family");
}

ConfounderModel model_from(const cs_confounder* c) {
  require(c, "confounder");
  ConfounderModel m;
  m.control = law_from(c->family, c->control);
  m.treated = law_from(c->family, c->treated);
  m.gamma_control = c->gamma_control;
  m.gamma_treated = c->gamma_treated;
  return m;
}

void write_adjusted(const AdjustedEffect& e, cs_adjusted* out) {
  *out = {e.beta, e.se, e.ci_low, e.ci_high, e.cost_ratio, e.cr_low, e.cr_high};
}

}  // namespace

extern "C" {

const char* cs_status_name(cs_status status) {
  switch (status) {
    case CS_OK: return "ok";
    case CS_INPUT_NOT_FOUND: return "input-not-found";
    case CS_IO_ERROR: return "io-error";
    case CS_SCHEMA_ERROR: return "schema-error";
    case CS_PARSE_ERROR: return "parse-error";
    case CS_EMPTY_DATASET: return "empty-dataset";
    case CS_NO_POSITIVE_COST: return "no-positive-cost";
    case CS_SINGULAR_DESIGN: return "singular-design";
    case CS_EMPTY_FIT: return "empty-fit";
    case CS_ZERO_PROBABILITY: return "zero-probability";
    case CS_MGF_DOMAIN: return "mgf-domain";
    case CS_SEPARATION: return "separation";
    case CS_CORRELATION_MODEL: return "correlation-model";
    case CS_CONFIG_ERROR: return "config-error";
    case CS_INVALID_ARGUMENT: return "invalid-argument";
    case CS_NOT_CONVERGED: return "not-converged";
    case CS_INTERNAL_ERROR: return "internal-error";
  }
  return "unknown";
}

const char* cs_last_error_message(void) { return last_error.c_str(); }

void cs_string_free(char* text) { std::free(text); }

// ---- datasets ----

cs_status cs_dataset_load(const char* path, const cs_column_spec* columns, cs_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new cs_dataset{load_dataset(path, mapping_from(columns))};
  });
}

cs_status cs_dataset_parse(const char* csv_text, const cs_column_spec* columns, cs_dataset** out) {
  return guarded([&] {
    require(csv_text, "text");
    require(out, "out");
    *out = new cs_dataset{parse_dataset(csv_text, mapping_from(columns))};
  });
}

cs_status cs_dataset_save(const cs_dataset* dataset, const char* path) {
  return guarded([&] {
    require(dataset, "dataset");
    require(path, "path");
    save_dataset(dataset->data, path);
  });
}

cs_status cs_dataset_to_csv(const cs_dataset* dataset, char** out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out, "out");
    *out = duplicate(format_dataset(dataset->data));
  });
}

cs_status cs_dataset_shift_zero(const cs_dataset* dataset, cs_dataset** out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out, "out");
    *out = new cs_dataset{zero_cost_shift(dataset->data)};
  });
}

size_t cs_dataset_size(const cs_dataset* dataset) { return dataset ? dataset->data.size() : 0; }

size_t cs_dataset_covariate_count(const cs_dataset* dataset) { return dataset ? dataset->data.covariate_count() : 0; }

size_t cs_dataset_count_treated(const cs_dataset* dataset) { return dataset ? dataset->data.count_arm(1) : 0; }

size_t cs_dataset_count_zero_cost(const cs_dataset* dataset) {
  if (!dataset) return 0;
  size_t n = 0;
  for (const auto& r : dataset->data.records()) n += r.cost == 0.0;
  return n;
}

double cs_dataset_censoring_rate(const cs_dataset* dataset) { return dataset ? dataset->data.censoring_rate() : NAN; }

void cs_dataset_free(cs_dataset* dataset) { delete dataset; }

cs_status cs_synth_cohort(uint64_t seed, cs_dataset** out) {
  return guarded([&] {
    require(out, "out");
    *out = new cs_dataset{sim::synth_registry_cohort(seed)};
  });
}

cs_status cs_ipw_weights(const cs_dataset* dataset, int stratified, double* weights, size_t length) {
  return guarded([&] {
    require(dataset, "dataset");
    require(weights, "weights");
    if (length != dataset->data.size()) fail(ErrorCode::InvalidArgument, "weights length must equal the record count");
    const auto w = ipw_weights(dataset->data, stratified != 0);
    std::copy(w.begin(), w.end(), weights);
  });
}

// ---- cost regression ----

cs_fit_options cs_fit_options_default(void) { return cs_fit_options{1, 0, 0, 0.95}; }

cs_status cs_fit_cost(const cs_dataset* dataset, const cs_fit_options* options, cs_fit** out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out, "out");
    const cs_fit_options o = options ? *options : cs_fit_options_default();
    CostFitOptions fo;
    fo.ipw = o.ipw != 0;
    fo.stratified_censoring = o.stratified_censoring != 0;
    auto fit = std::make_unique<cs_fit>();
    fit->summary.fit = fit_censored_cost(dataset->data, fo);
    fit->summary.names = cost_coefficient_names(dataset->data);
    fit->summary.records = dataset->data.size();
    fit->summary.uncensored = dataset->data.count_uncensored();
    fit->summary.censoring_rate = dataset->data.censoring_rate();
    fit->summary.ipw = fo.ipw;
    fit->summary.model_variance = o.model_variance != 0;
    fit->summary.level = o.level;
    make_interval(0.0, 1.0, o.level);  // validates the level
    *out = fit.release();
  });
}

int cs_fit_converged(const cs_fit* fit) { return fit && fit->summary.fit.converged ? 1 : 0; }

size_t cs_fit_coefficient_count(const cs_fit* fit) {
  return fit ? static_cast<size_t>(fit->summary.fit.coefficients.size()) : 0;
}

cs_status cs_fit_coefficient(const cs_fit* fit, size_t index, double* estimate, double* se) {
  return guarded([&] {
    require(fit, "fit");
    const auto& f = fit->summary.fit;
    if (index >= static_cast<size_t>(f.coefficients.size())) fail(ErrorCode::InvalidArgument, "coefficient index out of range");
    const auto j = static_cast<Eigen::Index>(index);
    const Eigen::MatrixXd& cov = fit->summary.model_variance ? f.model_covariance : f.covariance;
    if (estimate) *estimate = f.coefficients[j];
    if (se) *se = std::sqrt(cov(j, j));
  });
}

cs_status cs_fit_treatment(const cs_fit* fit, double* beta, double* se) { return cs_fit_coefficient(fit, 1, beta, se); }

cs_status cs_fit_render(const cs_fit* fit, cs_format format, char** out) {
  return guarded([&] {
    require(fit, "fit");
    require(out, "out");
    *out = duplicate(format == CS_FORMAT_CSV ? report::fit_csv(fit->summary) : report::fit_table(fit->summary));
  });
}

void cs_fit_free(cs_fit* fit) { delete fit; }

// ---- sensitivity ----

cs_status cs_family_from_name(const char* name, cs_family* out) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    *out = static_cast<cs_family>(parse_family(name));
  });
}

cs_status cs_log_mgf(cs_family family, double first, double second, double gamma, double* out) {
  return guarded([&] {
    require(out, "out");
    const double p[2] = {first, second};
    *out = log_mgf(law_from(family, p), gamma);
  });
}

cs_status cs_adjust(double beta_star, double se, double level, const cs_confounder* confounder, cs_adjusted* out) {
  return guarded([&] {
    require(out, "out");
    write_adjusted(adjust_effect(ApparentEffect{beta_star, se, level}, model_from(confounder)), out);
  });
}

cs_status cs_apparent_from_ci(double cost_ratio, double ci_low, double ci_high, double level, double* beta_star,
                              double* se) {
  return guarded([&] {
    const ApparentEffect a = ApparentEffect::from_cost_ratio_ci(cost_ratio, ci_low, ci_high, level);
    if (beta_star) *beta_star = a.beta_star;
    if (se) *se = a.se;
  });
}

cs_status cs_grid_load(const char* path, cs_grid** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new cs_grid{load_sweep_config(path)};
  });
}

cs_status cs_grid_parse(const char* text, cs_grid** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new cs_grid{parse_sweep_config(text)};
  });
}

cs_status cs_grid_from_pairs(const char* family, const char* pairs, const char* normalization, cs_grid** out) {
  return guarded([&] {
    require(family, "family");
    require(pairs, "pairs");
    require(out, "out");
    std::string text = "[sweep]\nfamily = " + std::string(family) + "\n";
    if (normalization && *normalization) text += "normalization = " + std::string(normalization) + "\n";
    text += "[grid]\n";
    std::string p = pairs;
    for (char& c : p)
      if (c == ';' || c == '\t' || c == '\n') c = ' ';
    std::size_t start = 0;
    bool any = false;
    while (start < p.size()) {
      const auto end = p.find(' ', start);
      const std::string item = p.substr(start, end == std::string::npos ? std::string::npos : end - start);
      if (!item.empty()) {
        if (item.find('=') == std::string::npos) fail(ErrorCode::Config, "expected key=value, got '" + item + "'");
        if (item.find('[') != std::string::npos || item.find('#') != std::string::npos)
          fail(ErrorCode::Config, "invalid character in '" + item + "'");
        text += item + "\n";
        any = true;
      }
      if (end == std::string::npos) break;
      start = end + 1;
    }
    if (!any) fail(ErrorCode::Config, "no confounder parameters given");
    *out = new cs_grid{parse_sweep_config(text)};
  });
}

size_t cs_grid_size(const cs_grid* grid) { return grid ? grid->config.grid.size() : 0; }

int cs_grid_apparent(const cs_grid* grid, double* beta_star, double* se, double* level) {
  if (!grid || !grid->config.apparent) return 0;
  if (beta_star) *beta_star = grid->config.apparent->beta_star;
  if (se) *se = grid->config.apparent->se;
  if (level) *level = grid->config.apparent->level;
  return 1;
}

void cs_grid_free(cs_grid* grid) { delete grid; }

cs_status cs_sweep_run(const cs_grid* grid, double beta_star, double se, double level, int decision_digits,
                       cs_sweep** out) {
  return guarded([&] {
    require(grid, "grid");
    require(out, "out");
    auto s = std::make_unique<cs_sweep>();
    s->apparent = ApparentEffect{beta_star, se, level};
    make_interval(beta_star, se, level);  // validates se and level
    s->family = grid->config.family;
    SweepOptions opts;
    if (decision_digits < 0) opts.decision_digits = std::nullopt;
    else opts.decision_digits = decision_digits;
    s->rows = sweep(s->apparent, grid->config.grid, opts);
    if (s->family == ConfounderFamily::Gamma) {
      s->note = grid->config.normalization == GammaNormalization::TreatedMean
                    ? "gamma arm means from mean_ratio/var_mean use treated-mean normalization (treated mean = 1)"
                    : "gamma arm means from mean_ratio/var_mean use treated-shape normalization (treated shape = 1)";
    }
    *out = s.release();
  });
}

size_t cs_sweep_size(const cs_sweep* sweep) { return sweep ? sweep->rows.size() : 0; }

cs_status cs_sweep_row(const cs_sweep* sw, size_t index, cs_adjusted* effect, int* ok, int* changed) {
  return guarded([&] {
    require(sw, "sweep");
    if (index >= sw->rows.size()) fail(ErrorCode::InvalidArgument, "row index out of range");
    const auto& row = sw->rows[index];
    if (ok) *ok = row.effect ? 1 : 0;
    if (changed) *changed = row.significance_changed ? 1 : 0;
    if (effect) {
      if (row.effect) write_adjusted(*row.effect, effect);
      else *effect = cs_adjusted{NAN, NAN, NAN, NAN, NAN, NAN, NAN};
    }
  });
}

cs_status cs_sweep_render(const cs_sweep* sw, cs_format format, char** out) {
  return guarded([&] {
    require(sw, "sweep");
    require(out, "out");
    *out = duplicate(format == CS_FORMAT_CSV ? report::sweep_csv(sw->apparent, sw->family, sw->rows)
                                             : report::sweep_table(sw->apparent, sw->family, sw->rows, sw->note));
  });
}

void cs_sweep_free(cs_sweep* sweep) { delete sweep; }

// ---- simulation ----

cs_status cs_scenario_set_load(const char* path, cs_scenario_set** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new cs_scenario_set{sim::load_scenario_config(path)};
  });
}

cs_status cs_scenario_set_parse(const char* text, cs_scenario_set** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new cs_scenario_set{sim::parse_scenario_config(text)};
  });
}

size_t cs_scenario_set_size(const cs_scenario_set* set) { return set ? set->scenarios.size() : 0; }

void cs_scenario_set_free(cs_scenario_set* set) { delete set; }

cs_study_options cs_study_options_default(void) { return cs_study_options{1, 1000, 1, 0, 0.95, 0, 0}; }

cs_status cs_study_run(const cs_scenario_set* set, const cs_study_options* options, cs_study** out) {
  return guarded([&] {
    require(set, "scenario set");
    require(out, "out");
    const cs_study_options o = options ? *options : cs_study_options_default();
    sim::StudyOptions so;
    so.seed = o.seed;
    so.replications = o.replications;
    so.workers = o.workers;
    if (o.variance < 0 || o.variance > 2) fail(ErrorCode::InvalidArgument, "variance must be 0, 1 or 2");
    so.variance = static_cast<sim::VarianceChoice>(o.variance);
    so.level = o.level;
    so.stratified_censoring = o.stratified_censoring != 0;
    so.fit_true_model = o.fit_true_model != 0;
    auto study = std::make_unique<cs_study>();
    for (const auto& s : set->scenarios) study->results.push_back(sim::run_study(s, so));
    *out = study.release();
  });
}

size_t cs_study_size(const cs_study* study) { return study ? study->results.size() : 0; }

cs_status cs_study_summary_at(const cs_study* study, size_t index, cs_study_summary* out) {
  return guarded([&] {
    require(study, "study");
    require(out, "out");
    if (index >= study->results.size()) fail(ErrorCode::InvalidArgument, "scenario index out of range");
    const auto& r = study->results[index];
    *out = cs_study_summary{r.replications,       r.convergence_failures, r.mean_beta_unadjusted,
                            r.coverage_unadjusted, r.mean_beta_adjusted,  r.coverage_adjusted,
                            r.mc_standard_error,   r.mean_corr_treated,   r.mean_corr_control,
                            r.mean_beta_true_model};
  });
}

cs_status cs_study_render(const cs_study* study, cs_format format, char** out) {
  return guarded([&] {
    require(study, "study");
    require(out, "out");
    *out = duplicate(format == CS_FORMAT_CSV ? report::simulation_csv(study->results)
                                             : report::simulation_table(study->results));
  });
}

cs_status cs_study_render_replications(const cs_study* study, char** out) {
  return guarded([&] {
    require(study, "study");
    require(out, "out");
    *out = duplicate(report::replications_csv(study->results));
  });
}

void cs_study_free(cs_study* study) { delete study; }

cs_propensity_options cs_propensity_options_default(void) {
  return cs_propensity_options{1, {0.1, 0.1, 0.1}, 1000, 200, 1, 1, 0.5};
}

cs_status cs_propensity_study(const cs_propensity_options* options, cs_format format, char** out, double* bias_adjusted) {
  return guarded([&] {
    const cs_propensity_options o = options ? *options : cs_propensity_options_default();
    sim::PropensityStudyOptions po;
    switch (o.model) {
      case 0: po.model = sim::CorrelationModelKind::Custom; break;
      case 1: po.model = sim::CorrelationModelKind::Model1; break;
      case 2: po.model = sim::CorrelationModelKind::Model2; break;
      default: fail(ErrorCode::InvalidArgument, "correlation model must be 0, 1 or 2");
    }
    po.correlations = {o.correlations[0], o.correlations[1], o.correlations[2]};
    po.n = o.n;
    po.replications = o.replications;
    po.seed = o.seed;
    po.workers = o.workers;
    po.gamma = o.gamma;
    const auto r = sim::propensity_correlation_study(po);
    if (bias_adjusted) *bias_adjusted = r.bias_adjusted;
    if (out)
      *out = duplicate(format == CS_FORMAT_CSV ? report::propensity_study_csv({r}) : report::propensity_study_table({r}));
  });
}

// ---- diagnostics ----

cs_diag_options cs_diag_options_default(void) { return cs_diag_options{0, 0.15}; }

cs_status cs_propensity_scores(const cs_dataset* dataset, double* scores, size_t length) {
  return guarded([&] {
    require(dataset, "dataset");
    require(scores, "scores");
    if (length != dataset->data.size()) fail(ErrorCode::InvalidArgument, "scores length must equal the record count");
    const auto s = diag::propensity_scores(dataset->data);
    std::copy(s.begin(), s.end(), scores);
  });
}

cs_status cs_diagnose(const cs_dataset* dataset, const cs_diag_options* options, cs_report** out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out, "out");
    const cs_diag_options o = options ? *options : cs_diag_options_default();
    diag::DiagnosticOptions d;
    d.method = o.spearman ? diag::CorrelationMethod::Spearman : diag::CorrelationMethod::Pearson;
    d.threshold = o.threshold;
    *out = new cs_report{diag::loo_correlation_table(dataset->data, d), o.threshold};
  });
}

size_t cs_report_size(const cs_report* report) { return report ? report->rows.size() : 0; }

int cs_report_flagged(const cs_report* report, size_t index) {
  return report && index < report->rows.size() && report->rows[index].flagged ? 1 : 0;
}

cs_status cs_report_render(const cs_report* r, cs_format format, char** out) {
  return guarded([&] {
    require(r, "report");
    require(out, "out");
    *out = duplicate(format == CS_FORMAT_CSV ? report::diagnostics_csv(r->rows)
                                             : report::diagnostics_table(r->rows, r->threshold));
  });
}

void cs_report_free(cs_report* report) { delete report; }

}  // extern "C"

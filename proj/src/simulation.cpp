#include "costsens/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/exponential_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include "costsens/censoring.hpp"
#include "costsens/config.hpp"
#include "costsens/error.hpp"
#include "costsens/glm.hpp"
#include "costsens/grid.hpp"
#include "costsens/normal.hpp"
#include "costsens/quadrature.hpp"
#include "costsens/rng.hpp"
#include "costsens/stats.hpp"

namespace costsens::sim {

namespace {

constexpr int kQuadratureNodes = 64;
constexpr std::uint32_t kStreamSynth = 0x5EED;

double expit(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

/// Draws one value from a confounder law.
double draw_confounder(const ConfounderLaw& law, PhiloxEngine& rng) {
  switch (law.family) {
    case ConfounderFamily::Bernoulli:
      return boost::random::bernoulli_distribution<double>(law.first)(rng) ? 1.0 : 0.0;
    case ConfounderFamily::Normal:
      return boost::random::normal_distribution<double>(law.first, law.second)(rng);
    case ConfounderFamily::Poisson:
      if (!(law.first > 0.0)) return 0.0;
      return static_cast<double>(boost::random::poisson_distribution<int, double>(law.first)(rng));
    case ConfounderFamily::Gamma:
      return boost::random::gamma_distribution<double>(law.first, law.second)(rng);
  }
  return 0.0;
}

/// Cost, censoring indicator and follow-up time for one subject.
CostRecord draw_outcome(double log_mean, double censor_prob, int arm, double z, PhiloxEngine& rng) {
  CostRecord r;
  r.treatment = arm;
  r.covariates = {z};
  const double mean_cost = std::exp(log_mean);
  r.cost = boost::random::gamma_distribution<double>(mean_cost, 1.0)(rng);
  r.uncensored = !boost::random::bernoulli_distribution<double>(censor_prob)(rng);
  if (r.uncensored)
    r.time = boost::random::exponential_distribution<double>(1.0 / 5.0)(rng);
  else
    r.time = boost::random::uniform_real_distribution<double>(0.0, 10.0)(rng);
  // Follow-up times must be strictly positive.
  if (!(r.time > 0.0)) r.time = std::numeric_limits<double>::min();
  return r;
}

ConfounderLaw cd_conditional_law(ConfounderFamily family, double z) {
  switch (family) {
    case ConfounderFamily::Bernoulli: return ConfounderLaw::bernoulli(expit(0.5 + 0.2 * z));
    case ConfounderFamily::Normal: return ConfounderLaw::normal(1.0 + 0.1 * z, 1.0);
    case ConfounderFamily::Poisson: return ConfounderLaw::poisson(std::max(0.9 + 0.1 * z, 0.0));
    case ConfounderFamily::Gamma: return ConfounderLaw::gamma(0.5, 0.65 + 0.2 * std::abs(z));
  }
  return {};
}

struct Fit {
  bool ok = false;
  double beta = 0.0;
  double se = 0.0;
};

Fit fit_treatment(const CostDataset& data, const std::vector<double>* extra, bool ipw, bool stratified,
                  bool model_variance) {
  Fit out;
  try {
    glm::DesignSpec spec = cost_design(data);
    if (extra) {
      const Eigen::Index p = spec.design.cols();
      spec.design.conservativeResize(Eigen::NoChange, p + 1);
      for (Eigen::Index i = 0; i < spec.design.rows(); ++i) spec.design(i, p) = (*extra)[static_cast<std::size_t>(i)];
    }
    if (ipw) {
      const auto w = ipw_weights(data, stratified);
      spec.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    }
    const glm::FitResult fit = glm::irls_fit(spec);
    if (!fit.converged) return out;
    const double var = model_variance ? fit.model_covariance(1, 1) : fit.covariance(1, 1);
    if (!(var > 0.0) || !std::isfinite(var) || !std::isfinite(fit.coefficients[1])) return out;
    out.ok = true;
    out.beta = fit.coefficients[1];
    out.se = std::sqrt(var);
  } catch (const Error&) {
    out.ok = false;
  }
  return out;
}

/// Runs body(i) for i in [0, count) on up to `workers` threads; rethrows the
/// first exception after all threads finish.
template <class Body>
void parallel_for(std::size_t count, unsigned workers, Body body) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::vector<double> column(const CostDataset& d, const std::vector<double>& u, int arm, bool want_u) {
  std::vector<double> out;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i].treatment == arm) out.push_back(want_u ? u[i] : d[i].covariates[0]);
  return out;
}

}  // namespace

const std::string& scenario_name(const Scenario& s) {
  return std::visit([](const auto& v) -> const std::string& { return v.name; }, s);
}

double scenario_beta(const Scenario& s) {
  return std::visit([](const auto& v) { return v.beta; }, s);
}

double scenario_censor_prob(const Scenario& s) {
  return std::visit([](const auto& v) { return v.censor_prob; }, s);
}

void validate_scenario(const Scenario& s) {
  auto check_common = [](double censor_prob, double alpha, double beta, double theta) {
    if (!(censor_prob >= 0.0 && censor_prob < 1.0)) fail(ErrorCode::InvalidArgument, "censor_prob must lie in [0, 1)");
    if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(theta))
      fail(ErrorCode::InvalidArgument, "alpha, beta and theta must be finite");
  };
  if (const auto* ci = std::get_if<CIScenario>(&s)) {
    check_common(ci->censor_prob, ci->alpha, ci->beta, ci->theta);
    if (ci->n_per_arm < 4) fail(ErrorCode::InvalidArgument, "n per arm must be at least 4");
    ci->confounder.validate();
    if (ci->confounder.gamma_control != ci->confounder.gamma_treated)
      fail(ErrorCode::InvalidArgument, "simulation scenarios use a common confounder effect");
  } else {
    const auto& cd = std::get<CDScenario>(s);
    check_common(cd.censor_prob, cd.alpha, cd.beta, cd.theta);
    if (cd.n < 20) fail(ErrorCode::InvalidArgument, "n must be at least 20");
    if (!std::isfinite(cd.phi1) || !std::isfinite(cd.phi2) || !std::isfinite(cd.phi3) || !std::isfinite(cd.gamma))
      fail(ErrorCode::InvalidArgument, "phi and gamma must be finite");
  }
}

SimulatedData generate_ci_dataset(const CIScenario& s, std::uint64_t seed, std::uint64_t replication) {
  validate_scenario(s);
  PhiloxEngine rng(seed, replication, 0);
  std::vector<CostRecord> records;
  SimulatedData out;
  records.reserve(2 * s.n_per_arm);
  out.u.reserve(2 * s.n_per_arm);
  for (int arm : {0, 1}) {
    const ConfounderLaw& law = arm == 0 ? s.confounder.control : s.confounder.treated;
    const double gamma = arm == 0 ? s.confounder.gamma_control : s.confounder.gamma_treated;
    for (std::size_t i = 0; i < s.n_per_arm; ++i) {
      const double u = draw_confounder(law, rng);
      const double z = boost::random::normal_distribution<double>(arm, 1.0)(rng);
      const double log_mean = s.alpha + s.beta * arm + gamma * u + s.theta * z;
      records.push_back(draw_outcome(log_mean, s.censor_prob, arm, z, rng));
      out.u.push_back(u);
    }
  }
  out.data = CostDataset(std::move(records), {"z"});
  return out;
}

SimulatedData generate_cd_dataset(const CDScenario& s, std::uint64_t seed, std::uint64_t replication) {
  validate_scenario(s);
  SimulatedData out;
  for (std::uint32_t stream = 0;; ++stream) {
    PhiloxEngine rng(seed, replication, stream);
    std::vector<CostRecord> records;
    std::vector<double> us;
    records.reserve(s.n);
    us.reserve(s.n);
    std::size_t treated = 0;
    for (std::size_t i = 0; i < s.n; ++i) {
      const double z = boost::random::normal_distribution<double>(1.0, 1.0)(rng);
      const double u = draw_confounder(cd_conditional_law(s.family, z), rng);
      const int arm = boost::random::bernoulli_distribution<double>(expit(s.phi1 + s.phi2 * z + s.phi3 * u))(rng) ? 1 : 0;
      treated += static_cast<std::size_t>(arm);
      const double log_mean = s.alpha + s.beta * arm + s.gamma * u + s.theta * z;
      records.push_back(draw_outcome(log_mean, s.censor_prob, arm, z, rng));
      us.push_back(u);
    }
    if (treated == 0 || treated == s.n) {
      if (stream > 1000) fail(ErrorCode::InvalidArgument, "scenario keeps producing an empty treatment arm");
      ++out.regenerations;
      continue;
    }
    out.data = CostDataset(std::move(records), {"z"});
    out.u = std::move(us);
    return out;
  }
}

ConfounderModel cd_marginal_model(const CDScenario& s) {
  validate_scenario(s);
  const QuadratureRule gh = gauss_hermite(kQuadratureNodes);
  const QuadratureRule gl = gauss_laguerre(kQuadratureNodes, 0.5);

  // mass[x] = P(X = x), first[x] = E[U 1{X = x}], both accumulated over z.
  double mass[2] = {0.0, 0.0};
  double first[2] = {0.0, 0.0};
  auto accumulate = [&](double weight, double z, double u) {
    const double p1 = expit(s.phi1 + s.phi2 * z + s.phi3 * u);
    mass[1] += weight * p1;
    mass[0] += weight * (1.0 - p1);
    first[1] += weight * p1 * u;
    first[0] += weight * (1.0 - p1) * u;
  };

  for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
    const double z = 1.0 + gh.nodes[i];
    const double wz = gh.weights[i];
    const ConfounderLaw law = cd_conditional_law(s.family, z);
    switch (s.family) {
      case ConfounderFamily::Bernoulli:
        accumulate(wz * law.first, z, 1.0);
        accumulate(wz * (1.0 - law.first), z, 0.0);
        break;
      case ConfounderFamily::Normal:
        for (std::size_t j = 0; j < gh.nodes.size(); ++j) accumulate(wz * gh.weights[j], z, law.first + gh.nodes[j]);
        break;
      case ConfounderFamily::Poisson: {
        const double lambda = law.first;
        double pk = std::exp(-lambda);
        for (int k = 0; k < 200 && (k <= lambda || pk > 1e-18); ++k) {
          accumulate(wz * pk, z, k);
          pk *= lambda / (k + 1);
        }
        break;
      }
      case ConfounderFamily::Gamma:
        for (std::size_t j = 0; j < gl.nodes.size(); ++j) accumulate(wz * gl.weights[j], z, law.second * gl.nodes[j]);
        break;
    }
  }
  if (!(mass[0] > 0.0) || !(mass[1] > 0.0)) fail(ErrorCode::InvalidArgument, "a treatment arm has zero probability");
  const double m0 = first[0] / mass[0];
  const double m1 = first[1] / mass[1];

  ConfounderModel m;
  m.gamma_control = m.gamma_treated = s.gamma;
  switch (s.family) {
    case ConfounderFamily::Bernoulli:
      m.control = ConfounderLaw::bernoulli(m0);
      m.treated = ConfounderLaw::bernoulli(m1);
      break;
    case ConfounderFamily::Normal:
      m.control = ConfounderLaw::normal(m0, 1.0);
      m.treated = ConfounderLaw::normal(m1, 1.0);
      break;
    case ConfounderFamily::Poisson:
      m.control = ConfounderLaw::poisson(m0);
      m.treated = ConfounderLaw::poisson(m1);
      break;
    case ConfounderFamily::Gamma:
      m.control = ConfounderLaw::gamma(0.5, m0 / 0.5);
      m.treated = ConfounderLaw::gamma(0.5, m1 / 0.5);
      break;
  }
  return m;
}

ConfounderModel adjustment_model(const Scenario& scenario) {
  if (const auto* ci = std::get_if<CIScenario>(&scenario)) return ci->confounder;
  return cd_marginal_model(std::get<CDScenario>(scenario));
}

VarianceChoice parse_variance(const std::string& name) {
  if (name == "auto") return VarianceChoice::Auto;
  if (name == "sandwich") return VarianceChoice::Sandwich;
  if (name == "model") return VarianceChoice::Model;
  fail(ErrorCode::InvalidArgument, "unknown variance '" + name + "' (auto, sandwich, model)");
}

std::string_view variance_name(VarianceChoice v) noexcept {
  switch (v) {
    case VarianceChoice::Auto: return "auto";
    case VarianceChoice::Sandwich: return "sandwich";
    case VarianceChoice::Model: return "model";
  }
  return "auto";
}

SimulationResult run_study(const Scenario& scenario, const StudyOptions& options) {
  validate_scenario(scenario);
  if (options.replications < 1) fail(ErrorCode::InvalidArgument, "replications must be at least 1");
  const double z = two_sided_z(options.level);
  const double beta = scenario_beta(scenario);
  const bool ipw = scenario_censor_prob(scenario) > 0.0;
  const bool model_variance = options.variance == VarianceChoice::Model ||
                              (options.variance == VarianceChoice::Auto && !ipw);
  const double corr = correction(adjustment_model(scenario));

  SimulationResult result;
  result.scenario = scenario_name(scenario);
  result.replications = options.replications;
  result.correction = corr;
  result.records.resize(options.replications);

  parallel_for(options.replications, options.workers, [&](std::size_t i) {
    const SimulatedData sim = std::holds_alternative<CIScenario>(scenario)
                                  ? generate_ci_dataset(std::get<CIScenario>(scenario), options.seed, i)
                                  : generate_cd_dataset(std::get<CDScenario>(scenario), options.seed, i);
    ReplicationRecord& rec = result.records[i];
    rec.replication = i;
    rec.regenerations = sim.regenerations;

    const Fit reduced = fit_treatment(sim.data, nullptr, ipw, options.stratified_censoring, model_variance);
    rec.converged = reduced.ok;
    if (reduced.ok) {
      rec.beta_star = reduced.beta;
      rec.se = reduced.se;
      rec.beta_adjusted = reduced.beta + corr;
      rec.covered_unadjusted = std::abs(rec.beta_star - beta) <= z * rec.se;
      rec.covered_adjusted = std::abs(rec.beta_adjusted - beta) <= z * rec.se;
    }
    const auto u1 = column(sim.data, sim.u, 1, true), z1 = column(sim.data, sim.u, 1, false);
    const auto u0 = column(sim.data, sim.u, 0, true), z0 = column(sim.data, sim.u, 0, false);
    rec.corr_treated = pearson(u1, z1);
    rec.corr_control = pearson(u0, z0);
    rec.max_abs_corr = std::max(std::isnan(rec.corr_treated) ? 0.0 : std::abs(rec.corr_treated),
                                std::isnan(rec.corr_control) ? 0.0 : std::abs(rec.corr_control));
    if (options.fit_true_model) {
      const Fit full = fit_treatment(sim.data, &sim.u, ipw, options.stratified_censoring, model_variance);
      rec.true_converged = full.ok;
      rec.beta_true_model = full.beta;
    }
  });

  // Deterministic reduction in replication order.
  std::vector<double> adjusted, unadjusted, ses, truth;
  double covered_adj = 0.0, covered_unadj = 0.0;
  double corr_t = 0.0, corr_c = 0.0;
  std::size_t corr_t_n = 0, corr_c_n = 0;
  for (const auto& rec : result.records) {
    result.regenerations += rec.regenerations;
    if (!std::isnan(rec.corr_treated)) { corr_t += rec.corr_treated; ++corr_t_n; }
    if (!std::isnan(rec.corr_control)) { corr_c += rec.corr_control; ++corr_c_n; }
    if (rec.true_converged) truth.push_back(rec.beta_true_model);
    if (!rec.converged) continue;
    adjusted.push_back(rec.beta_adjusted);
    unadjusted.push_back(rec.beta_star);
    ses.push_back(rec.se);
    covered_adj += rec.covered_adjusted;
    covered_unadj += rec.covered_unadjusted;
  }
  result.converged = adjusted.size();
  result.convergence_failures = result.replications - result.converged;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (result.converged > 0) {
    const double m = static_cast<double>(result.converged);
    result.mean_beta_adjusted = mean(adjusted);
    result.mean_beta_unadjusted = mean(unadjusted);
    result.bias_adjusted = result.mean_beta_adjusted - beta;
    result.bias_unadjusted = result.mean_beta_unadjusted - beta;
    result.coverage_adjusted = covered_adj / m;
    result.coverage_unadjusted = covered_unadj / m;
    result.sd_beta_adjusted = sample_sd(adjusted);
    result.mean_se = mean(ses);
    result.mc_standard_error = result.sd_beta_adjusted / std::sqrt(m);
  } else {
    result.mean_beta_adjusted = result.mean_beta_unadjusted = nan;
    result.bias_adjusted = result.bias_unadjusted = nan;
    result.coverage_adjusted = result.coverage_unadjusted = nan;
    result.sd_beta_adjusted = result.mean_se = result.mc_standard_error = nan;
  }
  result.mean_corr_treated = corr_t_n ? corr_t / static_cast<double>(corr_t_n) : nan;
  result.mean_corr_control = corr_c_n ? corr_c / static_cast<double>(corr_c_n) : nan;
  result.max_within_stratum_corr = std::max(corr_t_n ? std::abs(result.mean_corr_treated) : 0.0,
                                            corr_c_n ? std::abs(result.mean_corr_control) : 0.0);
  result.true_model_converged = truth.size();
  if (!truth.empty()) {
    result.mean_beta_true_model = mean(truth);
    result.mc_se_true_model = sample_sd(truth) / std::sqrt(static_cast<double>(truth.size()));
  } else {
    result.mean_beta_true_model = result.mc_se_true_model = nan;
  }
  return result;
}

// --- presets and scenario files ---

std::vector<std::string> ci_preset_names() {
  return {"ci-bernoulli", "ci-normal", "ci-poisson", "ci-gamma", "ci-gamma-common-shape"};
}

ConfounderModel ci_preset(const std::string& name, double gamma) {
  ConfounderModel m;
  if (name == "ci-bernoulli") {
    m.control = ConfounderLaw::bernoulli(0.3);
    m.treated = ConfounderLaw::bernoulli(0.866);
  } else if (name == "ci-normal") {
    m.control = ConfounderLaw::normal(0.0, 1.0);
    m.treated = ConfounderLaw::normal(1.0, 1.0);
  } else if (name == "ci-poisson") {
    m.control = ConfounderLaw::poisson(1.0);
    m.treated = ConfounderLaw::poisson(1.58);
  } else if (name == "ci-gamma") {
    // Same arm means as the literal footnote values, with shape and scale roles exchanged.
    m.control = ConfounderLaw::gamma(0.5, 0.75);
    m.treated = ConfounderLaw::gamma(0.868, 0.75);
  } else if (name == "ci-gamma-common-shape") {
    m.control = ConfounderLaw::gamma(0.75, 0.5);
    m.treated = ConfounderLaw::gamma(0.75, 0.868);
  } else {
    std::string list;
    for (const auto& n : ci_preset_names()) list += (list.empty() ? "" : ", ") + n;
    fail(ErrorCode::Config, "unknown preset '" + name + "' (" + list + ")");
  }
  m.gamma_control = m.gamma_treated = gamma;
  return m;
}

namespace {

const std::vector<std::string> kScenarioKeys = {
    "name", "kind", "preset", "family", "gamma", "n", "censor_prob", "alpha", "beta", "theta", "phi1", "phi2", "phi3",
    "pi0", "pi1", "mu0", "mu1", "sigma", "sd0", "sd1", "lambda0", "lambda1", "shape0", "scale0", "shape1", "scale1"};

std::size_t parse_count(const std::string& text, const char* what) {
  const double v = parse_config_number(text, what);
  if (!(v >= 1.0) || v != std::floor(v) || v > 1e9) fail(ErrorCode::Config, std::string(what) + " must be a positive integer");
  return static_cast<std::size_t>(v);
}

Scenario scenario_from_point(const ConfigPoint& point, int line) {
  std::map<std::string, std::string> v;
  std::string label;
  for (const auto& [k, val] : point) v[k] = val;
  auto has = [&](const char* k) { return v.count(k) > 0; };
  auto num = [&](const char* k, double fallback) { return has(k) ? parse_config_number(v[k], k) : fallback; };
  const std::string kind = has("kind") ? v["kind"] : "ci";
  const std::string name = has("name") ? v["name"] : (has("preset") ? v["preset"] : "scenario");

  // The displayed name carries the varied values so expanded rows stay distinct.
  std::string suffix;
  for (const auto& [k, val] : point)
    if (k != "name" && k != "kind" && k != "preset" && k != "family") suffix += " " + k + "=" + val;

  if (kind == "ci") {
    for (const char* k : {"phi1", "phi2", "phi3"})
      if (has(k)) fail(ErrorCode::Config, "line " + std::to_string(line) + ": " + k + " applies to kind = cd only");
    CIScenario s;
    s.name = name + suffix;
    s.n_per_arm = has("n") ? parse_count(v["n"], "n") : 100;
    s.alpha = num("alpha", 5.0);
    s.beta = num("beta", 1.0);
    s.theta = num("theta", 1.0);
    s.censor_prob = num("censor_prob", 0.0);
    const double gamma = num("gamma", 0.0);
    if (has("preset")) {
      for (const char* k : {"family", "pi0", "pi1", "mu0", "mu1", "sigma", "sd0", "sd1", "lambda0", "lambda1", "shape0",
                            "scale0", "shape1", "scale1"})
        if (has(k)) fail(ErrorCode::Config, "line " + std::to_string(line) + ": preset and '" + k + "' are exclusive");
      s.confounder = ci_preset(v["preset"], gamma);
    } else {
      if (!has("family")) fail(ErrorCode::Config, "line " + std::to_string(line) + ": scenario needs a family or preset");
      const ConfounderFamily family = parse_family(v["family"]);
      std::vector<std::pair<std::string, std::string>> pairs;
      for (const auto& [k, val] : point)
        if (k == "pi0" || k == "pi1" || k == "mu0" || k == "mu1" || k == "sigma" || k == "sd0" || k == "sd1" ||
            k == "lambda0" || k == "lambda1" || k == "shape0" || k == "scale0" || k == "shape1" || k == "scale1")
          pairs.emplace_back(k, val);
      pairs.emplace_back("gamma", format_double(gamma));
      s.confounder = model_from_pairs(family, pairs);
    }
    return s;
  }
  if (kind == "cd") {
    for (const char* k : {"preset", "pi0", "pi1", "mu0", "mu1", "sigma", "sd0", "sd1", "lambda0", "lambda1", "shape0",
                          "scale0", "shape1", "scale1"})
      if (has(k)) fail(ErrorCode::Config, "line " + std::to_string(line) + ": '" + k + "' applies to kind = ci only");
    if (!has("family")) fail(ErrorCode::Config, "line " + std::to_string(line) + ": scenario needs a family");
    CDScenario s;
    s.name = name + suffix;
    s.family = parse_family(v["family"]);
    s.n = has("n") ? parse_count(v["n"], "n") : 500;
    s.alpha = num("alpha", 5.0);
    s.beta = num("beta", 1.0);
    s.theta = num("theta", 1.0);
    s.censor_prob = num("censor_prob", 0.0);
    s.gamma = num("gamma", 0.0);
    s.phi1 = num("phi1", 0.0);
    s.phi2 = num("phi2", 0.0);
    s.phi3 = num("phi3", 0.0);
    return s;
  }
  fail(ErrorCode::Config, "line " + std::to_string(line) + ": kind must be ci or cd, got '" + kind + "'");
}

}  // namespace

std::vector<Scenario> parse_scenario_config(const std::string& text) {
  std::vector<Scenario> out;
  for (const auto& section : parse_config(text)) {
    if (section.name != "scenario")
      fail(ErrorCode::Config, "line " + std::to_string(section.line) + ": unknown section [" + section.name + "]");
    check_known_keys(section, kScenarioKeys);
    for (const auto& point : expand_section(section)) {
      Scenario s = scenario_from_point(point, section.line);
      try {
        validate_scenario(s);
      } catch (const Error& e) {
        fail(ErrorCode::Config, "line " + std::to_string(section.line) + ": " + e.what());
      }
      out.push_back(std::move(s));
    }
  }
  if (out.empty()) fail(ErrorCode::Config, "no [scenario] sections");
  return out;
}

std::vector<Scenario> load_scenario_config(const std::filesystem::path& path) {
  return parse_scenario_config(read_text_file(path));
}

// --- propensity-score correlation study ---

PropensityStudyResult propensity_correlation_study(const PropensityStudyOptions& o) {
  if (o.n < 100) fail(ErrorCode::InvalidArgument, "propensity study needs n >= 100");
  if (o.replications < 1) fail(ErrorCode::InvalidArgument, "replications must be at least 1");
  std::array<double, 3> c = o.correlations;
  if (o.model == CorrelationModelKind::Model1) c = {0.1, 0.1, 0.1};
  if (o.model == CorrelationModelKind::Model2) c = {0.3, -0.4, 0.0};

  Eigen::Matrix4d corr = Eigen::Matrix4d::Identity();
  for (int j = 0; j < 3; ++j) corr(0, j + 1) = corr(j + 1, 0) = c[static_cast<std::size_t>(j)];
  Eigen::LLT<Eigen::Matrix4d> llt(corr);
  if (llt.info() != Eigen::Success || !(1.0 - c[0] * c[0] - c[1] * c[1] - c[2] * c[2] > 0.0))
    fail(ErrorCode::CorrelationModel, "correlations (" + format_double(c[0]) + ", " + format_double(c[1]) + ", " +
                                          format_double(c[2]) + ") do not give a positive definite matrix");
  const Eigen::Matrix4d chol = llt.matrixL();

  // Per-arm E[exp(gamma U)] exactly: X depends on (U, S = Z1 + Z2 + Z3) only,
  // and (U, S) is bivariate normal with Var S = 3, Cov(U, S) = sum c.
  const double cs = c[0] + c[1] + c[2];
  const QuadratureRule gh = gauss_hermite(kQuadratureNodes);
  double mass[2] = {0, 0}, mgf[2] = {0, 0};
  for (std::size_t i = 0; i < gh.nodes.size(); ++i)
    for (std::size_t j = 0; j < gh.nodes.size(); ++j) {
      const double u = gh.nodes[i];
      const double s = 3.0 + cs * u + std::sqrt(3.0 - cs * cs) * gh.nodes[j];
      const double w = gh.weights[i] * gh.weights[j];
      const double p1 = expit(o.phi[0] + o.phi[1] * s + o.phi[2] * u);
      const double e = std::exp(o.gamma * u);
      mass[1] += w * p1;
      mass[0] += w * (1 - p1);
      mgf[1] += w * p1 * e;
      mgf[0] += w * (1 - p1) * e;
    }
  const double corr_term = std::log(mgf[0] / mass[0]) - std::log(mgf[1] / mass[1]);

  struct Rep {
    bool ok = false;
    double beta = 0, ct = 0, cc = 0;
  };
  std::vector<Rep> reps(o.replications);
  parallel_for(o.replications, o.workers, [&](std::size_t r) {
    PhiloxEngine rng(o.seed, r, 0);
    boost::random::normal_distribution<double> std_normal(0.0, 1.0);
    const auto n = static_cast<Eigen::Index>(o.n);
    Eigen::VectorXd y(n), u(n), x(n);
    Eigen::MatrixXd zmat(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Vector4d e;
      for (int k = 0; k < 4; ++k) e[k] = std_normal(rng);
      const Eigen::Vector4d v = chol * e;
      u[i] = v[0];
      for (int k = 0; k < 3; ++k) zmat(i, k) = 1.0 + v[k + 1];
      const double s = zmat.row(i).sum();
      x[i] = boost::random::bernoulli_distribution<double>(expit(o.phi[0] + o.phi[1] * s + o.phi[2] * u[i]))(rng) ? 1 : 0;
      y[i] = boost::random::gamma_distribution<double>(std::exp(5.0 + x[i] + o.gamma * u[i] + s), 1.0)(rng);
    }
    Rep& out = reps[r];
    try {
      glm::DesignSpec cost;
      cost.family = glm::Family::LogGamma;
      cost.response = y;
      cost.weights = Eigen::VectorXd::Ones(n);
      cost.design.resize(n, 5);
      cost.design << Eigen::VectorXd::Ones(n), x, zmat;
      const auto fit = glm::irls_fit(cost);
      glm::DesignSpec ps;
      ps.family = glm::Family::LogitBinomial;
      ps.response = x;
      ps.weights = Eigen::VectorXd::Ones(n);
      ps.design.resize(n, 4);
      ps.design << Eigen::VectorXd::Ones(n), zmat;
      const auto pfit = glm::irls_fit(ps);
      if (!fit.converged || !pfit.converged) return;
      const Eigen::VectorXd score = (ps.design * pfit.coefficients).unaryExpr([](double eta) { return expit(eta); });
      std::vector<double> ut, et, uc, ec;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (x[i] == 1) { ut.push_back(u[i]); et.push_back(score[i]); }
        else { uc.push_back(u[i]); ec.push_back(score[i]); }
      }
      out.beta = fit.coefficients[1];
      out.ct = pearson(ut, et);
      out.cc = pearson(uc, ec);
      out.ok = std::isfinite(out.ct) && std::isfinite(out.cc);
    } catch (const Error&) {
      out.ok = false;
    }
  });

  PropensityStudyResult res;
  res.correlations = c;
  res.replications = o.replications;
  res.correction = corr_term;
  std::vector<double> betas;
  double ct = 0, cc = 0;
  for (const auto& r : reps) {
    if (!r.ok) { ++res.failures; continue; }
    betas.push_back(r.beta);
    ct += r.ct;
    cc += r.cc;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (betas.empty()) {
    res.mean_corr_treated = res.mean_corr_control = res.mean_beta_unadjusted = res.mean_beta_adjusted = nan;
    res.bias_unadjusted = res.bias_adjusted = res.mc_standard_error = nan;
    return res;
  }
  const double m = static_cast<double>(betas.size());
  res.mean_corr_treated = ct / m;
  res.mean_corr_control = cc / m;
  res.mean_beta_unadjusted = mean(betas);
  res.mean_beta_adjusted = res.mean_beta_unadjusted + corr_term;
  res.bias_unadjusted = res.mean_beta_unadjusted - 1.0;
  res.bias_adjusted = res.mean_beta_adjusted - 1.0;
  res.mc_standard_error = sample_sd(betas) / std::sqrt(m);
  return res;
}

// --- synthetic registry-like data ---

CostDataset synth_registry_cohort(std::uint64_t seed) {
  constexpr std::size_t kRecords = 1860;
  constexpr std::size_t kTreated = 420;   // 1440 controls, 77.4%
  constexpr std::size_t kCensored = 725;  // 39.0%
  constexpr double kShape = 2.8;
  PhiloxEngine rng(seed, 0, kStreamSynth);
  boost::random::normal_distribution<double> std_normal;
  auto bern = [&](double p) { return boost::random::bernoulli_distribution<double>(p)(rng) ? 1.0 : 0.0; };
  auto categorical = [&](std::initializer_list<double> probs) {
    double u = boost::random::uniform_real_distribution<double>(0.0, 1.0)(rng);
    int k = 0;
    for (double p : probs) {
      if (u < p) return k;
      u -= p;
      ++k;
    }
    return k - 1;
  };

  const std::vector<std::string> names = {
      "grade=1", "grade=3", "grade=4", "grade=5", "male", "race=black", "race=other", "hispanic",
      "marital=unmarried", "marital=unknown", "age", "income", "urban=2", "urban=3", "comorb=1", "comorb=2+",
      "year", "site=2", "site=3", "site=4", "site=5"};
  // Log-cost effects of the covariates above.
  const std::vector<double> effects = {-0.05, 0.04, 0.08, 0.06, 0.05, 0.10, -0.03, 0.04, 0.02, -0.04, 0.006,
                                       0.01, 0.03, 0.06, 0.08, 0.20, 0.02, -0.05, 0.04, 0.07, -0.02};
  // Treatment propensity (logit) effects; older, frailer, unmarried patients lean to rad/chemo.
  const std::vector<double> propensity = {0.0, 0.1, -0.1, 0.0, -0.2, 0.2, 0.1, 0.1, 0.3, 0.2, 0.07,
                                          0.02, -0.1, -0.2, 0.1, 0.3, 0.03, 0.1, -0.1, 0.2, 0.0};

  std::vector<std::vector<double>> cov(kRecords);
  std::vector<double> keys(kRecords);
  for (std::size_t i = 0; i < kRecords; ++i) {
    const int grade = categorical({0.05, 0.15, 0.35, 0.35, 0.10}) + 1;
    const double male = bern(0.78);
    const int race = categorical({0.88, 0.07, 0.05});
    const double hispanic = bern(0.04);
    const int marital = categorical({0.58, 0.37, 0.05});
    const double age = 65.0 + std::round(std::abs(9.0 * std_normal(rng)));
    const double income = std::exp(1.5 + 0.35 * std_normal(rng));
    const int urban = categorical({0.55, 0.30, 0.15});
    const int comorb = categorical({0.50, 0.28, 0.22});
    const double year = static_cast<double>(boost::random::uniform_int_distribution<int>(-5, 5)(rng));
    const int site = categorical({0.30, 0.20, 0.20, 0.15, 0.15});
    auto is = [](int value, int level) { return value == level ? 1.0 : 0.0; };
    std::vector<double> z = {is(grade, 1),   is(grade, 3),  is(grade, 4),    is(grade, 5),     male,
                             is(race, 1),    is(race, 2),   hispanic,        is(marital, 1),   is(marital, 2),
                             age - 75.0,     income,        is(urban, 1),    is(urban, 2),     is(comorb, 1),
                             is(comorb, 2),  year,          is(site, 1),     is(site, 2),      is(site, 3),
                             is(site, 4)};
    double eta = -1.4;
    for (std::size_t j = 0; j < z.size(); ++j) eta += propensity[j] * z[j];
    // Weighted sampling without replacement: the kTreated largest keys u^(1/w).
    const double w = std::exp(eta);
    keys[i] = std::log(boost::random::uniform_real_distribution<double>(0.0, 1.0)(rng) + 1e-300) / w;
    cov[i] = std::move(z);
  }
  std::vector<std::size_t> order(kRecords);
  for (std::size_t i = 0; i < kRecords; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] > keys[b]; });
  std::vector<int> treat(kRecords, 0);
  for (std::size_t k = 0; k < kTreated; ++k) treat[order[k]] = 1;

  // Exactly kCensored censored records, independent of everything else.
  std::vector<std::size_t> perm(kRecords);
  for (std::size_t i = 0; i < kRecords; ++i) perm[i] = i;
  for (std::size_t i = kRecords - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(boost::random::uniform_int_distribution<std::size_t>(0, i)(rng));
    std::swap(perm[i], perm[j]);
  }
  std::vector<bool> censored(kRecords, false);
  for (std::size_t k = 0; k < kCensored; ++k) censored[perm[k]] = true;

  std::vector<CostRecord> records(kRecords);
  for (std::size_t i = 0; i < kRecords; ++i) {
    double eta = std::log(40000.0) + std::log(0.873) * treat[i];
    for (std::size_t j = 0; j < effects.size(); ++j) eta += effects[j] * cov[i][j];
    CostRecord& r = records[i];
    r.treatment = treat[i];
    r.covariates = cov[i];
    r.uncensored = !censored[i];
    const double full = boost::random::gamma_distribution<double>(kShape, std::exp(eta) / kShape)(rng);
    if (r.uncensored) {
      r.time = boost::random::exponential_distribution<double>(1.0 / 5.0)(rng);
      r.cost = full;
    } else {
      r.time = boost::random::uniform_real_distribution<double>(0.0, 10.0)(rng);
      r.cost = full * boost::random::uniform_real_distribution<double>(0.0, 1.0)(rng);
    }
    if (!(r.time > 0.0)) r.time = std::numeric_limits<double>::min();
    r.time = std::round(r.time * 1e6) / 1e6 + 1e-6;
    r.cost = std::round(r.cost * 100.0) / 100.0;
  }
  // Two uncensored controls with zero recorded payments.
  int zeros = 0;
  for (std::size_t k = kCensored; k < kRecords && zeros < 2; ++k) {
    CostRecord& r = records[perm[k]];
    if (r.treatment == 0) {
      r.cost = 0.0;
      ++zeros;
    }
  }
  for (auto& r : records)
    for (double& v : r.covariates) v = std::round(v * 1e4) / 1e4;
  return CostDataset(std::move(records), names);
}

}  // namespace costsens::sim

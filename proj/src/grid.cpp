#include "costsens/grid.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "costsens/config.hpp"
#include "costsens/error.hpp"

namespace costsens {

namespace {

const std::vector<std::string> kEffectKeys = {"effect", "effect0", "effect1", "gamma", "gamma0", "gamma1"};

std::vector<std::string> family_keys(ConfounderFamily family) {
  switch (family) {
    case ConfounderFamily::Bernoulli: return {"pi0", "pi1"};
    case ConfounderFamily::Normal: return {"mu0", "mu1", "sigma", "sd0", "sd1"};
    case ConfounderFamily::Poisson: return {"lambda0", "lambda1"};
    case ConfounderFamily::Gamma: return {"shape0", "scale0", "shape1", "scale1", "mean_ratio", "var_mean"};
  }
  return {};
}

std::vector<std::string> grid_keys(ConfounderFamily family) {
  auto keys = family_keys(family);
  keys.insert(keys.end(), kEffectKeys.begin(), kEffectKeys.end());
  return keys;
}

}  // namespace

ConfounderModel model_from_pairs(ConfounderFamily family, const std::vector<std::pair<std::string, std::string>>& pairs,
                                 GammaNormalization normalization) {
  std::map<std::string, double> v;
  for (const auto& [key, value] : pairs) v[key] = parse_config_number(value, key);
  auto has = [&](const char* k) { return v.count(k) > 0; };
  auto need = [&](const char* k) {
    if (!has(k)) fail(ErrorCode::Config, std::string("missing key '") + k + "' for " + std::string(family_name(family)));
    return v.at(k);
  };

  std::vector<std::string> allowed = grid_keys(family);
  for (const auto& [key, value] : v)
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      fail(ErrorCode::Config, "unknown key '" + key + "' for " + std::string(family_name(family)));

  // Effects: one multiplicative or log-scale value shared, or one per arm.
  const int forms = has("effect") + has("gamma") + (has("effect0") || has("effect1")) + (has("gamma0") || has("gamma1"));
  if (forms != 1) fail(ErrorCode::Config, "give exactly one of effect, gamma, effect0/effect1, gamma0/gamma1");
  auto log_effect = [&](const char* k) {
    const double e = need(k);
    if (!(e > 0.0)) fail(ErrorCode::Config, std::string(k) + " must be > 0 (multiplicative effect)");
    return std::log(e);
  };
  double g0 = 0.0, g1 = 0.0;
  if (has("effect")) g0 = g1 = log_effect("effect");
  else if (has("gamma")) g0 = g1 = v.at("gamma");
  else if (has("effect0") || has("effect1")) { g0 = log_effect("effect0"); g1 = log_effect("effect1"); }
  else { g0 = need("gamma0"); g1 = need("gamma1"); }

  ConfounderModel m;
  switch (family) {
    case ConfounderFamily::Bernoulli:
      m.control = ConfounderLaw::bernoulli(need("pi0"));
      m.treated = ConfounderLaw::bernoulli(need("pi1"));
      break;
    case ConfounderFamily::Normal: {
      if (has("sigma") && (has("sd0") || has("sd1"))) fail(ErrorCode::Config, "give sigma or sd0/sd1, not both");
      const double s0 = has("sigma") ? v.at("sigma") : (has("sd0") ? v.at("sd0") : 1.0);
      const double s1 = has("sigma") ? v.at("sigma") : (has("sd1") ? v.at("sd1") : 1.0);
      m.control = ConfounderLaw::normal(need("mu0"), s0);
      m.treated = ConfounderLaw::normal(need("mu1"), s1);
      break;
    }
    case ConfounderFamily::Poisson:
      m.control = ConfounderLaw::poisson(need("lambda0"));
      m.treated = ConfounderLaw::poisson(need("lambda1"));
      break;
    case ConfounderFamily::Gamma:
      if (has("mean_ratio") || has("var_mean")) {
        if (has("shape0") || has("shape1") || has("scale0") || has("scale1"))
          fail(ErrorCode::Config, "give mean_ratio/var_mean or shape/scale per arm, not both");
        if (g0 != g1) fail(ErrorCode::Config, "mean_ratio/var_mean grids need a common effect");
        m = gamma_ratio_model(need("mean_ratio"), need("var_mean"), std::exp(g0), normalization);
      } else {
        m.control = ConfounderLaw::gamma(need("shape0"), need("scale0"));
        m.treated = ConfounderLaw::gamma(need("shape1"), need("scale1"));
      }
      break;
  }
  m.gamma_control = g0;
  m.gamma_treated = g1;
  m.validate();
  return m;
}

SweepConfig parse_sweep_config(const std::string& text) {
  const auto sections = parse_config(text);
  SweepConfig cfg;
  const ConfigSection* head = nullptr;
  for (const auto& s : sections) {
    if (s.name == "sweep") {
      if (head) fail(ErrorCode::Config, "line " + std::to_string(s.line) + ": duplicate [sweep] section");
      head = &s;
    } else if (s.name != "grid") {
      fail(ErrorCode::Config, "line " + std::to_string(s.line) + ": unknown section [" + s.name + "]");
    }
  }
  if (!head) fail(ErrorCode::Config, "missing [sweep] section");
  check_known_keys(*head, {"family", "beta_star", "se", "level", "cost_ratio", "ci_low", "ci_high", "normalization"});
  const auto* fam = head->find("family");
  if (!fam) fail(ErrorCode::Config, "[sweep] needs a family");
  cfg.family = parse_family(fam->value);
  if (const auto* n = head->find("normalization")) {
    if (cfg.family != ConfounderFamily::Gamma) fail(ErrorCode::Config, "normalization applies to the gamma family only");
    cfg.normalization = parse_normalization(n->value);
  }

  double level = 0.95;
  if (const auto* l = head->find("level")) level = parse_config_number(l->value, "level");
  const bool direct = head->find("beta_star") || head->find("se");
  const bool from_ci = head->find("cost_ratio") || head->find("ci_low") || head->find("ci_high");
  if (direct && from_ci) fail(ErrorCode::Config, "give beta_star/se or cost_ratio/ci_low/ci_high, not both");
  auto number = [&](const char* key) {
    const auto* e = head->find(key);
    if (!e) fail(ErrorCode::Config, std::string("[sweep] missing ") + key);
    return parse_config_number(e->value, key);
  };
  if (direct) cfg.apparent = ApparentEffect{number("beta_star"), number("se"), level};
  if (from_ci)
    cfg.apparent = ApparentEffect::from_cost_ratio_ci(number("cost_ratio"), number("ci_low"), number("ci_high"), level);
  if (cfg.apparent && !(cfg.apparent->se > 0.0)) fail(ErrorCode::Config, "[sweep] se must be > 0");

  for (const auto& s : sections) {
    if (s.name != "grid") continue;
    check_known_keys(s, grid_keys(cfg.family));
    for (const auto& point : expand_section(s)) {
      GridEntry entry;
      for (const auto& [k, val] : point) entry.label += (entry.label.empty() ? "" : " ") + k + "=" + val;
      try {
        entry.model = model_from_pairs(cfg.family, point, cfg.normalization);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::Config) throw Error(ErrorCode::Config, "line " + std::to_string(s.line) + ": " + e.what());
        if (e.code() != ErrorCode::InvalidArgument) throw;
        throw Error(ErrorCode::Config, "line " + std::to_string(s.line) + " (" + entry.label + "): " + e.what());
      }
      cfg.grid.push_back(std::move(entry));
    }
  }
  return cfg;
}

SweepConfig load_sweep_config(const std::filesystem::path& path) { return parse_sweep_config(read_text_file(path)); }

}  // namespace costsens

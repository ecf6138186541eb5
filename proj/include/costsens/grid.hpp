#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "costsens/sensitivity.hpp"

namespace costsens {

/// A sweep file: one [sweep] section and one or more [grid] sections.
///
///   [sweep]
///   family = bernoulli
///   beta_star = -0.1358   # or cost_ratio/ci_low/ci_high
///   [grid]
///   effect = 1.1, 1.25          # outermost
///   pi0/pi1 = 0.7/0.5, 0.8/0.4  # varied together
///
/// Effects are multiplicative ("effect", "effect0", "effect1") or log-scale
/// ("gamma", "gamma0", "gamma1"). Family keys: bernoulli pi0 pi1; normal mu0
/// mu1 sigma (or sd0 sd1); poisson lambda0 lambda1; gamma shape0 scale0 shape1
/// scale1, or mean_ratio var_mean with the [sweep] normalization.
struct SweepConfig {
  ConfounderFamily family = ConfounderFamily::Bernoulli;
  std::optional<ApparentEffect> apparent;
  GammaNormalization normalization = GammaNormalization::TreatedMean;
  std::vector<GridEntry> grid;
};

SweepConfig parse_sweep_config(const std::string& text);
SweepConfig load_sweep_config(const std::filesystem::path& path);

/// Builds one model from "key=value" pairs as used in grid files and by the
/// CLI's --confounder option.
ConfounderModel model_from_pairs(ConfounderFamily family, const std::vector<std::pair<std::string, std::string>>& pairs,
                                 GammaNormalization normalization = GammaNormalization::TreatedMean);

}  // namespace costsens

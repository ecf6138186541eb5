#pragma once

#include <string>
#include <vector>

#include "costsens/diagnostics.hpp"
#include "costsens/glm.hpp"
#include "costsens/sensitivity.hpp"
#include "costsens/simulation.hpp"

namespace costsens::report {

/// CSV cells use the shortest round-trip form; NaN prints as "NA".
std::string csv_number(double value);
/// Fixed decimals; NaN prints as "NA".
std::string fixed(double value, int decimals);
/// Quotes a CSV cell when it holds a comma, quote or newline.
std::string csv_cell(const std::string& text);

struct FitSummary {
  glm::FitResult fit;
  std::vector<std::string> names;  // coefficient labels
  std::size_t records = 0;
  std::size_t uncensored = 0;
  double censoring_rate = 0.0;
  bool ipw = true;
  bool model_variance = false;  // false: sandwich
  double level = 0.95;
};

std::string fit_csv(const FitSummary& s);
std::string fit_table(const FitSummary& s);

std::string sweep_csv(const ApparentEffect& apparent, ConfounderFamily family, const std::vector<SweepRow>& rows);
/// Cost ratios to 2 decimals; '*' marks a change of significance. `note`
/// (e.g. the gamma normalization convention) is printed under the table.
std::string sweep_table(const ApparentEffect& apparent, ConfounderFamily family, const std::vector<SweepRow>& rows,
                        const std::string& note = {});

std::string simulation_csv(const std::vector<sim::SimulationResult>& results);
std::string simulation_table(const std::vector<sim::SimulationResult>& results);
/// Long format, one line per replication, for bias/coverage-vs-correlation plots.
std::string replications_csv(const std::vector<sim::SimulationResult>& results);

std::string propensity_study_csv(const std::vector<sim::PropensityStudyResult>& results);
std::string propensity_study_table(const std::vector<sim::PropensityStudyResult>& results);

std::string diagnostics_csv(const std::vector<diag::CorrelationReport>& rows);
std::string diagnostics_table(const std::vector<diag::CorrelationReport>& rows, double threshold);

}  // namespace costsens::report

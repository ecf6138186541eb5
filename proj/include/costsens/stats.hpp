#pragma once

#include <span>
#include <vector>

namespace costsens {

/// Pearson correlation; NaN when fewer than 3 pairs or either side is constant.
double pearson(std::span<const double> x, std::span<const double> y);

/// Mid-ranks (ties share their average rank), 1-based.
std::vector<double> midranks(std::span<const double> x);

/// Pearson correlation of mid-ranks.
double spearman(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> x);
/// Sample standard deviation (n - 1); 0 for fewer than 2 values.
double sample_sd(std::span<const double> x);

}  // namespace costsens

#pragma once

namespace costsens {

/// Standard normal distribution function.
double normal_cdf(double x) noexcept;

/// Inverse of normal_cdf on (0, 1); -inf / +inf at the endpoints, NaN outside.
double normal_quantile(double p) noexcept;

/// Two-sided critical value z_{1-(1-level)/2}; level must lie in (0, 1).
double two_sided_z(double level);

}  // namespace costsens

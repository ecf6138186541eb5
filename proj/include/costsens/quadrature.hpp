#pragma once

#include <vector>

namespace costsens {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 1: the rule integrates against a probability law
};

/// n-point Gauss-Hermite rule for E[f(Z)], Z ~ Normal(0, 1).
QuadratureRule gauss_hermite(int n);

/// n-point generalized Gauss-Laguerre rule for E[f(T)], T ~ Gamma(shape, 1).
QuadratureRule gauss_laguerre(int n, double shape);

}  // namespace costsens

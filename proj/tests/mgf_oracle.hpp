#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>

#include "costsens/sensitivity.hpp"

namespace testing {

/// ln E[exp(gamma U)] by direct summation or numerical integration.
inline double oracle_log_mgf(const costsens::ConfounderLaw& law, double g) {
  switch (law.family) {
    case costsens::ConfounderFamily::Bernoulli:
      return std::log((1.0 - law.first) + law.first * std::exp(g));
    case costsens::ConfounderFamily::Poisson: {
      // Terms of sum_k e^{-l} l^k e^{gk} / k!, accumulated in log space.
      double total = 0.0;
      const double lg = std::log(law.first) + g;
      for (int k = 0; k < 400; ++k) total += std::exp(-law.first + k * lg - std::lgamma(k + 1.0));
      return std::log(total);
    }
    case costsens::ConfounderFamily::Normal: {
      const double mu = law.first, sd = law.second;
      auto f = [&](double z) {
        return std::exp(g * (mu + sd * z) - 0.5 * z * z) / std::sqrt(2.0 * M_PI);
      };
      const double c = g * sd;  // integrand peaks at z = c
      return std::log(boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, c - 40.0, c + 40.0, 15, 1e-14));
    }
    case costsens::ConfounderFamily::Gamma: {
      const double k = law.first, th = law.second;
      const double rate = 1.0 / th - g;  // > 0 inside the domain
      auto f = [&](double u) {
        return std::exp((k - 1.0) * std::log(u) - u * rate - std::lgamma(k) - k * std::log(th));
      };
      boost::math::quadrature::tanh_sinh<double> ts;
      const double upper = (k + 80.0 * std::sqrt(k) + 80.0) / rate;
      return std::log(ts.integrate(f, 0.0, upper, 1e-15));
    }
  }
  return NAN;
}

}  // namespace testing

#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>

namespace costsens::glm {

/// LogGamma: log link, Gamma variance (cost regression).
/// LogitBinomial: logit link, binomial variance (propensity scores).
enum class Family { LogGamma, LogitBinomial };

struct DesignSpec {
  Eigen::VectorXd response;
  Eigen::MatrixXd design;  // n x p, first column the intercept
  Eigen::VectorXd weights;
  Family family = Family::LogGamma;
};

struct FitResult {
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd covariance;        // sandwich
  Eigen::MatrixXd model_covariance;  // dispersion * inverse expected information
  bool converged = false;
  int iterations = 0;
  std::size_t n_effective = 0;
  double deviance = 0.0;
  double dispersion = 1.0;
  std::string message;  // reason when !converged
};

inline constexpr double kDefaultTolerance = 1e-8;
inline constexpr int kDefaultMaxIterations = 100;

/// Weighted Fisher scoring with deviance step-halving.
///
/// Stops when max_j |b_new_j - b_j| / max(|b_new_j|, 1) <= tolerance. Reports
/// converged = false (with the last finite iterate) when the iteration limit is
/// reached, a coefficient turns non-finite, or a linear predictor exceeds 700.
///
/// Rows are processed in a canonical order (sorted by their values), so any
/// permutation of the input rows yields bit-identical results.
///
/// Throws Error{EmptyFit} when no weight is positive and
/// Error{SingularDesign} when the design is rank deficient on the rows with
/// positive weight.
FitResult irls_fit(const DesignSpec& spec, double tolerance = kDefaultTolerance,
                   int max_iterations = kDefaultMaxIterations);

/// Expected information sum_i w_i v_i x_i x_i' (the "bread").
Eigen::MatrixXd bread_matrix(const DesignSpec& spec, const Eigen::VectorXd& coefficients);

/// Outer product of per-record score contributions sum_i (w_i s_i x_i)(w_i s_i x_i)'.
Eigen::MatrixXd meat_matrix(const DesignSpec& spec, const Eigen::VectorXd& coefficients);

/// A^-1 B A^-1 with A the bread and B the meat.
Eigen::MatrixXd sandwich_covariance(const DesignSpec& spec, const Eigen::VectorXd& coefficients);

/// Weighted deviance at the given coefficients (+inf when the predictor overflows).
double deviance(const DesignSpec& spec, const Eigen::VectorXd& coefficients);

/// Weighted score vector; zero at the solution of the estimating equations.
Eigen::VectorXd score_vector(const DesignSpec& spec, const Eigen::VectorXd& coefficients);

}  // namespace costsens::glm

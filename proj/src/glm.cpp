#include "costsens/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "costsens/error.hpp"

namespace costsens::glm {

namespace {

constexpr double kMaxLinearPredictor = 700.0;
constexpr int kMaxHalvings = 10;

// Positive-weight rows of a DesignSpec, sorted into canonical order.
struct Support {
  Eigen::VectorXd y;
  Eigen::MatrixXd x;
  Eigen::VectorXd w;
};

void validate(const DesignSpec& spec) {
  const auto n = spec.design.rows();
  if (spec.design.cols() < 1) fail(ErrorCode::InvalidArgument, "design has no columns");
  if (spec.response.size() != n || spec.weights.size() != n)
    fail(ErrorCode::InvalidArgument, "response, design and weights disagree in length");
  if (!spec.design.allFinite()) fail(ErrorCode::InvalidArgument, "design contains non-finite values");
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = spec.weights[i];
    const double y = spec.response[i];
    if (!std::isfinite(w) || w < 0.0) fail(ErrorCode::InvalidArgument, "weights must be finite and >= 0");
    if (!std::isfinite(y)) fail(ErrorCode::InvalidArgument, "response contains non-finite values");
    if (spec.family == Family::LogGamma && y < 0.0)
      fail(ErrorCode::InvalidArgument, "LogGamma response must be >= 0");
    if (spec.family == Family::LogitBinomial && (y < 0.0 || y > 1.0))
      fail(ErrorCode::InvalidArgument, "LogitBinomial response must lie in [0, 1]");
  }
}

Support canonical_support(const DesignSpec& spec) {
  const auto n = spec.design.rows();
  const auto p = spec.design.cols();
  std::vector<Eigen::Index> rows;
  rows.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    if (spec.weights[i] > 0.0) rows.push_back(i);

  auto less = [&](Eigen::Index a, Eigen::Index b) {
    if (spec.weights[a] != spec.weights[b]) return spec.weights[a] < spec.weights[b];
    if (spec.response[a] != spec.response[b]) return spec.response[a] < spec.response[b];
    for (Eigen::Index j = 0; j < p; ++j)
      if (spec.design(a, j) != spec.design(b, j)) return spec.design(a, j) < spec.design(b, j);
    return false;
  };
  std::sort(rows.begin(), rows.end(), less);

  Support s;
  const auto m = static_cast<Eigen::Index>(rows.size());
  s.y.resize(m);
  s.w.resize(m);
  s.x.resize(m, p);
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto i = rows[static_cast<std::size_t>(k)];
    s.y[k] = spec.response[i];
    s.w[k] = spec.weights[i];
    s.x.row(k) = spec.design.row(i);
  }
  return s;
}

double log_expit(double eta) { return eta >= 0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta)); }

double expit(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double deviance_of(const Support& s, Family family, const Eigen::VectorXd& eta) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double y = s.y[i];
    double term = 0.0;
    if (family == Family::LogGamma) {
      if (!std::isfinite(eta[i]) || eta[i] > kMaxLinearPredictor) return std::numeric_limits<double>::infinity();
      const double mu = std::exp(eta[i]);
      const double log_ratio = y > 0.0 ? std::log(y) - eta[i] : 0.0;
      term = -log_ratio + (y - mu) / mu;
    } else {
      if (!std::isfinite(eta[i])) return std::numeric_limits<double>::infinity();
      const double lp = log_expit(eta[i]);
      const double lq = log_expit(-eta[i]);
      if (y > 0.0) term += y * (std::log(y) - lp);
      if (y < 1.0) term += (1.0 - y) * (std::log1p(-y) - lq);
    }
    dev += s.w[i] * term;
  }
  return 2.0 * dev;
}

// Working weight v_i (without the prior weight) and score residual r_i such that
// the score is sum_i w_i r_i x_i and the expected information sum_i w_i v_i x_i x_i'.
void working_terms(Family family, double y, double eta, double& v, double& r) {
  if (family == Family::LogGamma) {
    const double mu = std::exp(eta);
    v = 1.0;
    r = y / mu - 1.0;
  } else {
    const double p = expit(eta);
    v = p * (1.0 - p);
    r = y - p;
  }
}

Eigen::MatrixXd bread_of(const Support& s, Family family, const Eigen::VectorXd& eta) {
  Eigen::VectorXd vw(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    double v = 0.0, r = 0.0;
    working_terms(family, s.y[i], eta[i], v, r);
    vw[i] = s.w[i] * v;
  }
  return s.x.transpose() * vw.asDiagonal() * s.x;
}

Eigen::MatrixXd meat_of(const Support& s, Family family, const Eigen::VectorXd& eta) {
  Eigen::MatrixXd scores(s.x.rows(), s.x.cols());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    double v = 0.0, r = 0.0;
    working_terms(family, s.y[i], eta[i], v, r);
    scores.row(i) = (s.w[i] * r) * s.x.row(i);
  }
  return scores.transpose() * scores;
}

Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& a) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    fail(ErrorCode::SingularDesign, "information matrix is singular");
  Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
  if (!inv.allFinite()) fail(ErrorCode::SingularDesign, "information matrix is singular");
  return 0.5 * (inv + inv.transpose());
}

Eigen::MatrixXd sandwich_of(const Support& s, Family family, const Eigen::VectorXd& eta) {
  const Eigen::MatrixXd a_inv = invert_spd(bread_of(s, family, eta));
  Eigen::MatrixXd v = a_inv * meat_of(s, family, eta) * a_inv;
  return 0.5 * (v + v.transpose());
}

Support checked_support(const DesignSpec& spec) {
  validate(spec);
  Support s = canonical_support(spec);
  if (s.w.size() == 0) fail(ErrorCode::EmptyFit, "no record has positive weight");
  return s;
}

}  // namespace

FitResult irls_fit(const DesignSpec& spec, double tolerance, int max_iterations) {
  if (!(tolerance > 0.0)) fail(ErrorCode::InvalidArgument, "tolerance must be > 0");
  if (max_iterations < 1) fail(ErrorCode::InvalidArgument, "max_iterations must be >= 1");
  const Support s = checked_support(spec);
  const auto p = s.x.cols();
  const auto n = s.x.rows();

  if (n < p) fail(ErrorCode::SingularDesign, "fewer positive-weight records than coefficients");
  {
    Eigen::MatrixXd scaled = s.w.cwiseSqrt().asDiagonal() * s.x;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
    if (qr.rank() < p)
      fail(ErrorCode::SingularDesign, "design is rank deficient (rank " + std::to_string(qr.rank()) + " < " +
                                          std::to_string(p) + ")");
  }

  FitResult result;
  result.n_effective = static_cast<std::size_t>(n);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  if (spec.family == Family::LogGamma) {
    const double mean = s.w.dot(s.y) / s.w.sum();
    if (!(mean > 0.0)) fail(ErrorCode::InvalidArgument, "all positive-weight responses are zero");
    beta[0] = std::log(mean);
  }

  Eigen::VectorXd eta = s.x * beta;
  double dev = deviance_of(s, spec.family, eta);

  Eigen::VectorXd vw(n), z(n);
  for (int iter = 1; iter <= max_iterations; ++iter) {
    result.iterations = iter;
    for (Eigen::Index i = 0; i < n; ++i) {
      double v = 0.0, r = 0.0;
      working_terms(spec.family, s.y[i], eta[i], v, r);
      v = std::max(v, 1e-300);
      vw[i] = s.w[i] * v;
      // eta + (y - mu) / (dmu/deta) reduces to eta + r / v for both families.
      z[i] = eta[i] + r / v;
    }
    const Eigen::MatrixXd info = s.x.transpose() * vw.asDiagonal() * s.x;
    const Eigen::VectorXd rhs = s.x.transpose() * vw.cwiseProduct(z);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    Eigen::VectorXd next = ldlt.solve(rhs);
    if (ldlt.info() != Eigen::Success || !next.allFinite()) {
      result.message = "information matrix became singular";
      break;
    }

    Eigen::VectorXd next_eta = s.x * next;
    double next_dev = deviance_of(s, spec.family, next_eta);
    for (int h = 0; h < kMaxHalvings && !(next_dev <= dev); ++h) {
      next = 0.5 * (next + beta);
      next_eta = s.x * next;
      next_dev = deviance_of(s, spec.family, next_eta);
    }
    if (!next.allFinite() || !std::isfinite(next_dev) ||
        (spec.family == Family::LogGamma && next_eta.maxCoeff() > kMaxLinearPredictor)) {
      result.message = "diverged: linear predictor overflow";
      break;
    }

    double change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j)
      change = std::max(change, std::abs(next[j] - beta[j]) / std::max(std::abs(next[j]), 1.0));

    beta = next;
    eta = next_eta;
    dev = next_dev;
    if (change <= tolerance) {
      result.converged = true;
      break;
    }
  }
  if (!result.converged && result.message.empty()) result.message = "iteration limit reached";

  result.coefficients = beta;
  result.deviance = dev;

  // Dispersion for the model-based covariance: Pearson for LogGamma, 1 for binomial.
  if (spec.family == Family::LogGamma) {
    double pearson = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = std::exp(eta[i]);
      const double r = (s.y[i] - mu) / mu;
      pearson += s.w[i] * r * r;
    }
    result.dispersion = n > p ? pearson / static_cast<double>(n - p) : std::numeric_limits<double>::quiet_NaN();
  }

  const auto nan = std::numeric_limits<double>::quiet_NaN();
  result.covariance = Eigen::MatrixXd::Constant(p, p, nan);
  result.model_covariance = Eigen::MatrixXd::Constant(p, p, nan);
  if (beta.allFinite()) {
    try {
      const Eigen::MatrixXd a_inv = invert_spd(bread_of(s, spec.family, eta));
      result.model_covariance = result.dispersion * a_inv;
      Eigen::MatrixXd v = a_inv * meat_of(s, spec.family, eta) * a_inv;
      result.covariance = 0.5 * (v + v.transpose());
    } catch (const Error&) {
      if (result.converged) throw;
    }
  }
  return result;
}

Eigen::MatrixXd bread_matrix(const DesignSpec& spec, const Eigen::VectorXd& coefficients) {
  const Support s = checked_support(spec);
  return bread_of(s, spec.family, s.x * coefficients);
}

Eigen::MatrixXd meat_matrix(const DesignSpec& spec, const Eigen::VectorXd& coefficients) {
  const Support s = checked_support(spec);
  return meat_of(s, spec.family, s.x * coefficients);
}

Eigen::MatrixXd sandwich_covariance(const DesignSpec& spec, const Eigen::VectorXd& coefficients) {
  if (!coefficients.allFinite()) fail(ErrorCode::InvalidArgument, "coefficients must be finite");
  const Support s = checked_support(spec);
  if (coefficients.size() != s.x.cols()) fail(ErrorCode::InvalidArgument, "coefficient length mismatch");
  return sandwich_of(s, spec.family, s.x * coefficients);
}

double deviance(const DesignSpec& spec, const Eigen::VectorXd& coefficients) {
  const Support s = checked_support(spec);
  return deviance_of(s, spec.family, s.x * coefficients);
}

Eigen::VectorXd score_vector(const DesignSpec& spec, const Eigen::VectorXd& coefficients) {
  const Support s = checked_support(spec);
  const Eigen::VectorXd eta = s.x * coefficients;
  Eigen::VectorXd score = Eigen::VectorXd::Zero(s.x.cols());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    double v = 0.0, r = 0.0;
    working_terms(spec.family, s.y[i], eta[i], v, r);
    score += (s.w[i] * r) * s.x.row(i).transpose();
  }
  return score;
}

}  // namespace costsens::glm

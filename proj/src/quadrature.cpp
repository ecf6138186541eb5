#include "costsens/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "costsens/error.hpp"

namespace costsens {

namespace {

// Golub-Welsch: nodes are the eigenvalues of the symmetric Jacobi matrix,
// weights the squared first components of the normalized eigenvectors.
QuadratureRule golub_welsch(const Eigen::VectorXd& diagonal, const Eigen::VectorXd& off_diagonal) {
  const Eigen::Index n = diagonal.size();
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  jacobi.diagonal() = diagonal;
  for (Eigen::Index i = 0; i + 1 < n; ++i) jacobi(i, i + 1) = jacobi(i + 1, i) = off_diagonal[i];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  if (solver.info() != Eigen::Success) fail(ErrorCode::InvalidArgument, "quadrature eigenproblem failed");

  QuadratureRule rule;
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    rule.nodes.push_back(solver.eigenvalues()[i]);
    const double v = solver.eigenvectors()(0, i);
    rule.weights.push_back(v * v);
    total += v * v;
  }
  for (double& w : rule.weights) w /= total;
  return rule;
}

}  // namespace

QuadratureRule gauss_hermite(int n) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "quadrature needs at least one node");
  Eigen::VectorXd diagonal = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd off(n > 1 ? n - 1 : 0);
  for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(static_cast<double>(k));
  QuadratureRule rule = golub_welsch(diagonal, off);
  // Symmetrize: the exact rule is symmetric about 0.
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

QuadratureRule gauss_laguerre(int n, double shape) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "quadrature needs at least one node");
  if (!(shape > 0.0)) fail(ErrorCode::InvalidArgument, "Laguerre shape must be > 0");
  const double alpha = shape - 1.0;
  Eigen::VectorXd diagonal(n);
  Eigen::VectorXd off(n > 1 ? n - 1 : 0);
  for (int k = 0; k < n; ++k) diagonal[k] = 2.0 * k + 1.0 + alpha;
  for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(k * (k + alpha));
  return golub_welsch(diagonal, off);
}

}  // namespace costsens

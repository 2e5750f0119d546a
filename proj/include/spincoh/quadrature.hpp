#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

// Gauss rules from the Jacobi matrix of the three-term recurrence
// (Golub-Welsch): nodes are its eigenvalues, weights mu0 * v_0^2.

namespace spincoh {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }

  template <class F>
  double integrate(F&& f) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * f(nodes[i]);
    return sum;
  }
};

namespace detail {
inline QuadratureRule golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag, double mu0) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, offdiag, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw std::runtime_error("Golub-Welsch eigensolver failed");
  QuadratureRule r;
  const auto n = diag.size();
  r.nodes.resize(n);
  r.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r.nodes[i] = es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    r.weights[i] = mu0 * v0 * v0;
  }
  return r;
}
}  // namespace detail

/// Nodes/weights for  integral f(x) exp(-x^2) dx  over the real line.
inline QuadratureRule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("quadrature needs at least one node");
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n), b(n > 1 ? n - 1 : 0);
  for (int k = 1; k < n; ++k) b[k - 1] = std::sqrt(0.5 * k);
  return detail::golub_welsch(a, b, std::sqrt(std::numbers::pi));
}

/// Nodes/weights for  integral_0^inf f(x) x^alpha exp(-x) dx,  alpha > -1.
inline QuadratureRule gauss_laguerre(int n, double alpha) {
  if (n < 1) throw std::invalid_argument("quadrature needs at least one node");
  if (!(alpha > -1.0)) throw std::invalid_argument("Laguerre exponent must exceed -1");
  Eigen::VectorXd a(n), b(n > 1 ? n - 1 : 0);
  for (int k = 0; k < n; ++k) a[k] = 2.0 * k + alpha + 1.0;
  for (int k = 1; k < n; ++k) b[k - 1] = std::sqrt(k * (k + alpha));
  return detail::golub_welsch(a, b, std::tgamma(alpha + 1.0));
}

/// Nodes/weights for  integral_{-1}^{1} f(x) dx.
inline QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("quadrature needs at least one node");
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n), b(n > 1 ? n - 1 : 0);
  for (int k = 1; k < n; ++k) b[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  return detail::golub_welsch(a, b, 2.0);
}

}  // namespace spincoh

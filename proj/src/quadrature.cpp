#include "dreg/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace dreg {
namespace {

// Golub-Welsch: nodes are the eigenvalues of the symmetric Jacobi matrix,
// weights mu0 * (first eigenvector component)^2.
QuadratureRule golub_welsch(const Eigen::VectorXd& off_diagonal,
                            double mu0) {
  const auto n = off_diagonal.size() + 1;
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    jacobi(i, i + 1) = off_diagonal(i);
    jacobi(i + 1, i) = off_diagonal(i);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    rule.nodes[i] = solver.eigenvalues()(i);
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  // Symmetrize: both weight functions are even.
  for (Eigen::Index i = 0; i < n / 2; ++i) {
    const auto j = n - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = w;
    rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

template <class Build>
const QuadratureRule& cached(std::map<std::size_t, std::unique_ptr<QuadratureRule>>& cache,
                             std::size_t n, Build build) {
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<QuadratureRule>(build(n));
  return *slot;
}

}  // namespace

const QuadratureRule& gauss_legendre(std::size_t n) {
  static std::map<std::size_t, std::unique_ptr<QuadratureRule>> cache;
  return cached(cache, n, [](std::size_t m) {
    Eigen::VectorXd beta(static_cast<Eigen::Index>(m) - 1);
    for (Eigen::Index k = 1; k < static_cast<Eigen::Index>(m); ++k) {
      const double kk = static_cast<double>(k);
      beta(k - 1) = kk / std::sqrt(4.0 * kk * kk - 1.0);
    }
    return golub_welsch(beta, 2.0);
  });
}

const QuadratureRule& gauss_hermite(std::size_t n) {
  static std::map<std::size_t, std::unique_ptr<QuadratureRule>> cache;
  return cached(cache, n, [](std::size_t m) {
    Eigen::VectorXd beta(static_cast<Eigen::Index>(m) - 1);
    for (Eigen::Index k = 1; k < static_cast<Eigen::Index>(m); ++k) {
      beta(k - 1) = std::sqrt(0.5 * static_cast<double>(k));
    }
    return golub_welsch(beta, std::sqrt(std::numbers::pi));
  });
}

}  // namespace dreg

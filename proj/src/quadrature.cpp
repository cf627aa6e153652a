#include "bsnn/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <limits>
#include <numbers>
#include <string>

namespace bsnn {

namespace {

// Golub-Welsch: the nodes are the eigenvalues of the symmetric tridiagonal
// Jacobi matrix. Weights come from christoffel() below rather than from the
// eigenvectors.
Vector jacobi_nodes(const Vector& diag, const Vector& subdiag) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver;
  solver.computeFromTridiagonal(diag, subdiag, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NumericalError("Golub-Welsch eigen-decomposition did not converge");
  return solver.eigenvalues();
}

// Christoffel number 1 / sum_{k<n} p_k(x)^2 for the orthonormal family with
// p_0 = p0 and x p_k = b_{k+1} p_{k+1} + b_k p_{k-1}. Squared eigenvector
// components would carry absolute error ~eps^2 and swamp far-tail Hermite
// weights (~1e-200); this form keeps full relative accuracy.
template <class B>
Scalar christoffel(Scalar x, int n, Scalar p0, B&& b) {
  constexpr Scalar kBig = 1e150;
  Scalar prev = 0.0, cur = p0, sum = 0.0, log_scale = 0.0;
  for (int k = 0; k < n; ++k) {
    sum += cur * cur;
    const Scalar next = (x * cur - (k > 0 ? b(k) : 0.0) * prev) / b(k + 1);
    prev = cur;
    cur = next;
    if (std::abs(cur) > kBig) {
      cur /= kBig;
      prev /= kBig;
      sum /= kBig * kBig;
      log_scale += std::log(kBig);
    }
  }
  // Far-tail weights underflow; keep them positive.
  return std::max(std::exp(-std::log(sum) - 2.0 * log_scale), std::numeric_limits<Scalar>::denorm_min());
}

// Both families are symmetric; enforce it exactly so odd integrands cancel.
// Weights computed from symmetric nodes are then symmetric as well.
void symmetrize(Vector& nodes) {
  const Index n = nodes.size();
  for (Index i = 0; i < n / 2; ++i) {
    const Index j = n - 1 - i;
    const Scalar x = 0.5 * (nodes[j] - nodes[i]);
    nodes[i] = -x;
    nodes[j] = x;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

void check_order(int order) {
  if (order < 1)
    throw InvalidArgument("quadrature order must be >= 1, got " + std::to_string(order));
  if (order > kMaxQuadratureOrder)
    throw InvalidArgument("quadrature order " + std::to_string(order) + " exceeds the cap of " +
                          std::to_string(kMaxQuadratureOrder));
}

}  // namespace

QuadratureRule gauss_hermite_rule(int order) {
  check_order(order);
  Vector diag = Vector::Zero(order);
  Vector sub(std::max(order - 1, 0));
  for (int k = 1; k < order; ++k) sub[k - 1] = std::sqrt(static_cast<Scalar>(k));
  QuadratureRule rule;
  rule.nodes = jacobi_nodes(diag, sub);
  rule.weights.resize(order);
  symmetrize(rule.nodes);
  const auto b = [](int k) { return std::sqrt(static_cast<Scalar>(k)); };
  for (Index i = 0; i < order; ++i) rule.weights[i] = christoffel(rule.nodes[i], order, 1.0, b);
  rule.weights /= rule.weights.sum();
  return rule;
}

QuadratureRule gauss_legendre_rule(int order) {
  check_order(order);
  Vector diag = Vector::Zero(order);
  Vector sub(std::max(order - 1, 0));
  for (int k = 1; k < order; ++k) {
    const Scalar kk = k;
    sub[k - 1] = kk / std::sqrt(4.0 * kk * kk - 1.0);
  }
  QuadratureRule rule;
  rule.nodes = jacobi_nodes(diag, sub);
  rule.weights.resize(order);
  symmetrize(rule.nodes);
  const auto b = [](int k) {
    const Scalar kk = k;
    return kk / std::sqrt(4.0 * kk * kk - 1.0);
  };
  // Orthonormal w.r.t. dx on [-1, 1]: p_0 = 1/sqrt(2).
  for (Index i = 0; i < order; ++i) rule.weights[i] = christoffel(rule.nodes[i], order, 1.0 / std::sqrt(2.0), b);
  return rule;
}

QuadratureRule split_at_zero(const QuadratureRule& rule) {
  const Index n = rule.order();
  if (n < 1) throw InvalidArgument("cannot split an empty quadrature rule");
  const Scalar radius = std::max<Scalar>(rule.nodes.cwiseAbs().maxCoeff(), 12.0);
  const QuadratureRule legendre = gauss_legendre_rule(static_cast<int>(n));
  const Scalar inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

  QuadratureRule split;
  split.nodes.resize(2 * n);
  split.weights.resize(2 * n);
  for (Index i = 0; i < n; ++i) {
    // Map [-1, 1] onto (0, radius); node i on the right mirrors node n-1-i on the left.
    const Scalar t = 0.5 * radius * (legendre.nodes[i] + 1.0);
    const Scalar w = 0.5 * radius * legendre.weights[i] * inv_sqrt_2pi * std::exp(-0.5 * t * t);
    split.nodes[n + i] = t;
    split.weights[n + i] = w;
    split.nodes[n - 1 - i] = -t;
    split.weights[n - 1 - i] = w;
  }
  return split;
}

}  // namespace bsnn

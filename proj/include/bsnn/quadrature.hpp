#pragma once

#include "bsnn/common.hpp"

#include <cmath>
#include <sstream>

namespace bsnn {

/// Node/weight set approximating expectations under the standard Gaussian.
/// Nodes are strictly increasing and symmetric about zero; weights are
/// positive and sum to one.
struct QuadratureRule {
  Vector nodes;
  Vector weights;

  Index order() const noexcept { return nodes.size(); }
};

inline constexpr int kDefaultQuadratureOrder = 501;
inline constexpr int kMaxQuadratureOrder = 2000;

/// Gauss-Hermite rule for N(0,1) by Golub-Welsch: eigen-decomposition of the
/// Jacobi matrix of the probabilists' Hermite recurrence (off-diagonal
/// sqrt(k)). Exact for polynomials of degree <= 2*order-1.
QuadratureRule gauss_hermite_rule(int order = kDefaultQuadratureOrder);

/// Gauss-Legendre rule on [-1, 1] (Golub-Welsch), weights summing to 2.
QuadratureRule gauss_legendre_rule(int order);

/// Companion rule for integrands with a kink or jump at zero. Each half-line
/// gets `rule.order()` Gauss-Legendre nodes on (0, R] weighted by the Gaussian
/// density, where R is the outermost node of `rule` (at least 12). No node
/// lands on zero, so the measure-zero point is excluded and each smooth piece
/// converges exponentially.
QuadratureRule split_at_zero(const QuadratureRule& rule);

/// sum_i w_i f(x_i). Throws NumericalError naming the node if f is non-finite there.
template <class F>
Scalar gaussian_expectation(F&& f, const QuadratureRule& rule) {
  Scalar acc = 0.0;
  for (Index i = 0; i < rule.order(); ++i) {
    const Scalar v = f(rule.nodes[i]);
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "integrand is non-finite (" << v << ") at quadrature node x=" << rule.nodes[i];
      throw NumericalError(msg.str());
    }
    acc += rule.weights[i] * v;
  }
  return acc;
}

}  // namespace bsnn

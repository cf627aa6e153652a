#include "bsnn/quadrature.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace bsnn;

namespace {

double relu(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace

TEST_CASE("order 1 is the mean node") {
  const QuadratureRule r = gauss_hermite_rule(1);
  REQUIRE(r.order() == 1);
  CHECK(r.nodes[0] == doctest::Approx(0.0));
  CHECK(r.weights[0] == doctest::Approx(1.0));
}

TEST_CASE("order 2 integrates x^2 exactly") {
  const QuadratureRule r = gauss_hermite_rule(2);
  CHECK(std::abs(gaussian_expectation([](double x) { return x * x; }, r) - 1.0) < 1e-15);
}

TEST_CASE("rule invariants across orders") {
  for (int order : {1, 2, 3, 8, 64, 101, 501, 1000, 2000}) {
    CAPTURE(order);
    const QuadratureRule r = gauss_hermite_rule(order);
    REQUIRE(r.order() == order);
    CHECK(std::abs(r.weights.sum() - 1.0) < 1e-12);
    CHECK((r.weights.array() > 0.0).all());
    for (Index i = 0; i + 1 < r.order(); ++i) CHECK(r.nodes[i] < r.nodes[i + 1]);
    for (Index i = 0; i < r.order(); ++i) CHECK(std::abs(r.nodes[i] + r.nodes[r.order() - 1 - i]) < 1e-12);
    if (order >= 2) CHECK(std::abs(gaussian_expectation([](double x) { return x * x; }, r) - 1.0) < 1e-10);
  }
}

TEST_CASE("order bounds are enforced") {
  CHECK_THROWS_AS(gauss_hermite_rule(0), InvalidArgument);
  CHECK_THROWS_AS(gauss_hermite_rule(-3), InvalidArgument);
  CHECK_THROWS_AS(gauss_hermite_rule(kMaxQuadratureOrder + 1), InvalidArgument);
}

TEST_CASE("exact for polynomials up to degree 2n-1") {
  const int n = 10;
  const QuadratureRule r = gauss_hermite_rule(n);
  double double_factorial = 1.0;  // (2k-1)!!
  for (int k = 1; 2 * k <= 2 * n - 1; ++k) {
    double_factorial *= 2.0 * k - 1.0;
    const double got = gaussian_expectation([k](double x) { return std::pow(x, 2 * k); }, r);
    CHECK(std::abs(got / double_factorial - 1.0) < 1e-10);
    const double odd = gaussian_expectation([k](double x) { return std::pow(x, 2 * k - 1); }, r);
    CHECK(std::abs(odd) < 1e-9 * double_factorial);
  }
}

TEST_CASE("tanh^2 matches the trapezoid oracle") {
  const auto f = [](double x) { return std::tanh(x) * std::tanh(x); };
  const double want = oracle::trapezoid_gaussian(f);
  // The 64-node rule's own truncation error for this integrand is 2.66e-9
  // (poles of tanh at +-i pi/2); 80 nodes reach 1.6e-10.
  CHECK(std::abs(gaussian_expectation(f, gauss_hermite_rule(64)) - want) < 3e-9);
  CHECK(std::abs(gaussian_expectation(f, gauss_hermite_rule(80)) - want) < 1e-9);
  CHECK(std::abs(gaussian_expectation(f, gauss_hermite_rule(501)) - want) < 1e-12);
}

TEST_CASE("tail weights keep relative accuracy") {
  const QuadratureRule r = gauss_hermite_rule(501);
  // Outermost weight is far below double epsilon squared; it must not sit at
  // the eigenvector rounding level.
  CHECK(r.weights[0] < 1e-150);
  CHECK(r.weights[0] > 0.0);
  // High moments stay exact: E[x^20] = 19!!.
  double df = 1.0;
  for (int k = 1; k <= 19; k += 2) df *= k;
  CHECK(std::abs(gaussian_expectation([](double x) { return std::pow(x, 20); }, r) / df - 1.0) < 1e-11);
}

TEST_CASE("odd functions vanish; half-Gaussian moments") {
  const QuadratureRule r = gauss_hermite_rule(501);
  CHECK(std::abs(gaussian_expectation([](double x) { return x; }, r)) < 1e-12);
  const QuadratureRule s = split_at_zero(r);
  CHECK(std::abs(gaussian_expectation([](double x) { return relu(x) * relu(x); }, s) - 0.5) < 1e-6);
  CHECK(std::abs(gaussian_expectation([](double x) { return x > 0.0 ? 1.0 : 0.0; }, s) - 0.5) < 1e-6);
  CHECK(std::abs(gaussian_expectation([](double x) { return x > 0.0 ? 1.0 : 0.0; }, gauss_hermite_rule(64)) -
                 0.5) < 1e-6);
}

TEST_CASE("linearity") {
  const QuadratureRule r = gauss_hermite_rule(501);
  const auto f = [](double x) { return std::tanh(x); };
  const auto g = [](double x) { return std::exp(-x * x) + x * x * x; };
  const double alpha = 1.7, beta = -0.4;
  const double lhs = gaussian_expectation([&](double x) { return alpha * f(x) + beta * g(x); }, r);
  const double rhs = alpha * gaussian_expectation(f, r) + beta * gaussian_expectation(g, r);
  CHECK(std::abs(lhs - rhs) < 1e-12);
}

TEST_CASE("error shrinks as the order doubles for smooth integrands") {
  const auto tanh2 = [](double x) { return std::tanh(x) * std::tanh(x); };
  const auto gelu2 = [](double x) {
    const double g = x / (1.0 + std::exp(-1.702 * x));
    return g * g;
  };
  for (const auto& f : {std::function<double(double)>(tanh2), std::function<double(double)>(gelu2)}) {
    const double want = oracle::trapezoid_gaussian(f);
    double prev = INFINITY;
    for (int order : {32, 64, 128, 256, 512}) {
      const double err = std::abs(gaussian_expectation(f, gauss_hermite_rule(order)) - want);
      CAPTURE(order);
      CAPTURE(err);
      // Once both the rule and the oracle sit at rounding level, further
      // doubling cannot be resolved.
      CHECK((err < prev || (err < 1e-12 && prev < 1e-12)));
      prev = err;
    }
  }
}

TEST_CASE("kinked integrands match closed-form half-Gaussian moments") {
  const QuadratureRule s = split_at_zero(gauss_hermite_rule(501));
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  CHECK(std::abs(gaussian_expectation(relu, s) - inv_sqrt_2pi) < 1e-4);
  CHECK(std::abs(gaussian_expectation([](double x) { return std::abs(x); }, s) - 2.0 * inv_sqrt_2pi) < 1e-4);
  // E[min(0, e^x - 1)] = e^{1/2} Phi(-1) - 1/2.
  const double elu_neg = std::exp(0.5) * oracle::Phi(-1.0) - 0.5;
  CHECK(std::abs(gaussian_expectation([](double x) { return x < 0.0 ? std::expm1(x) : 0.0; }, s) - elu_neg) <
        1e-4);
  // The split rule is far more accurate than the bound demands.
  CHECK(std::abs(gaussian_expectation(relu, s) - inv_sqrt_2pi) < 1e-12);
}

TEST_CASE("split rule avoids zero and keeps total mass") {
  const QuadratureRule s = split_at_zero(gauss_hermite_rule(101));
  CHECK(std::abs(s.weights.sum() - 1.0) < 1e-12);
  CHECK((s.nodes.array() != 0.0).all());
  CHECK(std::abs(gaussian_expectation([](double x) { return x * x; }, s) - 1.0) < 1e-12);
}

TEST_CASE("Gauss-Legendre rule") {
  const QuadratureRule r = gauss_legendre_rule(5);
  CHECK(std::abs(r.weights.sum() - 2.0) < 1e-14);
  double x4 = 0.0;
  for (Index i = 0; i < r.order(); ++i) x4 += r.weights[i] * std::pow(r.nodes[i], 4);
  CHECK(std::abs(x4 - 0.4) < 1e-14);
}

TEST_CASE("non-finite integrand names the node") {
  const QuadratureRule r = gauss_hermite_rule(5);
  try {
    gaussian_expectation([](double x) { return x > 1.0 ? INFINITY : 0.0; }, r);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("x=") != std::string::npos);
  }
}

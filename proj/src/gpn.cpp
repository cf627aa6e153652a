#include "bsnn/gpn.hpp"

#include <cmath>
#include <string>

namespace bsnn {

namespace {

constexpr Scalar kDegenerateD2 = 1e-12;
constexpr Scalar kPoincareSlack = 1e-8;

}  // namespace

const QuadratureRule& default_rule() {
  static const QuadratureRule rule = gauss_hermite_rule(kDefaultQuadratureOrder);
  return rule;
}

Scalar HermiteSpectrum::nonlinearity() const {
  Scalar s = 0.0;
  for (Index k = 2; k < coeffs.size(); ++k) s += static_cast<Scalar>(k - 1) * coeffs[k] * coeffs[k];
  return s;
}

Scalar expectation(const std::function<Scalar(Scalar)>& f, const QuadratureRule& rule, bool kinked) {
  if (!kinked) return gaussian_expectation(f, rule);
  return gaussian_expectation(f, split_at_zero(rule));
}

namespace {

template <class Phi, class DPhi>
MomentReport moments_on(const Phi& phi, const DPhi& dphi, const QuadratureRule& rule) {
  MomentReport r;
  r.m1 = gaussian_expectation(phi, rule);
  r.m2 = gaussian_expectation([&](Scalar x) { const Scalar v = phi(x); return v * v; }, rule);
  r.d2 = gaussian_expectation([&](Scalar x) { const Scalar v = dphi(x); return v * v; }, rule);
  r.variance = r.m2 - r.m1 * r.m1;
  if (r.variance < 0.0 && r.variance > -1e-12) r.variance = 0.0;
  return r;
}

}  // namespace

MomentReport moments(const ActivationSpec& spec, const QuadratureRule& rule) {
  const QuadratureRule& used = spec.kinked() ? split_at_zero(rule) : rule;
  return moments_on([&](Scalar x) { return spec.value(x); },
                    [&](Scalar x) { return spec.derivative(x); }, used);
}

MomentReport moments(const AffineActivation& act, const QuadratureRule& rule) {
  const QuadratureRule& used = act.base.kinked() ? split_at_zero(rule) : rule;
  return moments_on([&](Scalar x) { return act.value(x); },
                    [&](Scalar x) { return act.derivative(x); }, used);
}

RootSelection table_root(const ActivationSpec& spec) {
  switch (spec.kind()) {
    case ActivationKind::GELU: return RootSelection::Minus;
    case ActivationKind::Custom: return RootSelection::NonNegativeMean;
    default: return RootSelection::Plus;
  }
}

GpnConstants gpn_constants(const ActivationSpec& spec, const QuadratureRule& rule,
                           RootSelection selection) {
  const MomentReport m = moments(spec, rule);
  if (!(m.d2 > kDegenerateD2))
    throw NumericalError("activation '" + spec.name() +
                         "' is degenerate: E[phi'^2] = " + std::to_string(m.d2));
  const Scalar disc = m.d2 - m.variance;
  if (disc < -kPoincareSlack)
    throw NumericalError("activation '" + spec.name() +
                         "' violates the Gaussian-Poincare inequality (E[phi'^2] - Var = " +
                         std::to_string(disc) + ")");
  const Scalar root = std::sqrt(std::max<Scalar>(disc, 0.0));

  GpnConstants c;
  c.a = 1.0 / std::sqrt(m.d2);
  c.root_plus = c.a * (-m.m1 + root);
  c.root_minus = c.a * (-m.m1 - root);
  c.selection = selection;

  RootSelection pick = selection == RootSelection::MatchTable ? table_root(spec) : selection;
  // E[a*phi + b] = a*(m1 + c) = +-a*root: the plus root always has the non-negative mean.
  if (pick == RootSelection::NonNegativeMean) pick = RootSelection::Plus;
  c.b = pick == RootSelection::Minus ? c.root_minus : c.root_plus;
  return c;
}

GpnCheck verify_gpn(const ActivationSpec& spec, Scalar a, Scalar b, const QuadratureRule& rule,
                    Scalar tol) {
  if (!(tol > 0.0)) throw InvalidArgument("verify_gpn tolerance must be positive");
  GpnCheck check;
  check.moments = moments(AffineActivation{spec, a, b}, rule);
  check.passed = std::abs(check.moments.m2 - 1.0) <= tol && std::abs(check.moments.d2 - 1.0) <= tol;
  return check;
}

AffineActivation gpn_normalized(const ActivationSpec& spec, const QuadratureRule& rule,
                                RootSelection selection) {
  const GpnConstants c = gpn_constants(spec, rule, selection);
  return AffineActivation{spec, c.a, c.b};
}

AffineActivation gpn_normalized(const ActivationSpec& spec) {
  return gpn_normalized(spec, default_rule());
}

HermiteSpectrum hermite_coefficients(const std::function<Scalar(Scalar)>& f, int max_degree,
                                     const QuadratureRule& rule, bool kinked) {
  if (max_degree < 0) throw InvalidArgument("Hermite degree must be non-negative");
  if (rule.order() < 2 * static_cast<Index>(max_degree) + 2)
    throw NumericalError("quadrature order " + std::to_string(rule.order()) +
                         " is too small for Hermite degree " + std::to_string(max_degree) +
                         " (need >= " + std::to_string(2 * max_degree + 2) + ")");
  const QuadratureRule& used = kinked ? split_at_zero(rule) : rule;

  HermiteSpectrum spec;
  spec.max_degree = max_degree;
  spec.coeffs = Vector::Zero(max_degree + 1);
  for (Index i = 0; i < used.order(); ++i) {
    const Scalar x = used.nodes[i];
    const Scalar fx = f(x);
    if (!std::isfinite(fx))
      throw NumericalError("integrand is non-finite at quadrature node x=" + std::to_string(x));
    const Scalar wf = used.weights[i] * fx;
    // Orthonormal recurrence H_{k+1} = (x H_k - sqrt(k) H_{k-1}) / sqrt(k+1).
    Scalar prev = 0.0, cur = 1.0;
    for (int k = 0; k <= max_degree; ++k) {
      spec.coeffs[k] += wf * cur;
      const Scalar next = (x * cur - std::sqrt(static_cast<Scalar>(k)) * prev) /
                          std::sqrt(static_cast<Scalar>(k + 1));
      prev = cur;
      cur = next;
    }
  }
  return spec;
}

HermiteSpectrum hermite_coefficients(const AffineActivation& act, int max_degree,
                                     const QuadratureRule& rule) {
  return hermite_coefficients([&](Scalar x) { return act.value(x); }, max_degree, rule,
                              act.base.kinked());
}

Scalar poincare_gap(const ActivationSpec& spec, const QuadratureRule& rule) {
  const MomentReport m = moments(spec, rule);
  return m.d2 - m.variance;
}

}  // namespace bsnn

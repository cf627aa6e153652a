#pragma once

#include "bsnn/activations.hpp"
#include "bsnn/quadrature.hpp"

#include <functional>

namespace bsnn {

/// Gaussian moments of an activation: E[phi], E[phi^2], E[phi'^2], Var[phi].
struct MomentReport {
  Scalar m1 = 0.0;
  Scalar m2 = 0.0;
  Scalar d2 = 0.0;
  Scalar variance = 0.0;
};

/// Which of the two quadratic roots supplies the shift b.
enum class RootSelection {
  MatchTable,       ///< per-activation choice reproducing the published constants
  NonNegativeMean,  ///< root giving E[a*phi + b] >= 0
  Plus,
  Minus,
};

/// Affine constants making a*phi + b Gaussian-Poincare normalized.
struct GpnConstants {
  Scalar a = 1.0;
  Scalar b = 0.0;
  Scalar root_plus = 0.0;   ///< b candidate from c+ = -m1 + sqrt(d2 - Var)
  Scalar root_minus = 0.0;  ///< b candidate from c- = -m1 - sqrt(d2 - Var)
  RootSelection selection = RootSelection::MatchTable;
};

struct GpnCheck {
  MomentReport moments;
  bool passed = false;
};

/// Orthonormal probabilists' Hermite coefficients a_0..a_K of a function.
struct HermiteSpectrum {
  Vector coeffs;
  int max_degree = 0;

  /// sum_{k>=2} (k-1) a_k^2; zero exactly for affine functions.
  Scalar nonlinearity() const;
  Scalar energy() const { return coeffs.squaredNorm(); }
};

/// Expectation of f under N(0,1), split at zero when `kinked`.
Scalar expectation(const std::function<Scalar(Scalar)>& f, const QuadratureRule& rule, bool kinked);

MomentReport moments(const ActivationSpec& spec, const QuadratureRule& rule);
MomentReport moments(const AffineActivation& act, const QuadratureRule& rule);

/// a = d2^{-1/2}; b = a*c with c solving Var[phi] + (m1 + c)^2 - d2 = 0.
GpnConstants gpn_constants(const ActivationSpec& spec, const QuadratureRule& rule,
                           RootSelection selection = RootSelection::MatchTable);

/// The shipped root choice for a built-in (Minus for GELU, Plus otherwise).
RootSelection table_root(const ActivationSpec& spec);

/// Moments of a*phi + b; passes iff |m2 - 1| <= tol and |d2 - 1| <= tol.
GpnCheck verify_gpn(const ActivationSpec& spec, Scalar a, Scalar b, const QuadratureRule& rule,
                    Scalar tol);

/// Wraps gpn_constants into the activation actually used by a network.
AffineActivation gpn_normalized(const ActivationSpec& spec, const QuadratureRule& rule,
                                RootSelection selection = RootSelection::MatchTable);
/// Same, with a shared default-order rule.
AffineActivation gpn_normalized(const ActivationSpec& spec);

HermiteSpectrum hermite_coefficients(const std::function<Scalar(Scalar)>& f, int max_degree,
                                     const QuadratureRule& rule, bool kinked = false);
HermiteSpectrum hermite_coefficients(const AffineActivation& act, int max_degree,
                                     const QuadratureRule& rule);

/// E[phi'^2] - Var[phi]; non-negative by the Gaussian-Poincare inequality.
Scalar poincare_gap(const ActivationSpec& spec, const QuadratureRule& rule);

/// Process-wide default-order Gauss-Hermite rule, built once.
const QuadratureRule& default_rule();

}  // namespace bsnn

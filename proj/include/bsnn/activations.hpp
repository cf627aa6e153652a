#pragma once

#include "bsnn/common.hpp"

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace bsnn {

enum class ActivationKind { Identity, Tanh, ReLU, LeakyReLU, ELU, SELU, GELU, Custom };

inline constexpr Scalar kLeakySlope = 0.01;
inline constexpr Scalar kEluAlpha = 1.0;
inline constexpr Scalar kSeluLambda = 1.0507009873554805;
inline constexpr Scalar kSeluAlpha = 1.6732632423543772;
inline constexpr Scalar kGeluGate = 1.702;

/// An element-wise activation with its derivative.
///
/// `kinked()` marks functions defined piecewise at zero (phi or phi' has a
/// corner there). Gaussian expectations of such functions are split at zero,
/// and the derivative at the corner is the right limit: ReLU and LeakyReLU
/// give 1, SELU gives lambda.
class ActivationSpec {
 public:
  using Fn = std::function<Scalar(Scalar)>;

  static ActivationSpec identity();
  static ActivationSpec tanh();
  static ActivationSpec relu();
  static ActivationSpec leaky_relu(Scalar slope = kLeakySlope);
  static ActivationSpec elu(Scalar alpha = kEluAlpha);
  static ActivationSpec selu(Scalar lambda = kSeluLambda, Scalar alpha = kSeluAlpha);
  static ActivationSpec gelu(Scalar gate = kGeluGate);
  static ActivationSpec custom(std::string name, Fn value, Fn derivative, bool kinked);

  /// Case-insensitive lookup: tanh, relu, leakyrelu, elu, selu, gelu (and identity).
  static ActivationSpec from_name(std::string_view name);
  /// Names accepted by from_name, in table order.
  static const std::vector<std::string>& builtin_names();

  ActivationKind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  bool kinked() const noexcept { return kinked_; }
  const std::map<std::string, Scalar>& params() const noexcept { return params_; }
  /// Known Lipschitz constants of phi and phi', as prose.
  const std::string& lipschitz_note() const noexcept { return lipschitz_note_; }

  Scalar value(Scalar x) const;
  Scalar derivative(Scalar x) const;

  /// Element-wise value / derivative over a block; kind dispatch happens once.
  Matrix values(const Eigen::Ref<const Matrix>& x) const;
  Matrix derivatives(const Eigen::Ref<const Matrix>& x) const;

 private:
  ActivationSpec(ActivationKind kind, std::string name, bool kinked);

  ActivationKind kind_;
  std::string name_;
  bool kinked_;
  std::map<std::string, Scalar> params_;
  std::string lipschitz_note_;
  Fn custom_value_;
  Fn custom_derivative_;
  // Cached hyperparameters for the hot path.
  Scalar p0_ = 0.0;
  Scalar p1_ = 0.0;
};

/// phi(x); rejects non-finite x.
Scalar act_eval(const ActivationSpec& spec, Scalar x);
/// phi'(x); rejects non-finite x. Right limit at a kink.
Scalar act_deriv(const ActivationSpec& spec, Scalar x);

/// x -> scale * phi(x) + shift; the GPN form when (scale, shift) = (a, b).
struct AffineActivation {
  ActivationSpec base;
  Scalar scale = 1.0;
  Scalar shift = 0.0;

  Scalar value(Scalar x) const { return scale * base.value(x) + shift; }
  Scalar derivative(Scalar x) const { return scale * base.derivative(x); }
  Matrix values(const Eigen::Ref<const Matrix>& x) const;
  Matrix derivatives(const Eigen::Ref<const Matrix>& x) const;
  /// e.g. "tanh" or "tanh-gpn" when the affine map is not the identity.
  std::string label() const;
  bool is_raw() const noexcept { return scale == 1.0 && shift == 0.0; }
};

}  // namespace bsnn

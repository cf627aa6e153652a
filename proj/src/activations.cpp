#include "bsnn/activations.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace bsnn {

ActivationSpec::ActivationSpec(ActivationKind kind, std::string name, bool kinked)
    : kind_(kind), name_(std::move(name)), kinked_(kinked) {}

ActivationSpec ActivationSpec::identity() {
  ActivationSpec s(ActivationKind::Identity, "identity", false);
  s.lipschitz_note_ = "phi: 1; phi': 0";
  return s;
}

ActivationSpec ActivationSpec::tanh() {
  ActivationSpec s(ActivationKind::Tanh, "tanh", false);
  s.lipschitz_note_ = "phi: 1; phi': 4/(3*sqrt(3)) ~ 0.770";
  return s;
}

ActivationSpec ActivationSpec::relu() {
  ActivationSpec s(ActivationKind::ReLU, "relu", true);
  s.lipschitz_note_ = "phi: 1; phi' is a step (Lipschitz only for a smoothed counterpart)";
  return s;
}

ActivationSpec ActivationSpec::leaky_relu(Scalar slope) {
  ActivationSpec s(ActivationKind::LeakyReLU, "leakyrelu", true);
  s.params_["slope"] = slope;
  s.p0_ = slope;
  s.lipschitz_note_ = "phi: 1; phi' is a step (Lipschitz only for a smoothed counterpart)";
  return s;
}

ActivationSpec ActivationSpec::elu(Scalar alpha) {
  ActivationSpec s(ActivationKind::ELU, "elu", true);
  s.params_["alpha"] = alpha;
  s.p0_ = alpha;
  s.lipschitz_note_ = "phi: max(1, alpha); phi': alpha on the negative half-line";
  return s;
}

ActivationSpec ActivationSpec::selu(Scalar lambda, Scalar alpha) {
  ActivationSpec s(ActivationKind::SELU, "selu", true);
  s.params_["lambda"] = lambda;
  s.params_["alpha"] = alpha;
  s.p0_ = lambda;
  s.p1_ = alpha;
  s.lipschitz_note_ = "phi: lambda*alpha ~ 1.758; phi' jumps at 0";
  return s;
}

ActivationSpec ActivationSpec::gelu(Scalar gate) {
  ActivationSpec s(ActivationKind::GELU, "gelu", false);
  s.params_["gate"] = gate;
  s.p0_ = gate;
  s.lipschitz_note_ = "phi: ~1.13 for gate 1.702; phi': ~0.79*gate";
  return s;
}

ActivationSpec ActivationSpec::custom(std::string name, Fn value, Fn derivative, bool kinked) {
  if (!value || !derivative)
    throw InvalidArgument("custom activation '" + name + "' needs both value and derivative");
  ActivationSpec s(ActivationKind::Custom, std::move(name), kinked);
  s.custom_value_ = std::move(value);
  s.custom_derivative_ = std::move(derivative);
  return s;
}

const std::vector<std::string>& ActivationSpec::builtin_names() {
  static const std::vector<std::string> names{"tanh", "relu", "leakyrelu", "elu", "selu", "gelu"};
  return names;
}

ActivationSpec ActivationSpec::from_name(std::string_view name) {
  std::string key(name);
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (key == "tanh") return tanh();
  if (key == "relu") return relu();
  if (key == "leakyrelu") return leaky_relu();
  if (key == "elu") return elu();
  if (key == "selu") return selu();
  if (key == "gelu") return gelu();
  if (key == "identity" || key == "linear") return identity();
  throw InvalidArgument("unknown activation '" + std::string(name) +
                        "' (expected tanh, relu, leakyrelu, elu, selu, gelu or identity)");
}

namespace {

inline Scalar sigmoid(Scalar z) {
  // Evaluate on the side where exp cannot overflow.
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const Scalar e = std::exp(z);
  return e / (1.0 + e);
}

// Kernels shared by the scalar and block evaluators.
template <ActivationKind K>
struct Kernel;

template <>
struct Kernel<ActivationKind::Identity> {
  static Scalar f(Scalar x, Scalar, Scalar) { return x; }
  static Scalar df(Scalar, Scalar, Scalar) { return 1.0; }
};
template <>
struct Kernel<ActivationKind::Tanh> {
  static Scalar f(Scalar x, Scalar, Scalar) { return std::tanh(x); }
  static Scalar df(Scalar x, Scalar, Scalar) {
    const Scalar t = std::tanh(x);
    return 1.0 - t * t;
  }
};
template <>
struct Kernel<ActivationKind::ReLU> {
  static Scalar f(Scalar x, Scalar, Scalar) { return x > 0 ? x : 0.0; }
  static Scalar df(Scalar x, Scalar, Scalar) { return x >= 0 ? 1.0 : 0.0; }
};
template <>
struct Kernel<ActivationKind::LeakyReLU> {
  static Scalar f(Scalar x, Scalar slope, Scalar) { return x > 0 ? x : slope * x; }
  static Scalar df(Scalar x, Scalar slope, Scalar) { return x >= 0 ? 1.0 : slope; }
};
template <>
struct Kernel<ActivationKind::ELU> {
  static Scalar f(Scalar x, Scalar alpha, Scalar) { return x > 0 ? x : alpha * std::expm1(x); }
  static Scalar df(Scalar x, Scalar alpha, Scalar) { return x >= 0 ? 1.0 : alpha * std::exp(x); }
};
template <>
struct Kernel<ActivationKind::SELU> {
  static Scalar f(Scalar x, Scalar lambda, Scalar alpha) {
    return lambda * (x > 0 ? x : alpha * std::expm1(x));
  }
  static Scalar df(Scalar x, Scalar lambda, Scalar alpha) {
    return lambda * (x >= 0 ? 1.0 : alpha * std::exp(x));
  }
};
template <>
struct Kernel<ActivationKind::GELU> {
  static Scalar f(Scalar x, Scalar gate, Scalar) { return x * sigmoid(gate * x); }
  static Scalar df(Scalar x, Scalar gate, Scalar) {
    const Scalar s = sigmoid(gate * x);
    return s + gate * x * s * (1.0 - s);
  }
};

template <class Op>
decltype(auto) dispatch(ActivationKind kind, Op&& op) {
  switch (kind) {
    case ActivationKind::Identity: return op(Kernel<ActivationKind::Identity>{});
    case ActivationKind::Tanh: return op(Kernel<ActivationKind::Tanh>{});
    case ActivationKind::ReLU: return op(Kernel<ActivationKind::ReLU>{});
    case ActivationKind::LeakyReLU: return op(Kernel<ActivationKind::LeakyReLU>{});
    case ActivationKind::ELU: return op(Kernel<ActivationKind::ELU>{});
    case ActivationKind::SELU: return op(Kernel<ActivationKind::SELU>{});
    case ActivationKind::GELU: return op(Kernel<ActivationKind::GELU>{});
    case ActivationKind::Custom: break;
  }
  throw InvalidArgument("custom activations have no built-in kernel");
}

}  // namespace

Scalar ActivationSpec::value(Scalar x) const {
  if (kind_ == ActivationKind::Custom) return custom_value_(x);
  return dispatch(kind_, [&](auto k) { return decltype(k)::f(x, p0_, p1_); });
}

Scalar ActivationSpec::derivative(Scalar x) const {
  if (kind_ == ActivationKind::Custom) return custom_derivative_(x);
  return dispatch(kind_, [&](auto k) { return decltype(k)::df(x, p0_, p1_); });
}

Matrix ActivationSpec::values(const Eigen::Ref<const Matrix>& x) const {
  if (kind_ == ActivationKind::Custom) return x.unaryExpr(custom_value_);
  return dispatch(kind_, [&](auto k) -> Matrix {
    const Scalar a = p0_, b = p1_;
    return x.unaryExpr([a, b](Scalar v) { return decltype(k)::f(v, a, b); });
  });
}

Matrix ActivationSpec::derivatives(const Eigen::Ref<const Matrix>& x) const {
  if (kind_ == ActivationKind::Custom) return x.unaryExpr(custom_derivative_);
  return dispatch(kind_, [&](auto k) -> Matrix {
    const Scalar a = p0_, b = p1_;
    return x.unaryExpr([a, b](Scalar v) { return decltype(k)::df(v, a, b); });
  });
}

Scalar act_eval(const ActivationSpec& spec, Scalar x) {
  if (!std::isfinite(x)) throw InvalidArgument("activation input must be finite");
  return spec.value(x);
}

Scalar act_deriv(const ActivationSpec& spec, Scalar x) {
  if (!std::isfinite(x)) throw InvalidArgument("activation input must be finite");
  return spec.derivative(x);
}

Matrix AffineActivation::values(const Eigen::Ref<const Matrix>& x) const {
  Matrix v = base.values(x);
  if (!is_raw()) v = (scale * v.array() + shift).matrix();
  return v;
}

Matrix AffineActivation::derivatives(const Eigen::Ref<const Matrix>& x) const {
  Matrix v = base.derivatives(x);
  if (scale != 1.0) v *= scale;
  return v;
}

std::string AffineActivation::label() const { return is_raw() ? base.name() : base.name() + "-gpn"; }

}  // namespace bsnn

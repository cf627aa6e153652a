#pragma once

#include "bsnn/activations.hpp"
#include "bsnn/common.hpp"
#include "bsnn/ortho.hpp"
#include "bsnn/rng.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace bsnn {

enum class WeightMode { HaarOrthogonal, RowNormalized };

/// Batch norm uses mini-batch statistics in Train and running statistics in Eval.
enum class Phase { Train, Eval };

struct NetworkConfig {
  Index width = 0;
  Index depth = 0;
  AffineActivation activation{ActivationSpec::identity()};
  WeightMode weight_mode = WeightMode::HaarOrthogonal;
  bool batchnorm = false;
  /// Input dimension of an unconstrained bottom adapter (0: none). With an
  /// adapter, its output is thin-shell normalized before the first layer.
  Index input_dim = 0;
  /// Output dimension of an unconstrained top adapter (0: none).
  Index output_dim = 0;
  Scalar bn_epsilon = 1e-5;
  /// Weight kept on the old running statistic per update.
  Scalar bn_momentum = 0.9;

  void validate() const;
};

struct BatchNormParams {
  Vector gamma;
  Vector beta;
  Vector running_mean;
  Vector running_var;
};

struct Layer {
  Matrix weight;                     ///< effective W^{(l)}
  std::optional<RowNormParam> param; ///< raw V^{(l)}, RowNormalized mode only
  std::optional<BatchNormParams> bn;
};

/// Depth-L stack x^{(l+1)} = phi(W^{(l)} x^{(l)}) with optional adapters.
/// Batches are column-major: one sample per column.
class Network {
 public:
  Network(NetworkConfig config, std::vector<Layer> layers, std::optional<Matrix> input_adapter,
          std::optional<Matrix> output_adapter);

  const NetworkConfig& config() const noexcept { return config_; }
  Index width() const noexcept { return config_.width; }
  Index depth() const noexcept { return config_.depth; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  const Layer& layer(Index l) const { return layers_.at(static_cast<std::size_t>(l)); }
  const std::optional<Matrix>& input_adapter() const noexcept { return input_adapter_; }
  const std::optional<Matrix>& output_adapter() const noexcept { return output_adapter_; }

  /// The trainable matrix of layer l (0-based): V in RowNormalized mode, else W.
  const Matrix& parameter(Index l) const;
  void set_parameter(Index l, Matrix value);
  void set_input_adapter(Matrix a);
  void set_output_adapter(Matrix b);
  BatchNormParams& batchnorm(Index l);
  void set_weight(Index l, Matrix w);

  Index input_width() const noexcept { return config_.input_dim > 0 ? config_.input_dim : config_.width; }
  Index output_width() const noexcept { return config_.output_dim > 0 ? config_.output_dim : config_.width; }

 private:
  NetworkConfig config_;
  std::vector<Layer> layers_;
  std::optional<Matrix> input_adapter_;
  std::optional<Matrix> output_adapter_;
};

Network init_network(const NetworkConfig& config, const Rng& rng);

struct LayerState {
  Matrix h;      ///< pre-activation fed to phi (after batch norm when enabled)
  Matrix x_out;  ///< x^{(l+1)} = phi(h)
  // Batch-norm caches.
  Matrix linear;   ///< W x, before normalization
  Matrix h_hat;
  Vector inv_std;
};

struct ForwardTrace {
  Phase phase = Phase::Train;
  Matrix raw_input;
  Matrix adapter_centered;  ///< A x - mean, input adapter only
  Vector adapter_norms;     ///< ||A x - mean|| per sample
  Matrix x_in;              ///< x^{(1)}
  std::vector<LayerState> layers;
  Matrix outputs;           ///< logits with an output adapter, else x^{(L+1)}
  /// (L+1) x n: ||x^{(l)}||^2 / d for l = 1..L+1.
  Matrix norm_telemetry;

  Index depth() const noexcept { return static_cast<Index>(layers.size()); }
  Index batch() const noexcept { return x_in.cols(); }
  /// x^{(l)}, 1-based, l in [1, L+1].
  const Matrix& x(Index l) const;
};

struct BackwardTrace {
  Matrix g_top;                      ///< dE/dx^{(L+1)}
  std::vector<Matrix> y;             ///< y^{(l)} = dE/d(W^{(l)} x^{(l)})
  std::vector<Matrix> D;             ///< phi'(h^{(l)})
  std::vector<Matrix> weight_grads;  ///< dE/dW^{(l)} (empty when not requested)
  std::vector<Matrix> raw_grads;     ///< dE/dV^{(l)}, RowNormalized mode
  std::vector<Vector> gamma_grads;
  std::vector<Vector> beta_grads;
  Matrix input_adapter_grad;
  Matrix output_adapter_grad;
  Matrix dx_in;                      ///< dE/dx^{(1)}
  std::vector<Scalar> y_norms;       ///< ||y^{(l)}||_F
  std::vector<Scalar> grad_fro;      ///< ||dE/dW^{(l)}||_F
  std::vector<Scalar> raw_grad_fro;  ///< ||dE/dV^{(l)}||_F
};

/// Throws OverflowError with the first layer producing a non-finite state.
ForwardTrace forward(const Network& net, const Eigen::Ref<const Matrix>& batch, Phase phase = Phase::Train);
/// Same as forward() but updates batch-norm running statistics (training).
ForwardTrace forward_train(Network& net, const Eigen::Ref<const Matrix>& batch);

/// `output_grad` is dE/d(outputs): logits with an output adapter, else x^{(L+1)}.
BackwardTrace backward(const Network& net, const ForwardTrace& trace, const Eigen::Ref<const Matrix>& output_grad,
                       bool weight_grads = true);

enum class LossKind { SoftmaxCrossEntropy, InjectedGaussian };

struct LossResult {
  std::optional<Scalar> loss;
  Matrix grad;
};

/// Mean softmax cross-entropy over the batch and its gradient w.r.t. logits.
LossResult softmax_cross_entropy(const Eigen::Ref<const Matrix>& logits, std::span<const int> labels);
/// SoftmaxCrossEntropy needs labels; InjectedGaussian needs rng and returns a
/// fresh standard Gaussian gradient with no loss.
LossResult loss_and_top_gradient(LossKind kind, const Eigen::Ref<const Matrix>& outputs,
                                 std::span<const int> labels, Rng* rng = nullptr);

/// Per-sample argmax accuracy.
Scalar accuracy(const Eigen::Ref<const Matrix>& logits, std::span<const int> labels);

struct Gradients {
  std::vector<Matrix> layers;  ///< w.r.t. parameter(l)
  std::vector<Vector> gamma;
  std::vector<Vector> beta;
  Matrix input_adapter;
  Matrix output_adapter;
};

Gradients collect_gradients(const Network& net, const BackwardTrace& trace);

struct SgdState {
  Gradients velocity;
  bool initialized = false;
};

/// v <- momentum*v + g; p <- p - lr*v, for every trainable tensor. Refuses
/// non-finite gradients with NumericalError before touching anything.
void sgd_momentum_step(Network& net, const Gradients& grads, Scalar lr, Scalar momentum, SgdState& state);

using LossFn = std::function<Scalar(const Matrix& outputs)>;

inline constexpr Index kFiniteDifferenceCap = 100000;

/// Central differences on every entry of every layer parameter (raw V in
/// RowNormalized mode). Batch norm runs in Train phase.
std::vector<Matrix> finite_difference_grad(const Network& net, const Eigen::Ref<const Matrix>& batch,
                                           const LossFn& loss, Scalar step);

}  // namespace bsnn

#include "bsnn/network.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace bsnn {

void NetworkConfig::validate() const {
  if (width < 1) throw InvalidArgument("network width must be >= 1");
  if (depth < 1) throw InvalidArgument("network depth must be >= 1");
  if (input_dim < 0 || output_dim < 0) throw InvalidArgument("adapter dimensions must be positive");
  if (!(bn_epsilon > 0.0)) throw InvalidArgument("batch-norm epsilon must be positive");
  if (!(bn_momentum >= 0.0 && bn_momentum < 1.0))
    throw InvalidArgument("batch-norm running momentum must lie in [0, 1)");
}

Network::Network(NetworkConfig config, std::vector<Layer> layers, std::optional<Matrix> input_adapter,
                 std::optional<Matrix> output_adapter)
    : config_(std::move(config)),
      layers_(std::move(layers)),
      input_adapter_(std::move(input_adapter)),
      output_adapter_(std::move(output_adapter)) {
  config_.validate();
  if (static_cast<Index>(layers_.size()) != config_.depth)
    throw InvalidArgument("layer count does not match depth");
  for (const Layer& l : layers_) {
    if (l.weight.rows() != config_.width || l.weight.cols() != config_.width)
      throw InvalidArgument("layer weight must be width x width");
    if ((config_.weight_mode == WeightMode::RowNormalized) != l.param.has_value())
      throw InvalidArgument("raw parametrization must be present exactly in RowNormalized mode");
    if (config_.batchnorm != l.bn.has_value())
      throw InvalidArgument("batch-norm state must be present exactly when enabled");
  }
  if ((config_.input_dim > 0) != input_adapter_.has_value() ||
      (input_adapter_ && (input_adapter_->rows() != config_.width || input_adapter_->cols() != config_.input_dim)))
    throw InvalidArgument("input adapter must be width x input_dim");
  if ((config_.output_dim > 0) != output_adapter_.has_value() ||
      (output_adapter_ && (output_adapter_->rows() != config_.output_dim || output_adapter_->cols() != config_.width)))
    throw InvalidArgument("output adapter must be output_dim x width");
}

const Matrix& Network::parameter(Index l) const {
  const Layer& lay = layer(l);
  return lay.param ? lay.param->raw() : lay.weight;
}

void Network::set_parameter(Index l, Matrix value) {
  Layer& lay = layers_.at(static_cast<std::size_t>(l));
  if (value.rows() != config_.width || value.cols() != config_.width)
    throw InvalidArgument("layer parameter must be width x width");
  if (lay.param) {
    lay.param->set_raw(std::move(value));
    lay.weight = lay.param->derived();
  } else {
    lay.weight = std::move(value);
  }
}

void Network::set_weight(Index l, Matrix w) {
  if (config_.weight_mode == WeightMode::RowNormalized)
    throw InvalidArgument("set_weight is only meaningful for directly parametrized layers");
  set_parameter(l, std::move(w));
}

void Network::set_input_adapter(Matrix a) {
  if (!input_adapter_ || a.rows() != input_adapter_->rows() || a.cols() != input_adapter_->cols())
    throw InvalidArgument("input adapter shape mismatch");
  input_adapter_ = std::move(a);
}

void Network::set_output_adapter(Matrix b) {
  if (!output_adapter_ || b.rows() != output_adapter_->rows() || b.cols() != output_adapter_->cols())
    throw InvalidArgument("output adapter shape mismatch");
  output_adapter_ = std::move(b);
}

BatchNormParams& Network::batchnorm(Index l) {
  Layer& lay = layers_.at(static_cast<std::size_t>(l));
  if (!lay.bn) throw InvalidArgument("batch norm is not enabled");
  return *lay.bn;
}

Network init_network(const NetworkConfig& config, const Rng& rng) {
  config.validate();
  std::vector<Layer> layers(static_cast<std::size_t>(config.depth));
  for (Index l = 0; l < config.depth; ++l) {
    Rng stream = rng.derive("layer", static_cast<std::uint64_t>(l));
    Layer& lay = layers[static_cast<std::size_t>(l)];
    Matrix w = sample_haar_orthogonal(config.width, stream).matrix();
    if (config.weight_mode == WeightMode::RowNormalized) {
      lay.param.emplace(std::move(w));
      lay.weight = lay.param->derived();
    } else {
      lay.weight = std::move(w);
    }
    if (config.batchnorm) {
      lay.bn = BatchNormParams{Vector::Ones(config.width), Vector::Zero(config.width),
                               Vector::Zero(config.width), Vector::Ones(config.width)};
    }
  }
  std::optional<Matrix> in, out;
  if (config.input_dim > 0) {
    Rng s = rng.derive("input-adapter");
    in = sample_semi_orthogonal(config.width, config.input_dim, s);
  }
  if (config.output_dim > 0) {
    Rng s = rng.derive("output-adapter");
    out = sample_semi_orthogonal(config.output_dim, config.width, s);
  }
  return Network(config, std::move(layers), std::move(in), std::move(out));
}

const Matrix& ForwardTrace::x(Index l) const {
  if (l < 1 || l > depth() + 1) throw InvalidArgument("layer index out of range");
  return l == 1 ? x_in : layers[static_cast<std::size_t>(l - 2)].x_out;
}

namespace {

void check_finite(const Matrix& m, Index layer, const char* what) {
  if (!m.allFinite())
    throw OverflowError(std::string("non-finite ") + what + " at layer " + std::to_string(layer), static_cast<int>(layer));
}

ForwardTrace forward_impl(const Network& net, const Eigen::Ref<const Matrix>& batch, Phase phase,
                          std::vector<BatchNormParams>* running_updates) {
  const NetworkConfig& cfg = net.config();
  if (batch.rows() != net.input_width())
    throw InvalidArgument("batch has " + std::to_string(batch.rows()) + " rows, network expects " +
                          std::to_string(net.input_width()));
  if (batch.cols() < 1) throw InvalidArgument("empty batch");
  const Index d = cfg.width;
  const Index n = batch.cols();
  const Scalar sqrt_d = std::sqrt(static_cast<Scalar>(d));

  ForwardTrace t;
  t.phase = phase;
  t.raw_input = batch;
  if (net.input_adapter()) {
    Matrix u = *net.input_adapter() * batch;
    u.rowwise() -= u.colwise().mean();
    t.adapter_norms = u.colwise().norm().transpose();
    for (Index j = 0; j < n; ++j)
      if (!(t.adapter_norms[j] > 0.0))
        throw NumericalError("adapted input column " + std::to_string(j) + " has zero variance");
    t.x_in = u * (sqrt_d * t.adapter_norms.cwiseInverse()).asDiagonal();
    t.adapter_centered = std::move(u);
  } else {
    t.x_in = batch;
  }
  check_finite(t.x_in, 0, "input");

  t.norm_telemetry.resize(cfg.depth + 1, n);
  t.norm_telemetry.row(0) = t.x_in.colwise().squaredNorm() / static_cast<Scalar>(d);
  t.layers.resize(static_cast<std::size_t>(cfg.depth));

  const Matrix* x = &t.x_in;
  for (Index l = 0; l < cfg.depth; ++l) {
    const Layer& lay = net.layer(l);
    LayerState& st = t.layers[static_cast<std::size_t>(l)];
    if (lay.bn) {
      st.linear = lay.weight * *x;
      Vector mean, var;
      if (phase == Phase::Train) {
        mean = st.linear.rowwise().mean();
        var = (st.linear.colwise() - mean).array().square().rowwise().mean();
        if (running_updates) {
          BatchNormParams& run = (*running_updates)[static_cast<std::size_t>(l)];
          run.running_mean = cfg.bn_momentum * run.running_mean + (1.0 - cfg.bn_momentum) * mean;
          run.running_var = cfg.bn_momentum * run.running_var + (1.0 - cfg.bn_momentum) * var;
        }
      } else {
        mean = lay.bn->running_mean;
        var = lay.bn->running_var;
      }
      st.inv_std = (var.array() + cfg.bn_epsilon).rsqrt();
      st.h_hat = st.inv_std.asDiagonal() * (st.linear.colwise() - mean);
      st.h = (lay.bn->gamma.asDiagonal() * st.h_hat).colwise() + lay.bn->beta;
    } else {
      st.h = lay.weight * *x;
    }
    st.x_out = cfg.activation.values(st.h);
    check_finite(st.x_out, l + 1, "activation");
    t.norm_telemetry.row(l + 1) = st.x_out.colwise().squaredNorm() / static_cast<Scalar>(d);
    x = &st.x_out;
  }
  t.outputs = net.output_adapter() ? Matrix(*net.output_adapter() * *x) : *x;
  check_finite(t.outputs, cfg.depth, "output");
  return t;
}

}  // namespace

ForwardTrace forward(const Network& net, const Eigen::Ref<const Matrix>& batch, Phase phase) {
  return forward_impl(net, batch, phase, nullptr);
}

ForwardTrace forward_train(Network& net, const Eigen::Ref<const Matrix>& batch) {
  if (!net.config().batchnorm) return forward_impl(net, batch, Phase::Train, nullptr);
  std::vector<BatchNormParams> running;
  for (Index l = 0; l < net.depth(); ++l) running.push_back(*net.layer(l).bn);
  ForwardTrace t = forward_impl(net, batch, Phase::Train, &running);
  for (Index l = 0; l < net.depth(); ++l) {
    net.batchnorm(l).running_mean = running[static_cast<std::size_t>(l)].running_mean;
    net.batchnorm(l).running_var = running[static_cast<std::size_t>(l)].running_var;
  }
  return t;
}

BackwardTrace backward(const Network& net, const ForwardTrace& trace, const Eigen::Ref<const Matrix>& output_grad,
                       bool weight_grads) {
  const NetworkConfig& cfg = net.config();
  const Index L = cfg.depth;
  if (trace.depth() != L || trace.x_in.rows() != cfg.width)
    throw InvalidArgument("trace was not produced by this network");
  if (output_grad.rows() != trace.outputs.rows() || output_grad.cols() != trace.outputs.cols())
    throw InvalidArgument("output gradient shape does not match the batch outputs");

  BackwardTrace b;
  const Matrix& x_top = trace.x(L + 1);
  if (net.output_adapter()) {
    b.output_adapter_grad = output_grad * x_top.transpose();
    b.g_top = net.output_adapter()->transpose() * output_grad;
  } else {
    b.g_top = output_grad;
  }

  const auto nl = static_cast<std::size_t>(L);
  b.y.resize(nl);
  b.D.resize(nl);
  b.y_norms.resize(nl);
  if (weight_grads) {
    b.weight_grads.resize(nl);
    b.grad_fro.resize(nl);
  }
  if (cfg.weight_mode == WeightMode::RowNormalized && weight_grads) {
    b.raw_grads.resize(nl);
    b.raw_grad_fro.resize(nl);
  }
  if (cfg.batchnorm) {
    b.gamma_grads.resize(nl);
    b.beta_grads.resize(nl);
  }

  Matrix upstream = b.g_top;  // dE/dx^{(l+1)}
  for (Index l = L - 1; l >= 0; --l) {
    const auto li = static_cast<std::size_t>(l);
    const Layer& lay = net.layer(l);
    const LayerState& st = trace.layers[li];
    b.D[li] = cfg.activation.derivatives(st.h);
    Matrix dh = b.D[li].cwiseProduct(upstream);
    if (lay.bn) {
      const Index n = dh.cols();
      b.gamma_grads[li] = dh.cwiseProduct(st.h_hat).rowwise().sum();
      b.beta_grads[li] = dh.rowwise().sum();
      const Matrix dhat = lay.bn->gamma.asDiagonal() * dh;
      if (trace.phase == Phase::Train) {
        const Vector sum_dhat = dhat.rowwise().sum();
        const Vector sum_dhat_hhat = dhat.cwiseProduct(st.h_hat).rowwise().sum();
        Matrix inner = static_cast<Scalar>(n) * dhat;
        inner.colwise() -= sum_dhat;
        inner -= sum_dhat_hhat.asDiagonal() * st.h_hat;
        dh = (st.inv_std / static_cast<Scalar>(n)).asDiagonal() * inner;
      } else {
        dh = st.inv_std.asDiagonal() * dhat;
      }
    }
    b.y[li] = std::move(dh);
    b.y_norms[li] = b.y[li].norm();
    const Matrix& x_in = trace.x(l + 1);
    if (weight_grads) {
      b.weight_grads[li] = b.y[li] * x_in.transpose();
      b.grad_fro[li] = b.weight_grads[li].norm();
      if (lay.param) {
        b.raw_grads[li] = lay.param->chain_gradient(b.weight_grads[li]);
        b.raw_grad_fro[li] = b.raw_grads[li].norm();
      }
    }
    upstream = lay.weight.transpose() * b.y[li];
    if (!upstream.allFinite())
      throw OverflowError("non-finite error signal at layer " + std::to_string(l + 1), static_cast<int>(l + 1));
  }
  b.dx_in = upstream;

  if (net.input_adapter()) {
    // x = sqrt(d) c/||c||, c = u - mean(u), u = A x_raw.
    const Scalar sqrt_d = std::sqrt(static_cast<Scalar>(cfg.width));
    Matrix dc(upstream.rows(), upstream.cols());
    for (Index j = 0; j < upstream.cols(); ++j) {
      const Scalar norm = trace.adapter_norms[j];
      const auto c_hat = trace.adapter_centered.col(j) / norm;
      const Scalar proj = c_hat.dot(upstream.col(j));
      dc.col(j) = (sqrt_d / norm) * (upstream.col(j) - proj * c_hat);
    }
    dc.rowwise() -= dc.colwise().mean();
    b.input_adapter_grad = dc * trace.raw_input.transpose();
  }
  return b;
}

LossResult softmax_cross_entropy(const Eigen::Ref<const Matrix>& logits, std::span<const int> labels) {
  const Index k = logits.rows();
  const Index n = logits.cols();
  if (static_cast<Index>(labels.size()) != n) throw InvalidArgument("label count does not match batch size");
  LossResult r;
  r.grad.resize(k, n);
  Scalar total = 0.0;
  for (Index j = 0; j < n; ++j) {
    const int y = labels[static_cast<std::size_t>(j)];
    if (y < 0 || y >= k)
      throw InvalidArgument("label " + std::to_string(y) + " out of range [0, " + std::to_string(k) + ")");
    const Scalar mx = logits.col(j).maxCoeff();
    const Eigen::ArrayXd e = (logits.col(j).array() - mx).exp();
    const Scalar z = e.sum();
    total += std::log(z) + mx - logits(y, j);
    r.grad.col(j) = (e / z).matrix();
    r.grad(y, j) -= 1.0;
  }
  r.grad /= static_cast<Scalar>(n);
  r.loss = total / static_cast<Scalar>(n);
  return r;
}

LossResult loss_and_top_gradient(LossKind kind, const Eigen::Ref<const Matrix>& outputs, std::span<const int> labels,
                                 Rng* rng) {
  if (kind == LossKind::SoftmaxCrossEntropy) return softmax_cross_entropy(outputs, labels);
  if (!rng) throw InvalidArgument("injected Gaussian gradients need a random stream");
  LossResult r;
  r.grad = rng->gaussian_matrix(outputs.rows(), outputs.cols());
  return r;
}

Scalar accuracy(const Eigen::Ref<const Matrix>& logits, std::span<const int> labels) {
  if (static_cast<Index>(labels.size()) != logits.cols()) throw InvalidArgument("label count mismatch");
  Index hits = 0;
  for (Index j = 0; j < logits.cols(); ++j) {
    Index arg = 0;
    logits.col(j).maxCoeff(&arg);
    if (arg == labels[static_cast<std::size_t>(j)]) ++hits;
  }
  return static_cast<Scalar>(hits) / static_cast<Scalar>(logits.cols());
}

Gradients collect_gradients(const Network& net, const BackwardTrace& trace) {
  if (trace.weight_grads.empty()) throw InvalidArgument("backward pass did not compute weight gradients");
  Gradients g;
  const bool raw = net.config().weight_mode == WeightMode::RowNormalized;
  g.layers = raw ? trace.raw_grads : trace.weight_grads;
  g.gamma = trace.gamma_grads;
  g.beta = trace.beta_grads;
  g.input_adapter = trace.input_adapter_grad;
  g.output_adapter = trace.output_adapter_grad;
  return g;
}

namespace {

template <class T>
void momentum_update(T& param, const T& grad, T& velocity, Scalar lr, Scalar momentum) {
  velocity = momentum * velocity + grad;
  param -= lr * velocity;
}

bool finite(const Gradients& g) {
  for (const auto& m : g.layers)
    if (!m.allFinite()) return false;
  for (const auto& v : g.gamma)
    if (!v.allFinite()) return false;
  for (const auto& v : g.beta)
    if (!v.allFinite()) return false;
  return g.input_adapter.allFinite() && g.output_adapter.allFinite();
}

Gradients zeros_like(const Gradients& g) {
  Gradients z;
  for (const auto& m : g.layers) z.layers.push_back(Matrix::Zero(m.rows(), m.cols()));
  for (const auto& v : g.gamma) z.gamma.push_back(Vector::Zero(v.size()));
  for (const auto& v : g.beta) z.beta.push_back(Vector::Zero(v.size()));
  z.input_adapter = Matrix::Zero(g.input_adapter.rows(), g.input_adapter.cols());
  z.output_adapter = Matrix::Zero(g.output_adapter.rows(), g.output_adapter.cols());
  return z;
}

}  // namespace

void sgd_momentum_step(Network& net, const Gradients& grads, Scalar lr, Scalar momentum, SgdState& state) {
  if (!(lr > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
  if (static_cast<Index>(grads.layers.size()) != net.depth()) throw InvalidArgument("gradient layer count mismatch");
  if (!finite(grads)) throw NumericalError("non-finite gradient; SGD step refused");
  if (!state.initialized) {
    state.velocity = zeros_like(grads);
    state.initialized = true;
  }
  Gradients& v = state.velocity;
  for (Index l = 0; l < net.depth(); ++l) {
    const auto li = static_cast<std::size_t>(l);
    Matrix p = net.parameter(l);
    momentum_update(p, grads.layers[li], v.layers[li], lr, momentum);
    net.set_parameter(l, std::move(p));
    if (net.config().batchnorm) {
      BatchNormParams& bn = net.batchnorm(l);
      momentum_update(bn.gamma, grads.gamma[li], v.gamma[li], lr, momentum);
      momentum_update(bn.beta, grads.beta[li], v.beta[li], lr, momentum);
    }
  }
  if (net.input_adapter() && grads.input_adapter.size() > 0) {
    Matrix a = *net.input_adapter();
    momentum_update(a, grads.input_adapter, v.input_adapter, lr, momentum);
    net.set_input_adapter(std::move(a));
  }
  if (net.output_adapter() && grads.output_adapter.size() > 0) {
    Matrix b = *net.output_adapter();
    momentum_update(b, grads.output_adapter, v.output_adapter, lr, momentum);
    net.set_output_adapter(std::move(b));
  }
}

std::vector<Matrix> finite_difference_grad(const Network& net, const Eigen::Ref<const Matrix>& batch,
                                           const LossFn& loss, Scalar step) {
  if (!(step >= 1e-7 && step <= 1e-3)) throw InvalidArgument("finite-difference step must lie in [1e-7, 1e-3]");
  const Index d = net.width();
  if (d * d * net.depth() > kFiniteDifferenceCap)
    throw InvalidArgument("network too large for finite differences (d*d*L > " +
                          std::to_string(kFiniteDifferenceCap) + ")");
  Network work = net;
  std::vector<Matrix> grads;
  for (Index l = 0; l < net.depth(); ++l) {
    const Matrix base = net.parameter(l);
    Matrix g(d, d);
    for (Index j = 0; j < d; ++j) {
      for (Index i = 0; i < d; ++i) {
        Matrix p = base;
        p(i, j) = base(i, j) + step;
        work.set_parameter(l, p);
        const Scalar up = loss(forward(work, batch, Phase::Train).outputs);
        p(i, j) = base(i, j) - step;
        work.set_parameter(l, p);
        const Scalar down = loss(forward(work, batch, Phase::Train).outputs);
        g(i, j) = (up - down) / (2.0 * step);
      }
    }
    work.set_parameter(l, base);
    grads.push_back(std::move(g));
  }
  return grads;
}

}  // namespace bsnn

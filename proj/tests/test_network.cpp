#include "bsnn/gpn.hpp"
#include "bsnn/network.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace bsnn;

namespace {

NetworkConfig config(Index d, Index L, AffineActivation act, WeightMode mode = WeightMode::HaarOrthogonal) {
  NetworkConfig c;
  c.width = d;
  c.depth = L;
  c.activation = std::move(act);
  c.weight_mode = mode;
  return c;
}

AffineActivation gpn(const char* name) { return gpn_normalized(ActivationSpec::from_name(name)); }

Scalar cross_entropy_loss(const Matrix& out, const std::vector<int>& labels) {
  return *softmax_cross_entropy(out, labels).loss;
}

/// Max entry error relative to the layer's largest finite-difference entry.
Scalar gradient_error(const std::vector<Matrix>& analytic, const std::vector<Matrix>& fd) {
  Scalar worst = 0.0;
  for (std::size_t l = 0; l < fd.size(); ++l) {
    const Scalar scale = std::max(fd[l].cwiseAbs().maxCoeff(), 1e-12);
    worst = std::max(worst, (analytic[l] - fd[l]).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

Scalar min_abs_preactivation(const ForwardTrace& t) {
  Scalar m = INFINITY;
  for (const LayerState& s : t.layers) m = std::min(m, s.h.cwiseAbs().minCoeff());
  return m;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_THROWS_AS(config(0, 1, {ActivationSpec::tanh()}).validate(), InvalidArgument);
  CHECK_THROWS_AS(config(3, 0, {ActivationSpec::tanh()}).validate(), InvalidArgument);
  NetworkConfig c = config(3, 2, {ActivationSpec::tanh()});
  c.input_dim = -1;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  CHECK_THROWS_AS(init_network(config(0, 1, {ActivationSpec::tanh()}), Rng(0)), InvalidArgument);
}

TEST_CASE("d = 1 identity network computes +-x") {
  const Network net = init_network(config(1, 1, {ActivationSpec::identity()}), Rng(3));
  Matrix x(1, 1);
  x << 2.5;
  const double y = forward(net, x).outputs(0, 0);
  CHECK(std::abs(std::abs(y) - 2.5) < 1e-15);
}

TEST_CASE("initialization: orthogonal weights, unit rows, determinism") {
  const Network a = init_network(config(64, 10, {ActivationSpec::tanh()}), Rng(9));
  for (Index l = 0; l < 10; ++l) CHECK(orthogonality_defect(a.layer(l).weight) < 1e-10);
  const Network b = init_network(config(64, 10, {ActivationSpec::tanh()}), Rng(9));
  for (Index l = 0; l < 10; ++l) CHECK(a.layer(l).weight == b.layer(l).weight);
  const Network r = init_network(config(16, 3, {ActivationSpec::tanh()}, WeightMode::RowNormalized), Rng(9));
  for (Index l = 0; l < 3; ++l) {
    REQUIRE(r.layer(l).param);
    CHECK(r.parameter(l) == r.layer(l).param->raw());
    for (Index i = 0; i < 16; ++i) CHECK(std::abs(r.layer(l).weight.row(i).norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("all 200 layers orthogonal at d = 500") {
  const Network net = init_network(config(500, 200, {ActivationSpec::tanh()}), Rng(1));
  Scalar worst = 0.0;
  for (Index l = 0; l < 200; ++l) worst = std::max(worst, orthogonality_defect(net.layer(l).weight));
  CHECK(worst < 1e-10);
}

TEST_CASE("identity weights and activation pass inputs through") {
  Network net = init_network(config(5, 4, {ActivationSpec::identity()}), Rng(2));
  for (Index l = 0; l < 4; ++l) net.set_weight(l, Matrix::Identity(5, 5));
  Rng rng(4);
  const Matrix x = rng.gaussian_matrix(5, 3);
  const ForwardTrace t = forward(net, x);
  CHECK(t.outputs == x);
  CHECK(t.x(1) == x);
  CHECK(t.x(5) == x);
  CHECK_THROWS_AS(t.x(6), InvalidArgument);
  CHECK(t.depth() == 4);
  CHECK((t.norm_telemetry.array() >= 0.0).all());
}

TEST_CASE("scalar backward example") {
  Network net = init_network(config(1, 1, {ActivationSpec::identity()}), Rng(0));
  net.set_weight(0, Matrix::Constant(1, 1, 1.0));
  const ForwardTrace t = forward(net, Matrix::Constant(1, 1, 3.0));
  const BackwardTrace b = backward(net, t, Matrix::Constant(1, 1, 2.0));
  CHECK(b.weight_grads[0](0, 0) == 6.0);
  CHECK(b.grad_fro[0] == 6.0);
}

TEST_CASE("gradient norm identity with batch size 1") {
  Rng master(2025);
  const std::vector<std::string> names{"identity", "tanh", "relu", "leakyrelu", "elu", "selu", "gelu"};
  for (int trial = 0; trial < 40; ++trial) {
    Rng rng = master.derive("trial", static_cast<std::uint64_t>(trial));
    const Index d = 2 + static_cast<Index>(rng.next_u64() % 63);
    const Index L = 1 + static_cast<Index>(rng.next_u64() % 8);
    const auto& name = names[rng.next_u64() % names.size()];
    const bool use_gpn = name != "identity" && rng.uniform() < 0.5;
    const auto mode = rng.uniform() < 0.5 ? WeightMode::HaarOrthogonal : WeightMode::RowNormalized;
    const ActivationSpec spec = ActivationSpec::from_name(name);
    const Network net = init_network(config(d, L, use_gpn ? gpn_normalized(spec) : AffineActivation{spec}, mode), rng);
    const Matrix x = rng.gaussian_matrix(d, 1);
    const ForwardTrace t = forward(net, x);
    const BackwardTrace b = backward(net, t, rng.gaussian_matrix(d, 1));
    for (Index l = 0; l < L; ++l) {
      const Scalar g = b.weight_grads[static_cast<std::size_t>(l)].norm();
      const Scalar prod = t.x(l + 1).norm() * b.y[static_cast<std::size_t>(l)].norm();
      CHECK(b.grad_fro[static_cast<std::size_t>(l)] == doctest::Approx(g).epsilon(1e-12));
      CHECK(std::abs(g - prod) <= 1e-10 * std::max(prod, 1e-300));
    }
  }
}

TEST_CASE("backward matches finite differences for normalized activations") {
  for (const char* name : {"tanh", "relu", "leakyrelu", "elu", "selu", "gelu"}) {
    for (WeightMode mode : {WeightMode::HaarOrthogonal, WeightMode::RowNormalized}) {
      CAPTURE(name);
      CAPTURE(static_cast<int>(mode));
      const AffineActivation act = gpn(name);
      const Network net = init_network(config(8, 3, act, mode), Rng(17));
      // Redraw the batch until no pre-activation sits within 1e-3 of a kink.
      Matrix x;
      ForwardTrace t;
      Rng rng(99);
      do {
        x = rng.gaussian_matrix(8, 4);
        t = forward(net, x);
      } while (act.base.kinked() && min_abs_preactivation(t) <= 1e-3);
      const std::vector<int> labels{0, 3, 5, 7};
      const LossResult loss = softmax_cross_entropy(t.outputs, labels);
      const BackwardTrace b = backward(net, t, loss.grad);
      const Gradients g = collect_gradients(net, b);
      const auto fd = finite_difference_grad(
          net, x, [&](const Matrix& out) { return cross_entropy_loss(out, labels); }, 1e-6);
      CHECK(gradient_error(g.layers, fd) < 1e-4);
    }
  }
}

TEST_CASE("finite differences on a quadratic loss over a linear net") {
  const Network net = init_network(config(4, 2, {ActivationSpec::identity()}), Rng(5));
  Rng rng(6);
  const Matrix x = rng.gaussian_matrix(4, 3);
  const Matrix target = rng.gaussian_matrix(4, 3);
  const ForwardTrace t = forward(net, x);
  const BackwardTrace b = backward(net, t, t.outputs - target);
  const auto fd = finite_difference_grad(
      net, x, [&](const Matrix& out) { return 0.5 * (out - target).squaredNorm(); }, 1e-4);
  for (std::size_t l = 0; l < 2; ++l) CHECK((b.weight_grads[l] - fd[l]).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("central differences are second order") {
  const Network net = init_network(config(4, 2, gpn("tanh")), Rng(8));
  Rng rng(1);
  const Matrix x = rng.gaussian_matrix(4, 2);
  const std::vector<int> labels{1, 2};
  const ForwardTrace t = forward(net, x);
  const BackwardTrace b = backward(net, t, softmax_cross_entropy(t.outputs, labels).grad);
  auto err = [&](Scalar h) {
    const auto fd = finite_difference_grad(net, x, [&](const Matrix& o) { return cross_entropy_loss(o, labels); }, h);
    Scalar e = 0.0;
    for (std::size_t l = 0; l < fd.size(); ++l) e = std::max(e, (fd[l] - b.weight_grads[l]).cwiseAbs().maxCoeff());
    return e;
  };
  const Scalar ratio = err(1e-3) / err(5e-4);
  CHECK(ratio > 3.0);
  CHECK(ratio < 5.0);
}

TEST_CASE("finite difference guards") {
  const Network small = init_network(config(4, 1, {ActivationSpec::tanh()}), Rng(0));
  const Matrix x = Matrix::Ones(4, 1);
  const LossFn loss = [](const Matrix& o) { return o.sum(); };
  CHECK_THROWS_AS(finite_difference_grad(small, x, loss, 1e-2), InvalidArgument);
  CHECK_THROWS_AS(finite_difference_grad(small, x, loss, 1e-9), InvalidArgument);
  const Network big = init_network(config(100, 11, {ActivationSpec::tanh()}), Rng(0));
  CHECK_THROWS_AS(finite_difference_grad(big, Matrix::Ones(100, 1), loss, 1e-5), InvalidArgument);
}

TEST_CASE("cross-entropy values and label checks") {
  const Matrix uniform = Matrix::Zero(10, 3);
  const std::vector<int> labels{0, 4, 9};
  CHECK(*softmax_cross_entropy(uniform, labels).loss == doctest::Approx(std::log(10.0)).epsilon(1e-12));
  Matrix extreme = Matrix::Constant(10, 3, -500.0);
  for (int j = 0; j < 3; ++j) extreme(labels[static_cast<std::size_t>(j)], j) = 500.0;
  const LossResult r = softmax_cross_entropy(extreme, labels);
  CHECK(*r.loss < 1e-12);
  CHECK(r.grad.allFinite());
  CHECK_THROWS_AS(softmax_cross_entropy(uniform, std::vector<int>{0, 10, 1}), InvalidArgument);
  CHECK_THROWS_AS(softmax_cross_entropy(uniform, std::vector<int>{0, -1, 1}), InvalidArgument);
  CHECK(accuracy(extreme, labels) == 1.0);
}

TEST_CASE("injected Gaussian top gradients") {
  Rng rng(44);
  const Matrix outputs = Matrix::Zero(500, 1);
  int inside = 0;
  for (int i = 0; i < 1000; ++i) {
    const LossResult r = loss_and_top_gradient(LossKind::InjectedGaussian, outputs, {}, &rng);
    CHECK_FALSE(r.loss.has_value());
    const Scalar q = r.grad.squaredNorm() / 500.0;
    if (q >= 0.8 && q <= 1.2) ++inside;
  }
  CHECK(inside >= 990);
  CHECK_THROWS_AS(loss_and_top_gradient(LossKind::InjectedGaussian, outputs, {}, nullptr), InvalidArgument);
}

TEST_CASE("SGD with momentum") {
  Network net = init_network(config(1, 1, {ActivationSpec::identity()}), Rng(0));
  net.set_weight(0, Matrix::Constant(1, 1, 5.0));
  Gradients g;
  g.layers = {Matrix::Constant(1, 1, 2.0)};
  SgdState state;
  sgd_momentum_step(net, g, 1.0, 0.0, state);
  CHECK(net.parameter(0)(0, 0) == 3.0);

  Network m = init_network(config(1, 1, {ActivationSpec::identity()}), Rng(0));
  m.set_weight(0, Matrix::Zero(1, 1));
  Gradients unit;
  unit.layers = {Matrix::Constant(1, 1, 1.0)};
  SgdState s2;
  sgd_momentum_step(m, unit, 1.0, 0.5, s2);
  sgd_momentum_step(m, unit, 1.0, 0.5, s2);
  CHECK(s2.velocity.layers[0](0, 0) == 1.5);
  CHECK(m.parameter(0)(0, 0) == -2.5);

  Gradients bad;
  bad.layers = {Matrix::Constant(1, 1, NAN)};
  CHECK_THROWS_AS(sgd_momentum_step(m, bad, 1.0, 0.5, s2), NumericalError);
  CHECK(m.parameter(0)(0, 0) == -2.5);
  CHECK_THROWS_AS(sgd_momentum_step(m, unit, 0.0, 0.5, s2), InvalidArgument);
  CHECK_THROWS_AS(sgd_momentum_step(m, unit, 1.0, 1.0, s2), InvalidArgument);
}

TEST_CASE("row-normalized training keeps unit rows") {
  NetworkConfig c = config(6, 3, gpn("relu"), WeightMode::RowNormalized);
  c.input_dim = 10;
  c.output_dim = 4;
  Network net = init_network(c, Rng(12));
  Rng rng(13);
  SgdState state;
  const std::vector<int> labels{0, 1, 2, 3, 0};
  for (int step = 0; step < 5; ++step) {
    const Matrix x = rng.gaussian_matrix(10, 5);
    const ForwardTrace t = forward_train(net, x);
    const BackwardTrace b = backward(net, t, softmax_cross_entropy(t.outputs, labels).grad);
    CHECK(b.raw_grad_fro.size() == 3);
    sgd_momentum_step(net, collect_gradients(net, b), 0.5, 0.5, state);
    for (Index l = 0; l < 3; ++l)
      for (Index i = 0; i < 6; ++i) CHECK(std::abs(net.layer(l).weight.row(i).norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("orthogonal linear networks preserve both norms exactly") {
  const Network net = init_network(config(50, 30, {ActivationSpec::identity()}), Rng(21));
  Rng rng(22);
  const Matrix x = rng.gaussian_matrix(50, 1);
  const ForwardTrace t = forward(net, x);
  const BackwardTrace b = backward(net, t, rng.gaussian_matrix(50, 1));
  for (Index l = 1; l <= 31; ++l) CHECK(std::abs(t.x(l).norm() / x.norm() - 1.0) < 1e-8);
  for (std::size_t l = 0; l < 30; ++l) CHECK(std::abs(b.y[l].norm() / b.y[29].norm() - 1.0) < 1e-8);
}

TEST_CASE("derivative-weighted error energy concentrates with width") {
  // (1/d) | ||D y||^2 - ||y||^2 | for fixed y with entries +-1, D = phi'(h),
  // h one orthogonal layer applied to a sqrt(d)-sphere input.
  const AffineActivation act = gpn("tanh");
  auto p95 = [&](Index d) {
    std::vector<Scalar> stats;
    Rng ys(3);
    Vector y(d);
    for (Index i = 0; i < d; ++i) y[i] = ys.uniform() < 0.5 ? -1.0 : 1.0;
    for (int s = 0; s < 50; ++s) {
      Rng rng = Rng(40).derive("seed", static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(d));
      const Vector x = sample_sphere(d, rng);
      const Matrix h = sample_haar_orthogonal(d, rng).matrix() * x;
      const Vector dy = act.derivatives(h).col(0).cwiseProduct(y);
      stats.push_back(std::abs(dy.squaredNorm() - y.squaredNorm()) / static_cast<Scalar>(d));
    }
    std::sort(stats.begin(), stats.end());
    return stats[47];
  };
  CHECK(p95(1000) < p95(100));
}

TEST_CASE("batch norm: train statistics, running averages, eval phase") {
  NetworkConfig c = config(6, 2, {ActivationSpec::identity()});
  c.batchnorm = true;
  Network net = init_network(c, Rng(30));
  CHECK(net.layer(0).bn->gamma == Vector::Ones(6));
  CHECK(net.layer(0).bn->running_mean == Vector::Zero(6));
  Rng rng(31);
  const Matrix x = 3.0 * rng.gaussian_matrix(6, 16);
  const ForwardTrace t = forward_train(net, x);
  for (const LayerState& s : t.layers) {
    CHECK(s.h.rowwise().mean().cwiseAbs().maxCoeff() < 1e-12);
    const Vector var = (s.h.colwise() - s.h.rowwise().mean()).array().square().rowwise().mean();
    CHECK(((var.array() - 1.0).abs() < 1e-3).all());
  }
  const Vector batch_mean = t.layers[0].linear.rowwise().mean();
  CHECK((net.layer(0).bn->running_mean - 0.1 * batch_mean).cwiseAbs().maxCoeff() < 1e-12);

  const ForwardTrace e = forward(net, x, Phase::Eval);
  const BatchNormParams& bn = *net.layer(0).bn;
  const Matrix lin = net.layer(0).weight * x;
  const Matrix want = ((lin.colwise() - bn.running_mean).array().colwise() /
                       (bn.running_var.array() + c.bn_epsilon).sqrt())
                          .matrix();
  CHECK((e.layers[0].h - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("batch norm backward matches finite differences") {
  NetworkConfig c = config(5, 2, gpn("tanh"));
  c.batchnorm = true;
  Network net = init_network(c, Rng(33));
  net.batchnorm(0).gamma = Vector::LinSpaced(5, 0.5, 1.5);
  net.batchnorm(1).beta = Vector::LinSpaced(5, -0.2, 0.3);
  Rng rng(34);
  const Matrix x = rng.gaussian_matrix(5, 6);
  const std::vector<int> labels{0, 1, 2, 3, 4, 0};
  const ForwardTrace t = forward(net, x);
  const BackwardTrace b = backward(net, t, softmax_cross_entropy(t.outputs, labels).grad);
  const auto fd =
      finite_difference_grad(net, x, [&](const Matrix& o) { return cross_entropy_loss(o, labels); }, 1e-6);
  CHECK(gradient_error(b.weight_grads, fd) < 1e-4);

  // gamma and beta by hand.
  const Scalar h = 1e-6;
  for (Index i = 0; i < 5; ++i) {
    Network p = net, m = net;
    p.batchnorm(1).gamma[i] += h;
    m.batchnorm(1).gamma[i] -= h;
    const Scalar fdg = (cross_entropy_loss(forward(p, x).outputs, labels) -
                        cross_entropy_loss(forward(m, x).outputs, labels)) / (2 * h);
    CHECK(std::abs(fdg - b.gamma_grads[1][i]) < 1e-7);
    Network pb = net, mb = net;
    pb.batchnorm(0).beta[i] += h;
    mb.batchnorm(0).beta[i] -= h;
    const Scalar fdb = (cross_entropy_loss(forward(pb, x).outputs, labels) -
                        cross_entropy_loss(forward(mb, x).outputs, labels)) / (2 * h);
    CHECK(std::abs(fdb - b.beta_grads[0][i]) < 1e-7);
  }
}

TEST_CASE("adapters: thin-shell input and gradients") {
  NetworkConfig c = config(6, 2, gpn("selu"));
  c.input_dim = 9;
  c.output_dim = 3;
  const Network net = init_network(c, Rng(50));
  Rng rng(51);
  const Matrix x = rng.gaussian_matrix(9, 4);
  const ForwardTrace t = forward(net, x);
  for (Index j = 0; j < 4; ++j) {
    CHECK(std::abs(t.x_in.col(j).squaredNorm() / 6.0 - 1.0) < 1e-12);
    CHECK(std::abs(t.x_in.col(j).mean()) < 1e-12);
  }
  CHECK(t.outputs.rows() == 3);
  const std::vector<int> labels{0, 1, 2, 1};
  const BackwardTrace b = backward(net, t, softmax_cross_entropy(t.outputs, labels).grad);
  const Scalar h = 1e-6;
  for (Index i = 0; i < 6; ++i) {
    for (Index j = 0; j < 9; j += 4) {
      Network p = net, m = net;
      Matrix ap = *net.input_adapter(), am = ap;
      ap(i, j) += h;
      am(i, j) -= h;
      p.set_input_adapter(ap);
      m.set_input_adapter(am);
      const Scalar fd = (cross_entropy_loss(forward(p, x).outputs, labels) -
                         cross_entropy_loss(forward(m, x).outputs, labels)) / (2 * h);
      CHECK(std::abs(fd - b.input_adapter_grad(i, j)) < 1e-7);
    }
  }
  for (Index i = 0; i < 3; ++i) {
    Network p = net, m = net;
    Matrix bp = *net.output_adapter(), bm = bp;
    bp(i, 2) += h;
    bm(i, 2) -= h;
    p.set_output_adapter(bp);
    m.set_output_adapter(bm);
    const Scalar fd = (cross_entropy_loss(forward(p, x).outputs, labels) -
                       cross_entropy_loss(forward(m, x).outputs, labels)) / (2 * h);
    CHECK(std::abs(fd - b.output_adapter_grad(i, 2)) < 1e-7);
  }
}

TEST_CASE("dimension mismatches and overflow are reported") {
  const Network net = init_network(config(4, 3, {ActivationSpec::tanh()}), Rng(0));
  CHECK_THROWS_AS(forward(net, Matrix::Ones(5, 2)), InvalidArgument);
  const ForwardTrace t = forward(net, Matrix::Ones(4, 2));
  CHECK_THROWS_AS(backward(net, t, Matrix::Ones(4, 3)), InvalidArgument);

  const auto blowup = ActivationSpec::custom(
      "cube", [](double x) { return x * x * x; }, [](double x) { return 3 * x * x; }, false);
  Network big = init_network(config(4, 20, {blowup}), Rng(1));
  try {
    forward(big, Matrix::Constant(4, 1, 10.0));
    FAIL("expected overflow");
  } catch (const OverflowError& e) {
    CHECK(e.layer() >= 1);
    CHECK(e.layer() <= 20);
  }
}

#pragma once

#include "bsnn/activations.hpp"
#include "bsnn/data.hpp"
#include "bsnn/network.hpp"
#include "bsnn/rng.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bsnn {

/// Untrained Haar-orthogonal stack, never materialized: layer l is re-sampled
/// on demand from the stream derived as (root, "layer", l).
class HaarStack {
 public:
  HaarStack(Index width, Index depth, const Rng& root) : width_(width), depth_(depth), root_(root) {}
  Index width() const noexcept { return width_; }
  Index depth() const noexcept { return depth_; }
  /// 0-based layer.
  HaarReflectors layer(Index l) const;

 private:
  Index width_;
  Index depth_;
  Rng root_;
};

struct SyntheticConfig {
  Index width = 500;
  Index depth = 200;
  Index samples = 500;
  std::uint64_t seed = 0;
  /// Exact sqrt(d)-sphere inputs instead of standard Gaussian ones.
  bool sphere_inputs = false;
  /// false: forward telemetry only, no gradients.
  bool backward = true;
  std::vector<Scalar> epsilons{0.05, 0.1, 0.2, 0.5};
};

/// Norm telemetry of one untrained synthetic pass. Layer l (1-based) reports
/// its output x^{(l+1)} and its weight gradient dE/dW^{(l)}.
struct ConcentrationReport {
  std::string activation;
  Index width = 0;
  Index depth = 0;
  Index samples = 0;
  /// depth x samples: ||x^{(l+1)}||^2 / d.
  Matrix x_norms;
  /// depth x samples: per-sample ||dE/dW^{(l)}||_F = ||x^{(l)}|| ||y^{(l)}|| (batch size 1).
  Matrix grad_fro;
  /// depth x samples: ||x^{(l)}||_2 and ||y^{(l)}||_2 behind grad_fro.
  Matrix x_in_norms;
  Matrix y_norms;
  Vector x_norm_mean, x_norm_std;
  Vector grad_fro_mean, grad_fro_std;
  std::vector<Scalar> epsilons;
  /// depth x epsilons: fraction of samples with |x_norm - 1| >= eps.
  Matrix exceedance;
  /// First layer whose state went non-finite, if any; later rows are NaN.
  std::optional<int> overflow_layer;
};

ConcentrationReport run_synthetic_norms(const AffineActivation& act, const SyntheticConfig& cfg);
/// Several activations through the same sampled weights, inputs and top gradients.
std::vector<ConcentrationReport> run_synthetic_norms(std::span<const AffineActivation> acts,
                                                     const SyntheticConfig& cfg);

struct Histogram {
  Scalar lo = -0.5;
  Scalar hi = 2.5;
  std::vector<std::uint64_t> counts;
  std::uint64_t below = 0;
  std::uint64_t above = 0;
  std::uint64_t total = 0;
  Scalar mean = 0.0;
  Scalar stddev = 0.0;

  Index bins() const noexcept { return static_cast<Index>(counts.size()); }
  Scalar bin_left(Index i) const;
  Scalar bin_right(Index i) const;
  /// Share of all values in bins lying entirely inside [center - radius, center + radius].
  Scalar mass_within(Scalar center, Scalar radius) const;
};

/// Every phi'(h_i^{(l)}) over all units, layers and samples, binned.
Histogram run_deriv_histogram(const AffineActivation& act, const SyntheticConfig& cfg, Index bins = 300,
                              Scalar lo = -0.5, Scalar hi = 2.5);

struct RatioRow {
  Index width = 0;
  Index seed = 0;
  Scalar ratio = 0.0;
};

struct RatioSummary {
  Index width = 0;
  Scalar mean = 0.0;
  Scalar stddev = 0.0;
  Index count = 0;
};

struct RatioReport {
  std::string activation;
  std::vector<RatioRow> rows;
  std::vector<RatioSummary> summary;
};

/// max_l ||dE/dW^{(l)}||_F / min_l ||dE/dW^{(l)}||_F for one batch-1 synthetic
/// pass per (width, seed) cell. Cells are independent streams and may run on
/// `workers` threads without changing any number.
std::vector<RatioReport> run_width_sweep(std::span<const AffineActivation> acts, std::span<const Index> widths,
                                         Index depth, Index seeds_per_width, std::uint64_t seed, int workers = 1);

enum class ShellSampler { Gaussian, Sphere, Layer };

struct ThinShellConfig {
  ShellSampler sampler = ShellSampler::Gaussian;
  Index dim = 100;
  std::vector<Scalar> epsilons{0.05, 0.1, 0.2, 0.5};
  Index trials = 1000;
  std::uint64_t seed = 0;
  /// Layer sampler only: activation and the layer whose output is measured.
  AffineActivation activation{ActivationSpec::identity()};
  Index layer = 50;
};

struct ExceedanceRow {
  Scalar epsilon = 0.0;
  Scalar exceedance = 0.0;
};

/// Empirical P{ | ||x||^2/d - 1 | >= eps } per eps.
std::vector<ExceedanceRow> verify_thin_shell(const ThinShellConfig& cfg);

/// Gaussian-norm tail bound 2 exp(-d delta^2).
Scalar gaussian_norm_bound(Index d, Scalar delta);
/// The same bound at the largest delta with (1+delta)^2 - 1 <= eps,
/// i.e. delta = sqrt(1 + eps) - 1, which bounds thin-shell exceedance at eps.
Scalar thin_shell_bound(Index d, Scalar eps);

struct TrainConfig {
  NetworkConfig network;  ///< input/output dims are filled in from the data
  Index epochs = 3;
  Scalar lr = 1e-4;
  Scalar momentum = 0.5;
  Index batch = 64;
  std::uint64_t seed = 0;
  /// Leading training samples used (0: all).
  Index train_subset = 10000;
  /// Leading test samples used (0: all).
  Index test_subset = 0;
  /// Evaluate on the train/test sets every this many updates besides epoch ends (0: never).
  Index eval_every = 0;
};

struct TrainRow {
  Index epoch = 0;
  Index update = 0;
  std::optional<Scalar> train_acc;
  std::optional<Scalar> test_acc;
  std::optional<Scalar> grad_ratio;
  bool vanished = false;
};

struct TrainingLog {
  std::vector<TrainRow> rows;
  std::vector<Scalar> train_acc;  ///< per epoch, index 0 = before training
  std::vector<Scalar> test_acc;
  Index vanished_updates = 0;
  std::optional<std::string> abort_reason;

  Scalar final_train_acc() const { return train_acc.empty() ? 0.0 : train_acc.back(); }
  Scalar best_train_acc() const;
};

inline constexpr Scalar kVanishedGradient = 1e-12;

/// SGD with momentum on softmax cross-entropy. Explosions end the run with
/// `abort_reason` set instead of throwing.
TrainingLog train_classifier(const TrainConfig& cfg, const Dataset& train, const Dataset& test);
/// The network train_classifier starts from (input/output adapters sized to the data).
Network init_classifier(const TrainConfig& cfg, const Dataset& train);
/// Trains `net` in place; cfg.network is ignored.
TrainingLog train_network(Network& net, const TrainConfig& cfg, const Dataset& train, const Dataset& test);

/// Fisher-Yates with this library's generator (std::shuffle is not portable).
std::vector<Index> permutation(Index n, Rng& rng);

}  // namespace bsnn

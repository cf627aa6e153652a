#include "bsnn/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace bsnn {

namespace {

constexpr Scalar kNaN = std::numeric_limits<Scalar>::quiet_NaN();
// Doubles of stored derivative state per chunk of synthetic samples (~240 MB).
constexpr Index kChunkBudget = 30'000'000;

void row_stats(const Matrix& m, Vector& mean, Vector& stddev) {
  const Index n = m.cols();
  mean = m.rowwise().mean();
  if (n < 2) {
    stddev = Vector::Zero(m.rows());
    return;
  }
  stddev = ((m.colwise() - mean).array().square().rowwise().sum() / static_cast<Scalar>(n - 1)).sqrt();
}

void validate(const SyntheticConfig& cfg) {
  if (cfg.width < 1 || cfg.depth < 1 || cfg.samples < 1)
    throw InvalidArgument("synthetic runs need positive width, depth and sample count");
  for (Scalar e : cfg.epsilons)
    if (!(e > 0.0)) throw InvalidArgument("thin-shell epsilons must be positive");
}

Matrix synthetic_inputs(const Rng& root, Index d, Index first, Index count, bool sphere) {
  Matrix x(d, count);
  for (Index j = 0; j < count; ++j) {
    Rng s = root.derive("input", static_cast<std::uint64_t>(first + j));
    x.col(j) = sphere ? sample_sphere(d, s) : s.gaussian_vector(d);
  }
  return x;
}

Matrix synthetic_top_gradients(const Rng& root, Index d, Index first, Index count) {
  Matrix g(d, count);
  for (Index j = 0; j < count; ++j) {
    Rng s = root.derive("top-gradient", static_cast<std::uint64_t>(first + j));
    g.col(j) = s.gaussian_vector(d);
  }
  return g;
}

std::vector<ConcentrationReport> synthetic_core(std::span<const AffineActivation> acts, const SyntheticConfig& cfg,
                                                const Rng& root) {
  validate(cfg);
  if (acts.empty()) throw InvalidArgument("no activation given");
  const Index d = cfg.width, L = cfg.depth, n = cfg.samples;
  const auto na = acts.size();
  const HaarStack stack(d, L, root.derive("weights"));

  std::vector<ConcentrationReport> reports(na);
  for (std::size_t a = 0; a < na; ++a) {
    ConcentrationReport& r = reports[a];
    r.activation = acts[a].label();
    r.width = d;
    r.depth = L;
    r.samples = n;
    r.epsilons = cfg.epsilons;
    r.x_norms = Matrix::Constant(L, n, kNaN);
    r.x_in_norms = Matrix::Constant(L, n, kNaN);
    if (cfg.backward) {
      r.grad_fro = Matrix::Constant(L, n, kNaN);
      r.y_norms = Matrix::Constant(L, n, kNaN);
    }
  }

  Index chunk = n;
  if (cfg.backward) chunk = std::clamp<Index>(kChunkBudget / (d * L * static_cast<Index>(na)), 1, n);

  auto mark_overflow = [&](std::size_t a, Index layer) {
    auto& o = reports[a].overflow_layer;
    if (!o || *o > layer) o = static_cast<int>(layer);
  };

  for (Index start = 0; start < n; start += chunk) {
    const Index m = std::min(chunk, n - start);
    const Matrix x0 = synthetic_inputs(root, d, start, m, cfg.sphere_inputs);
    std::vector<Matrix> x(na, x0);
    std::vector<std::vector<Matrix>> derivs(na);
    std::vector<bool> alive(na);
    for (std::size_t a = 0; a < na; ++a) {
      alive[a] = !reports[a].overflow_layer.has_value();
      if (cfg.backward) derivs[a].resize(static_cast<std::size_t>(L));
    }

    for (Index l = 0; l < L; ++l) {
      const HaarReflectors w = stack.layer(l);
      for (std::size_t a = 0; a < na; ++a) {
        if (!alive[a]) continue;
        ConcentrationReport& r = reports[a];
        r.x_in_norms.block(l, start, 1, m) = x[a].colwise().norm();
        Matrix h = x[a];
        w.apply(h);
        if (cfg.backward) derivs[a][static_cast<std::size_t>(l)] = acts[a].derivatives(h);
        x[a] = acts[a].values(h);
        if (!x[a].allFinite()) {
          mark_overflow(a, l + 1);
          alive[a] = false;
          continue;
        }
        r.x_norms.block(l, start, 1, m) = x[a].colwise().squaredNorm() / static_cast<Scalar>(d);
      }
    }

    if (!cfg.backward) continue;
    const Matrix g0 = synthetic_top_gradients(root, d, start, m);
    std::vector<Matrix> up(na, g0);
    for (Index l = L - 1; l >= 0; --l) {
      if (std::none_of(alive.begin(), alive.end(), [](bool b) { return b; })) break;
      const HaarReflectors w = stack.layer(l);
      for (std::size_t a = 0; a < na; ++a) {
        if (!alive[a]) continue;
        ConcentrationReport& r = reports[a];
        Matrix y = derivs[a][static_cast<std::size_t>(l)].cwiseProduct(up[a]);
        r.y_norms.block(l, start, 1, m) = y.colwise().norm();
        // Batch size 1 per sample: dE/dW = y x^T, so ||dE/dW||_F = ||x|| ||y||.
        r.grad_fro.block(l, start, 1, m) =
            r.x_in_norms.block(l, start, 1, m).cwiseProduct(r.y_norms.block(l, start, 1, m));
        w.apply_transpose(y);
        up[a] = std::move(y);
        if (!up[a].allFinite()) {
          mark_overflow(a, l + 1);
          alive[a] = false;
        }
      }
    }
  }

  for (ConcentrationReport& r : reports) {
    row_stats(r.x_norms, r.x_norm_mean, r.x_norm_std);
    if (cfg.backward) row_stats(r.grad_fro, r.grad_fro_mean, r.grad_fro_std);
    r.exceedance.resize(L, static_cast<Index>(r.epsilons.size()));
    for (Index l = 0; l < L; ++l) {
      for (std::size_t e = 0; e < r.epsilons.size(); ++e) {
        const Scalar eps = r.epsilons[e];
        Index hits = 0;
        bool finite = true;
        for (Index j = 0; j < n; ++j) {
          const Scalar q = r.x_norms(l, j);
          if (!std::isfinite(q)) finite = false;
          if (std::abs(q - 1.0) >= eps) ++hits;
        }
        r.exceedance(l, static_cast<Index>(e)) = finite ? static_cast<Scalar>(hits) / static_cast<Scalar>(n) : kNaN;
      }
    }
  }
  return reports;
}

}  // namespace

HaarReflectors HaarStack::layer(Index l) const {
  if (l < 0 || l >= depth_) throw InvalidArgument("layer index out of range");
  Rng s = root_.derive("layer", static_cast<std::uint64_t>(l));
  return HaarReflectors::sample(width_, s);
}

ConcentrationReport run_synthetic_norms(const AffineActivation& act, const SyntheticConfig& cfg) {
  return synthetic_core(std::span<const AffineActivation>(&act, 1), cfg, Rng(cfg.seed)).front();
}

std::vector<ConcentrationReport> run_synthetic_norms(std::span<const AffineActivation> acts,
                                                     const SyntheticConfig& cfg) {
  return synthetic_core(acts, cfg, Rng(cfg.seed));
}

Scalar Histogram::bin_left(Index i) const {
  return lo + (hi - lo) * static_cast<Scalar>(i) / static_cast<Scalar>(bins());
}

Scalar Histogram::bin_right(Index i) const { return bin_left(i + 1); }

Scalar Histogram::mass_within(Scalar center, Scalar radius) const {
  if (total == 0) return 0.0;
  constexpr Scalar slack = 1e-9;
  std::uint64_t inside = 0;
  for (Index i = 0; i < bins(); ++i)
    if (bin_left(i) >= center - radius - slack && bin_right(i) <= center + radius + slack)
      inside += counts[static_cast<std::size_t>(i)];
  return static_cast<Scalar>(inside) / static_cast<Scalar>(total);
}

Histogram run_deriv_histogram(const AffineActivation& act, const SyntheticConfig& cfg, Index bins, Scalar lo,
                              Scalar hi) {
  validate(cfg);
  if (bins < 10) throw InvalidArgument("histogram needs at least 10 bins");
  if (!(hi > lo)) throw InvalidArgument("histogram range is empty");
  Histogram hist;
  hist.lo = lo;
  hist.hi = hi;
  hist.counts.assign(static_cast<std::size_t>(bins), 0);

  const Rng root(cfg.seed);
  const Index d = cfg.width;
  const HaarStack stack(d, cfg.depth, root.derive("weights"));
  Matrix x = synthetic_inputs(root, d, 0, cfg.samples, cfg.sphere_inputs);
  const Scalar scale = static_cast<Scalar>(bins) / (hi - lo);
  Scalar sum = 0.0, sum_sq = 0.0;
  for (Index l = 0; l < cfg.depth; ++l) {
    Matrix h = x;
    stack.layer(l).apply(h);
    const Matrix dphi = act.derivatives(h);
    for (Index k = 0; k < dphi.size(); ++k) {
      const Scalar v = dphi.data()[k];
      if (!std::isfinite(v)) throw OverflowError("non-finite derivative at layer " + std::to_string(l + 1),
                                                 static_cast<int>(l + 1));
      sum += v;
      sum_sq += v * v;
      ++hist.total;
      const Scalar pos = (v - lo) * scale;
      if (pos < 0.0) {
        ++hist.below;
      } else if (pos >= static_cast<Scalar>(bins)) {
        ++hist.above;
      } else {
        ++hist.counts[static_cast<std::size_t>(pos)];
      }
    }
    x = act.values(h);
    if (!x.allFinite()) throw OverflowError("non-finite activation at layer " + std::to_string(l + 1),
                                            static_cast<int>(l + 1));
  }
  const Scalar count = static_cast<Scalar>(hist.total);
  hist.mean = sum / count;
  hist.stddev = std::sqrt(std::max<Scalar>(sum_sq / count - hist.mean * hist.mean, 0.0));
  return hist;
}

std::vector<RatioReport> run_width_sweep(std::span<const AffineActivation> acts, std::span<const Index> widths,
                                         Index depth, Index seeds_per_width, std::uint64_t seed, int workers) {
  if (widths.empty()) throw InvalidArgument("width sweep needs at least one width");
  if (seeds_per_width < 1) throw InvalidArgument("width sweep needs at least one seed per width");
  if (acts.empty()) throw InvalidArgument("no activation given");
  const Index cells = static_cast<Index>(widths.size()) * seeds_per_width;
  // ratios[cell][activation]
  std::vector<std::vector<Scalar>> ratios(static_cast<std::size_t>(cells));
  const Rng master(seed);

  auto run_cell = [&](Index cell) {
    const Index w = widths[static_cast<std::size_t>(cell / seeds_per_width)];
    const Index s = cell % seeds_per_width;
    SyntheticConfig cfg;
    cfg.width = w;
    cfg.depth = depth;
    cfg.samples = 1;
    cfg.epsilons.clear();
    const Rng root = master.derive("width-sweep", static_cast<std::uint64_t>(w), static_cast<std::uint64_t>(s));
    const auto reports = synthetic_core(acts, cfg, root);
    auto& out = ratios[static_cast<std::size_t>(cell)];
    for (const ConcentrationReport& r : reports) {
      if (r.overflow_layer) {
        out.push_back(std::numeric_limits<Scalar>::infinity());
        continue;
      }
      const auto col = r.grad_fro.col(0);
      out.push_back(col.maxCoeff() / col.minCoeff());
    }
  };

  const int n_workers = std::max(1, std::min<int>(workers, static_cast<int>(cells)));
  if (n_workers == 1) {
    for (Index c = 0; c < cells; ++c) run_cell(c);
  } else {
    std::atomic<Index> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int t = 0; t < n_workers; ++t) {
      pool.emplace_back([&] {
        for (Index c; (c = next.fetch_add(1)) < cells;) {
          try {
            run_cell(c);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<RatioReport> reports(acts.size());
  for (std::size_t a = 0; a < acts.size(); ++a) {
    RatioReport& rep = reports[a];
    rep.activation = acts[a].label();
    for (std::size_t wi = 0; wi < widths.size(); ++wi) {
      RatioSummary sum;
      sum.width = widths[wi];
      Scalar acc = 0.0;
      std::vector<Scalar> vals;
      for (Index s = 0; s < seeds_per_width; ++s) {
        const Scalar r = ratios[static_cast<std::size_t>(static_cast<Index>(wi) * seeds_per_width + s)][a];
        rep.rows.push_back({widths[wi], s, r});
        vals.push_back(r);
        acc += r;
      }
      sum.count = seeds_per_width;
      sum.mean = acc / static_cast<Scalar>(seeds_per_width);
      Scalar var = 0.0;
      for (Scalar v : vals) var += (v - sum.mean) * (v - sum.mean);
      sum.stddev = seeds_per_width > 1 ? std::sqrt(var / static_cast<Scalar>(seeds_per_width - 1)) : 0.0;
      rep.summary.push_back(sum);
    }
  }
  return reports;
}

Scalar gaussian_norm_bound(Index d, Scalar delta) {
  return 2.0 * std::exp(-static_cast<Scalar>(d) * delta * delta);
}

Scalar thin_shell_bound(Index d, Scalar eps) {
  const Scalar delta = std::sqrt(1.0 + eps) - 1.0;
  return gaussian_norm_bound(d, delta);
}

std::vector<ExceedanceRow> verify_thin_shell(const ThinShellConfig& cfg) {
  if (cfg.trials < 100) throw InvalidArgument("thin-shell verification needs at least 100 trials");
  if (cfg.dim < 1) throw InvalidArgument("dimension must be positive");
  for (Scalar e : cfg.epsilons)
    if (!(e > 0.0)) throw InvalidArgument("epsilons must be positive");
  const Scalar d = static_cast<Scalar>(cfg.dim);
  std::vector<Scalar> q(static_cast<std::size_t>(cfg.trials));
  const Rng root(cfg.seed);
  if (cfg.sampler == ShellSampler::Layer) {
    if (cfg.layer < 1) throw InvalidArgument("layer index must be >= 1");
    SyntheticConfig sc;
    sc.width = cfg.dim;
    sc.depth = cfg.layer;
    sc.samples = cfg.trials;
    sc.seed = cfg.seed;
    sc.backward = false;
    sc.epsilons = cfg.epsilons;
    const ConcentrationReport r = run_synthetic_norms(cfg.activation, sc);
    for (Index t = 0; t < cfg.trials; ++t) q[static_cast<std::size_t>(t)] = r.x_norms(cfg.layer - 1, t);
  } else {
    for (Index t = 0; t < cfg.trials; ++t) {
      Rng s = root.derive("trial", static_cast<std::uint64_t>(t));
      const Vector x = cfg.sampler == ShellSampler::Sphere ? sample_sphere(cfg.dim, s) : s.gaussian_vector(cfg.dim);
      q[static_cast<std::size_t>(t)] = x.squaredNorm() / d;
    }
  }
  std::vector<ExceedanceRow> rows;
  for (Scalar eps : cfg.epsilons) {
    Index hits = 0;
    for (Scalar v : q)
      if (!(std::abs(v - 1.0) < eps)) ++hits;
    rows.push_back({eps, static_cast<Scalar>(hits) / static_cast<Scalar>(cfg.trials)});
  }
  return rows;
}

Scalar TrainingLog::best_train_acc() const {
  return train_acc.empty() ? 0.0 : *std::max_element(train_acc.begin(), train_acc.end());
}

std::vector<Index> permutation(Index n, Rng& rng) {
  std::vector<Index> p(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
  }
  return p;
}

namespace {

Scalar evaluate(const Network& net, const Dataset& data) {
  constexpr Index kChunk = 1000;
  Index hits = 0;
  for (Index start = 0; start < data.size(); start += kChunk) {
    const Index m = std::min(kChunk, data.size() - start);
    const Matrix x = data.features.middleRows(start, m).transpose();
    const Matrix out = forward(net, x, Phase::Eval).outputs;
    for (Index j = 0; j < m; ++j) {
      Index arg = 0;
      out.col(j).maxCoeff(&arg);
      if (arg == data.labels[static_cast<std::size_t>(start + j)]) ++hits;
    }
  }
  return static_cast<Scalar>(hits) / static_cast<Scalar>(data.size());
}

}  // namespace

Network init_classifier(const TrainConfig& cfg, const Dataset& train) {
  NetworkConfig ncfg = cfg.network;
  ncfg.input_dim = train.dim();
  ncfg.output_dim = train.classes;
  return init_network(ncfg, Rng(cfg.seed).derive("init"));
}

TrainingLog train_classifier(const TrainConfig& cfg, const Dataset& train, const Dataset& test) {
  Network net = init_classifier(cfg, train);
  return train_network(net, cfg, train, test);
}

TrainingLog train_network(Network& net, const TrainConfig& cfg, const Dataset& train_full, const Dataset& test_full) {
  if (cfg.epochs < 0) throw InvalidArgument("epochs must be non-negative");
  if (cfg.batch < 1) throw InvalidArgument("batch size must be positive");
  if (!(cfg.lr > 0.0) || cfg.momentum < 0.0 || cfg.momentum >= 1.0)
    throw InvalidArgument("need lr > 0 and momentum in [0, 1)");
  if (train_full.size() == 0 || test_full.size() == 0) throw InvalidArgument("empty dataset");
  const Dataset train = cfg.train_subset > 0 ? train_full.head(cfg.train_subset) : train_full;
  const Dataset test = cfg.test_subset > 0 ? test_full.head(cfg.test_subset) : test_full;
  if (net.input_width() != train.dim() || test.dim() != train.dim())
    throw InvalidArgument("network input width does not match the data");
  if (net.output_width() < train.classes) throw InvalidArgument("network has fewer outputs than classes");
  const WeightMode mode = net.config().weight_mode;
  const Rng root(cfg.seed);
  SgdState sgd;

  TrainingLog log;
  auto record_eval = [&](Index epoch, Index update, bool epoch_end) {
    Scalar tr = 0.0, te = 0.0;
    try {
      tr = evaluate(net, train);
      te = evaluate(net, test);
    } catch (const NumericalError& e) {
      log.abort_reason = "epoch " + std::to_string(epoch) + ", evaluation after update " + std::to_string(update) +
                         ": " + e.what();
      return false;
    }
    if (epoch_end) {
      log.train_acc.push_back(tr);
      log.test_acc.push_back(te);
    }
    TrainRow row;
    row.epoch = epoch;
    row.update = update;
    row.train_acc = tr;
    row.test_acc = te;
    log.rows.push_back(row);
    return true;
  };
  if (!record_eval(0, 0, true)) return log;

  Index update = 0;
  const Index n = train.size();
  for (Index epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle = root.derive("shuffle", static_cast<std::uint64_t>(epoch));
    const std::vector<Index> order = permutation(n, shuffle);
    for (Index start = 0; start < n; start += cfg.batch) {
      const Index m = std::min(cfg.batch, n - start);
      const std::span<const Index> idx(order.data() + start, static_cast<std::size_t>(m));
      const Matrix x = train.columns(idx);
      const std::vector<int> y = train.labels_of(idx);
      ++update;
      TrainRow row;
      row.epoch = epoch;
      row.update = update;
      try {
        const ForwardTrace trace = forward_train(net, x);
        const LossResult loss = softmax_cross_entropy(trace.outputs, y);
        const BackwardTrace back = backward(net, trace, loss.grad);
        const std::vector<Scalar>& fro =
            mode == WeightMode::RowNormalized ? back.raw_grad_fro : back.grad_fro;
        const Scalar mx = *std::max_element(fro.begin(), fro.end());
        const Scalar mn = *std::min_element(fro.begin(), fro.end());
        row.vanished = mx < kVanishedGradient;
        if (row.vanished) {
          ++log.vanished_updates;
        } else {
          row.grad_ratio = mn > 0.0 ? mx / mn : std::numeric_limits<Scalar>::infinity();
        }
        sgd_momentum_step(net, collect_gradients(net, back), cfg.lr, cfg.momentum, sgd);
      } catch (const NumericalError& e) {
        log.rows.push_back(row);
        log.abort_reason = "epoch " + std::to_string(epoch) + ", update " + std::to_string(update) + ": " + e.what();
        return log;
      }
      log.rows.push_back(row);
      if (cfg.eval_every > 0 && update % cfg.eval_every == 0 && start + m < n && !record_eval(epoch, update, false))
        return log;
    }
    if (!record_eval(epoch, update, true)) return log;
  }
  return log;
}

}  // namespace bsnn

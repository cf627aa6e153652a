#include "bsnn/cli.hpp"

#include "bsnn/checkpoint.hpp"
#include "bsnn/csv.hpp"
#include "bsnn/data.hpp"
#include "bsnn/experiments.hpp"
#include "bsnn/gpn.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <map>

namespace bsnn {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

const std::vector<Index> kDefaultWidths{100, 200, 400, 600, 800, 1000, 1200, 1500};

AffineActivation make_activation(const std::string& name, bool gpn) {
  const ActivationSpec spec = ActivationSpec::from_name(name);
  return gpn ? gpn_normalized(spec) : AffineActivation{spec};
}

RootSelection parse_root(const std::string& s) {
  if (s == "table") return RootSelection::MatchTable;
  if (s == "nonneg") return RootSelection::NonNegativeMean;
  if (s == "plus") return RootSelection::Plus;
  return RootSelection::Minus;
}

fs::path manifest_path(const fs::path& out) {
  fs::path p = out;
  p += ".manifest.json";
  return p;
}

/// Written next to the primary output; `config` holds every resolved flag.
void write_manifest(const std::string& subcommand, const json& config, std::uint64_t seed,
                    const std::vector<std::string>& outputs) {
  if (outputs.empty() || outputs.front().empty()) return;
  json m;
  m["subcommand"] = subcommand;
  m["tool_version"] = kToolVersion;
  m["seed"] = seed;
  m["config"] = config;
  m["outputs"] = outputs;
  const fs::path path = manifest_path(outputs.front());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write manifest " + path.string());
  out << m.dump(2) << '\n';
}

/// Flag list reproducing a manifest config.
std::vector<std::string> config_to_args(const json& config) {
  std::vector<std::string> args;
  for (const auto& [key, value] : config.items()) {
    const std::string flag = "--" + key;
    if (value.is_null()) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
      continue;
    }
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
      if (text.empty()) continue;
    } else if (value.is_number_integer()) {
      text = value.dump();
    } else if (value.is_number_float()) {
      text = format_double(value.get<Scalar>());
    } else if (value.is_array()) {
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (i) text += ',';
        if (value[i].is_string()) {
          text += value[i].get<std::string>();
        } else if (value[i].is_number_float()) {
          text += format_double(value[i].get<Scalar>());
        } else {
          text += value[i].dump();
        }
      }
      if (value.empty()) continue;
    } else {
      throw FormatError("manifest config entry '" + key + "' has an unsupported type");
    }
    args.push_back(flag);
    args.push_back(text);
  }
  return args;
}

struct Common {
  std::uint64_t seed = 0;
  std::string out;
};

void add_seed(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Master seed (default: $BSNN_SEED, else 0)")->envname("BSNN_SEED");
}

int run_gpn_table(const std::vector<std::string>& names, int order, const std::string& root, const std::string& out) {
  const QuadratureRule rule = gauss_hermite_rule(order);
  CsvTable table({"activation", "a", "b", "m2_check", "d2_check", "gap"});
  for (const std::string& name : names) {
    const ActivationSpec spec = ActivationSpec::from_name(name);
    const GpnConstants c = gpn_constants(spec, rule, parse_root(root));
    const GpnCheck check = verify_gpn(spec, c.a, c.b, rule, 1e-6);
    table.begin_row().add(spec.name()).add(c.a).add(c.b).add(check.moments.m2).add(check.moments.d2).add(
        poincare_gap(spec, rule));
  }
  if (out.empty()) {
    table.write(std::cout);
  } else {
    table.write(fs::path(out));
  }
  return kExitOk;
}

struct SynthOpts {
  Common common;
  std::string activation;
  bool gpn = false;
  Index width = 500;
  Index depth = 200;
  Index samples = 500;
  bool sphere_inputs = false;
  bool forward_only = false;
  std::string exceedance_out;

  json config() const {
    return {{"activation", activation}, {"gpn", gpn},           {"width", width},
            {"depth", depth},           {"samples", samples},   {"sphere-inputs", sphere_inputs},
            {"forward-only", forward_only}, {"seed", common.seed}, {"out", common.out},
            {"exceedance-out", exceedance_out}};
  }
};

int run_synth(const SynthOpts& o) {
  SyntheticConfig cfg;
  cfg.width = o.width;
  cfg.depth = o.depth;
  cfg.samples = o.samples;
  cfg.seed = o.common.seed;
  cfg.sphere_inputs = o.sphere_inputs;
  cfg.backward = !o.forward_only;
  const ConcentrationReport r = run_synthetic_norms(make_activation(o.activation, o.gpn), cfg);
  CsvTable table({"layer", "x_norm_mean", "x_norm_std", "grad_fro_mean", "grad_fro_std"});
  for (Index l = 0; l < cfg.depth; ++l) {
    table.begin_row().add(l + 1).add(r.x_norm_mean(l)).add(r.x_norm_std(l));
    if (cfg.backward) {
      table.add(r.grad_fro_mean(l)).add(r.grad_fro_std(l));
    } else {
      table.add(std::string()).add(std::string());
    }
  }
  table.write(fs::path(o.common.out));
  std::vector<std::string> outputs{o.common.out};
  if (!o.exceedance_out.empty()) {
    CsvTable ex({"layer", "epsilon", "exceedance"});
    for (Index l = 0; l < cfg.depth; ++l)
      for (std::size_t e = 0; e < r.epsilons.size(); ++e)
        ex.begin_row().add(l + 1).add(r.epsilons[e]).add(r.exceedance(l, static_cast<Index>(e)));
    ex.write(fs::path(o.exceedance_out));
    outputs.push_back(o.exceedance_out);
  }
  write_manifest("synth", o.config(), o.common.seed, outputs);
  if (r.overflow_layer) {
    std::cerr << "overflow at layer " << *r.overflow_layer << " for " << r.activation << '\n';
    if (o.gpn) return kExitNumerical;
  }
  return kExitOk;
}

struct HistOpts {
  Common common;
  std::string activation;
  bool gpn = false;
  Index width = 500;
  Index depth = 200;
  Index samples = 20;
  Index bins = 300;
  Scalar lo = -0.5;
  Scalar hi = 2.5;

  json config() const {
    return {{"activation", activation}, {"gpn", gpn}, {"width", width}, {"depth", depth},
            {"samples", samples},       {"bins", bins}, {"lo", lo},       {"hi", hi},
            {"seed", common.seed},      {"out", common.out}};
  }
};

int run_hist(const HistOpts& o) {
  SyntheticConfig cfg;
  cfg.width = o.width;
  cfg.depth = o.depth;
  cfg.samples = o.samples;
  cfg.seed = o.common.seed;
  cfg.backward = false;
  const Histogram h = run_deriv_histogram(make_activation(o.activation, o.gpn), cfg, o.bins, o.lo, o.hi);
  CsvTable table({"bin_left", "bin_right", "count"});
  for (Index i = 0; i < h.bins(); ++i)
    table.begin_row().add(h.bin_left(i)).add(h.bin_right(i)).add(h.counts[static_cast<std::size_t>(i)]);
  table.write(fs::path(o.common.out));
  write_manifest("hist", o.config(), o.common.seed, {o.common.out});
  std::cerr << "mean " << format_double(h.mean) << ", std " << format_double(h.stddev) << ", outside range "
            << h.below + h.above << " of " << h.total << '\n';
  return kExitOk;
}

struct SweepOpts {
  Common common;
  std::string activation;
  bool gpn = false;
  std::vector<Index> widths = kDefaultWidths;
  Index depth = 200;
  Index seeds = 10;
  int workers = 1;
  std::string summary_out;

  json config() const {
    return {{"activation", activation}, {"gpn", gpn},        {"widths", widths},
            {"depth", depth},           {"seeds", seeds},    {"workers", workers},
            {"seed", common.seed},      {"out", common.out}, {"summary-out", summary_out}};
  }
};

int run_sweep(const SweepOpts& o) {
  const AffineActivation act = make_activation(o.activation, o.gpn);
  const auto reports = run_width_sweep(std::span<const AffineActivation>(&act, 1), o.widths, o.depth, o.seeds,
                                       o.common.seed, o.workers);
  const RatioReport& r = reports.front();
  CsvTable table({"width", "seed", "ratio"});
  for (const RatioRow& row : r.rows) table.begin_row().add(row.width).add(row.seed).add(row.ratio);
  table.write(fs::path(o.common.out));
  std::vector<std::string> outputs{o.common.out};
  if (!o.summary_out.empty()) {
    CsvTable s({"width", "mean", "std", "count"});
    for (const RatioSummary& row : r.summary) s.begin_row().add(row.width).add(row.mean).add(row.stddev).add(row.count);
    s.write(fs::path(o.summary_out));
    outputs.push_back(o.summary_out);
  }
  write_manifest("width-sweep", o.config(), o.common.seed, outputs);
  return kExitOk;
}

struct TrainOpts {
  Common common;
  std::string dataset = "mnist";
  std::string data_dir;
  std::string activation;
  bool gpn = false;
  bool batchnorm = false;
  std::string weights = "rownorm";
  Index depth = 32;
  Index width = 128;
  Index epochs = 3;
  Scalar lr = 1e-3;
  Scalar momentum = 0.5;
  Index batch = 64;
  Index train_subset = 10000;
  Index test_subset = 0;
  Index eval_every = 0;
  bool full_paper_scale = false;
  std::string save_checkpoint;
  std::string load_checkpoint;

  json config() const {
    return {{"dataset", dataset},
            {"data-dir", data_dir},
            {"activation", activation},
            {"gpn", gpn},
            {"batchnorm", batchnorm},
            {"weights", weights},
            {"depth", depth},
            {"width", width},
            {"epochs", epochs},
            {"lr", lr},
            {"momentum", momentum},
            {"batch", batch},
            {"train-subset", train_subset},
            {"test-subset", test_subset},
            {"eval-every", eval_every},
            {"full-paper-scale", full_paper_scale},
            {"load-checkpoint", load_checkpoint},
            {"save-checkpoint", save_checkpoint},
            {"seed", common.seed},
            {"out", common.out}};
  }
};

int run_train(TrainOpts o) {
  if (o.full_paper_scale) {
    o.width = 500;
    o.depth = 200;
    o.epochs = o.dataset == "mnist" ? 50 : 100;
    o.lr = 1e-4;
    o.momentum = 0.5;
    o.batch = 64;
    o.train_subset = 0;
    o.test_subset = 0;
    std::cerr << "warning: --full-paper-scale trains a width-500, depth-200 network for " << o.epochs
              << " epochs on the full dataset; expect days of compute, not a desk-scale run\n";
  }
  Dataset train, test;
  if (o.dataset == "mnist") {
    train = load_mnist_split(o.data_dir, "train");
    test = load_mnist_split(o.data_dir, "t10k");
  } else {
    train = load_cifar10_split(o.data_dir, true);
    test = load_cifar10_split(o.data_dir, false);
  }

  TrainConfig cfg;
  cfg.network.width = o.width;
  cfg.network.depth = o.depth;
  cfg.network.activation = make_activation(o.activation, o.gpn);
  cfg.network.weight_mode = o.weights == "haar" ? WeightMode::HaarOrthogonal : WeightMode::RowNormalized;
  cfg.network.batchnorm = o.batchnorm;
  cfg.epochs = o.epochs;
  cfg.lr = o.lr;
  cfg.momentum = o.momentum;
  cfg.batch = o.batch;
  cfg.seed = o.common.seed;
  cfg.train_subset = o.train_subset;
  cfg.test_subset = o.test_subset;
  cfg.eval_every = o.eval_every;

  Network net = o.load_checkpoint.empty() ? init_classifier(cfg, train) : load_checkpoint(fs::path(o.load_checkpoint));
  if (!o.load_checkpoint.empty()) {
    const NetworkConfig& got = net.config();
    if (got.width != cfg.network.width || got.depth != cfg.network.depth ||
        got.weight_mode != cfg.network.weight_mode || got.batchnorm != cfg.network.batchnorm)
      throw InvalidArgument("checkpoint " + o.load_checkpoint + " holds width " + std::to_string(got.width) +
                            ", depth " + std::to_string(got.depth) +
                            "; pass matching --width/--depth/--weights/--batchnorm");
  }
  const TrainingLog log = train_network(net, cfg, train, test);

  CsvTable table({"epoch", "update", "train_acc", "test_acc", "grad_ratio", "vanished_flag"});
  for (const TrainRow& row : log.rows) {
    table.begin_row().add(row.epoch).add(row.update).add(row.train_acc).add(row.test_acc).add(row.grad_ratio);
    const bool eval_row = row.train_acc.has_value();
    table.add(eval_row ? std::string() : std::string(row.vanished ? "1" : "0"));
  }
  table.write(fs::path(o.common.out));
  std::vector<std::string> outputs{o.common.out};
  if (!o.save_checkpoint.empty()) {
    save_checkpoint(net, fs::path(o.save_checkpoint));
    outputs.push_back(o.save_checkpoint);
  }
  write_manifest("train", o.config(), o.common.seed, outputs);
  std::cerr << "final train accuracy " << format_double(log.final_train_acc()) << ", test accuracy "
            << format_double(log.test_acc.empty() ? 0.0 : log.test_acc.back()) << ", vanished updates "
            << log.vanished_updates << '\n';
  if (log.abort_reason) {
    std::cerr << "training aborted: " << *log.abort_reason << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

struct ShellOpts {
  Common common;
  std::string dist = "gaussian";
  Index dim = 100;
  std::vector<Scalar> epsilons{0.05, 0.1, 0.2, 0.5};
  Index trials = 1000;
  std::string activation = "tanh";
  bool gpn = false;
  Index layer = 50;

  json config() const {
    return {{"dist", dist},     {"dim", dim},           {"epsilons", epsilons},
            {"trials", trials}, {"activation", activation}, {"gpn", gpn},
            {"layer", layer},   {"seed", common.seed},  {"out", common.out}};
  }
};

int run_shell(const ShellOpts& o) {
  ThinShellConfig cfg;
  cfg.sampler = o.dist == "sphere" ? ShellSampler::Sphere : o.dist == "layer" ? ShellSampler::Layer
                                                                              : ShellSampler::Gaussian;
  cfg.dim = o.dim;
  cfg.epsilons = o.epsilons;
  cfg.trials = o.trials;
  cfg.seed = o.common.seed;
  cfg.activation = make_activation(o.activation, o.gpn);
  cfg.layer = o.layer;
  CsvTable table({"epsilon", "exceedance"});
  for (const ExceedanceRow& r : verify_thin_shell(cfg)) table.begin_row().add(r.epsilon).add(r.exceedance);
  table.write(fs::path(o.common.out));
  write_manifest("thin-shell", o.config(), o.common.seed, {o.common.out});
  return kExitOk;
}

int replay(const std::string& manifest, const std::string& out, const std::string& prog) {
  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw FormatError("cannot open manifest " + manifest);
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("manifest " + manifest + " is not valid JSON: " + e.what());
  }
  if (!m.contains("subcommand") || !m.contains("config") || !m["config"].is_object())
    throw FormatError("manifest " + manifest + " lacks subcommand/config");
  json config = m["config"];
  if (!out.empty()) config["out"] = out;
  std::vector<std::string> args{prog, m["subcommand"].get<std::string>()};
  for (std::string& a : config_to_args(config)) args.push_back(std::move(a));
  return cli_dispatch(args);
}

template <class T>
CLI::Option* opt(CLI::App* sub, const std::string& name, T& v, const std::string& help) {
  return sub->add_option(name, v, help)->capture_default_str();
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv) {
  CLI::App app{"Self-normalizing deep network toolkit", argc > 0 ? argv[0] : "bsnn"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::function<int()> action;
  const std::vector<std::string> act_names{"tanh", "relu", "leakyrelu", "elu", "selu", "gelu", "identity"};
  auto act_check = CLI::IsMember(act_names, CLI::ignore_case);

  // gpn-table
  std::vector<std::string> table_acts(ActivationSpec::builtin_names());
  int order = kDefaultQuadratureOrder;
  std::string root = "table";
  std::string table_out;
  auto* gt = app.add_subcommand("gpn-table", "GPN constants a, b for each activation");
  opt(gt, "--activations", table_acts, "Comma-separated activation names")->delimiter(',')->check(act_check);
  opt(gt, "--order", order, "Gauss-Hermite order")->check(CLI::Range(2, static_cast<int>(kMaxQuadratureOrder)));
  opt(gt, "--root", root, "Root of the shift equation")->check(CLI::IsMember({"table", "nonneg", "plus", "minus"}));
  opt(gt, "--out", table_out, "Output CSV (default: stdout)");
  gt->callback([&] {
    action = [&] {
      const int rc = run_gpn_table(table_acts, order, root, table_out);
      json cfg{{"activations", table_acts}, {"order", order}, {"root", root}, {"out", table_out}};
      write_manifest("gpn-table", cfg, 0, {table_out});
      return rc;
    };
  });

  auto add_act = [&](CLI::App* sub, std::string& name, bool& gpn, bool required) {
    auto* o = sub->add_option("--activation", name, "tanh, relu, leakyrelu, elu, selu, gelu")->check(act_check);
    if (required) o->required();
    sub->add_flag("--gpn", gpn, "Use the Gaussian-Poincare normalized activation");
  };

  SynthOpts so;
  auto* sy = app.add_subcommand("synth", "Per-layer norm telemetry of an untrained Haar network");
  add_act(sy, so.activation, so.gpn, true);
  opt(sy, "--width", so.width, "Width d")->check(CLI::PositiveNumber);
  opt(sy, "--depth", so.depth, "Depth L")->check(CLI::PositiveNumber);
  opt(sy, "--samples", so.samples, "Input samples")->check(CLI::PositiveNumber);
  sy->add_flag("--sphere-inputs", so.sphere_inputs, "Inputs uniform on the sqrt(d) sphere");
  sy->add_flag("--forward-only", so.forward_only, "Skip gradient telemetry");
  opt(sy, "--exceedance-out", so.exceedance_out, "Optional CSV layer,epsilon,exceedance");
  add_seed(sy, so.common);
  sy->add_option("--out", so.common.out, "Output CSV")->required();
  sy->callback([&] { action = [&] { return run_synth(so); }; });

  HistOpts ho;
  auto* hi = app.add_subcommand("hist", "Histogram of activation derivatives over all units and layers");
  add_act(hi, ho.activation, ho.gpn, true);
  opt(hi, "--width", ho.width, "Width d")->check(CLI::PositiveNumber);
  opt(hi, "--depth", ho.depth, "Depth L")->check(CLI::PositiveNumber);
  opt(hi, "--samples", ho.samples, "Input samples")->check(CLI::PositiveNumber);
  opt(hi, "--bins", ho.bins, "Bin count")->check(CLI::Range(Index{10}, Index{1000000}));
  opt(hi, "--lo", ho.lo, "Lower edge");
  opt(hi, "--hi", ho.hi, "Upper edge");
  add_seed(hi, ho.common);
  hi->add_option("--out", ho.common.out, "Output CSV")->required();
  hi->callback([&] { action = [&] { return run_hist(ho); }; });

  SweepOpts wo;
  auto* ws = app.add_subcommand("width-sweep", "Gradient-norm ratio across widths");
  add_act(ws, wo.activation, wo.gpn, true);
  opt(ws, "--widths", wo.widths, "Comma-separated widths")->delimiter(',')->check(CLI::PositiveNumber);
  opt(ws, "--depth", wo.depth, "Depth L")->check(CLI::PositiveNumber);
  opt(ws, "--seeds", wo.seeds, "Seeds per width")->check(CLI::PositiveNumber);
  opt(ws, "--workers", wo.workers, "Worker threads")->check(CLI::Range(1, 256));
  opt(ws, "--summary-out", wo.summary_out, "Optional CSV width,mean,std,count");
  add_seed(ws, wo.common);
  ws->add_option("--out", wo.common.out, "Output CSV")->required();
  ws->callback([&] { action = [&] { return run_sweep(wo); }; });

  TrainOpts to;
  auto* tr = app.add_subcommand("train", "Train a classifier with SGD and momentum");
  opt(tr, "--dataset", to.dataset, "mnist or cifar10")->check(CLI::IsMember({"mnist", "cifar10"}));
  tr->add_option("--data-dir", to.data_dir, "Dataset directory")->required();
  add_act(tr, to.activation, to.gpn, true);
  tr->add_flag("--batchnorm", to.batchnorm, "Batch norm before each activation");
  opt(tr, "--weights", to.weights, "rownorm or haar")->check(CLI::IsMember({"rownorm", "haar"}));
  opt(tr, "--depth", to.depth, "Depth L")->check(CLI::PositiveNumber);
  opt(tr, "--width", to.width, "Width d")->check(CLI::PositiveNumber);
  opt(tr, "--epochs", to.epochs, "Epochs")->check(CLI::NonNegativeNumber);
  opt(tr, "--lr", to.lr, "Learning rate")->check(CLI::PositiveNumber);
  opt(tr, "--momentum", to.momentum, "Momentum")->check(CLI::Range(0.0, 0.999999));
  opt(tr, "--batch", to.batch, "Mini-batch size")->check(CLI::PositiveNumber);
  opt(tr, "--train-subset", to.train_subset, "Leading training samples used (0: all)")->check(CLI::NonNegativeNumber);
  opt(tr, "--test-subset", to.test_subset, "Leading test samples used (0: all)")->check(CLI::NonNegativeNumber);
  opt(tr, "--eval-every", to.eval_every, "Extra evaluation every N updates (0: epoch ends only)")
      ->check(CLI::NonNegativeNumber);
  tr->add_flag("--full-paper-scale", to.full_paper_scale, "Width 500, depth 200, 50 (MNIST) or 100 (CIFAR-10) epochs");
  opt(tr, "--save-checkpoint", to.save_checkpoint, "Write the trained network here");
  opt(tr, "--load-checkpoint", to.load_checkpoint, "Start from this checkpoint");
  add_seed(tr, to.common);
  tr->add_option("--out", to.common.out, "Output CSV")->required();
  tr->callback([&] { action = [&] { return run_train(to); }; });

  ShellOpts sh;
  auto* ts = app.add_subcommand("thin-shell", "Empirical thin-shell exceedance");
  opt(ts, "--dist", sh.dist, "gaussian, sphere or layer")->check(CLI::IsMember({"gaussian", "sphere", "layer"}));
  opt(ts, "--dim", sh.dim, "Dimension d")->check(CLI::PositiveNumber);
  opt(ts, "--epsilons", sh.epsilons, "Comma-separated epsilons")->delimiter(',')->check(CLI::PositiveNumber);
  opt(ts, "--trials", sh.trials, "Samples")->check(CLI::Range(Index{100}, Index{100000000}));
  opt(ts, "--activation", sh.activation, "Activation for --dist layer")->check(act_check);
  ts->add_flag("--gpn", sh.gpn, "Use the normalized activation for --dist layer");
  opt(ts, "--layer", sh.layer, "Layer whose output is measured (--dist layer)")->check(CLI::PositiveNumber);
  add_seed(ts, sh.common);
  ts->add_option("--out", sh.common.out, "Output CSV")->required();
  ts->callback([&] { action = [&] { return run_shell(sh); }; });

  std::string manifest, replay_out;
  auto* rp = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  rp->add_option("manifest", manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);
  rp->add_option("--out", replay_out, "Write the primary output here instead");
  const std::string prog = argc > 0 ? argv[0] : "bsnn";
  rp->callback([&] { action = [&] { return replay(manifest, replay_out, prog); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    return action();
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FormatError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}

int cli_dispatch(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& a : args) argv.push_back(a.c_str());
  return cli_dispatch(static_cast<int>(argv.size()), argv.data());
}

}  // namespace bsnn

#include "bsnn/checkpoint.hpp"

#include <array>
#include <bit>
#include <algorithm>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace bsnn {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::ostream& out, double v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_matrix(std::ostream& out, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) put_f64(out, m(i, j));
}

void put_vector(std::ostream& out, const Vector& v) {
  for (Index i = 0; i < v.size(); ++i) put_f64(out, v[i]);
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint32_t u32(const char* what) {
    std::uint32_t v;
    read(&v, sizeof v, what);
    return to_little(v);
  }
  double f64(const char* what) {
    double v;
    read(&v, sizeof v, what);
    return to_little(v);
  }
  Matrix matrix(Index rows, Index cols, const char* what) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = f64(what);
    return m;
  }
  Vector vector(Index n, const char* what) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = f64(what);
    return v;
  }
  void read(void* dst, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n))
      throw FormatError(std::string("checkpoint truncated while reading ") + what + " at byte " +
                        std::to_string(offset_));
    offset_ += n;
  }

 private:
  std::istream& in_;
  std::size_t offset_ = 0;
};

ActivationSpec activation_from_kind(std::uint32_t kind) {
  switch (kind) {
    case 0: return ActivationSpec::identity();
    case 1: return ActivationSpec::tanh();
    case 2: return ActivationSpec::relu();
    case 3: return ActivationSpec::leaky_relu();
    case 4: return ActivationSpec::elu();
    case 5: return ActivationSpec::selu();
    case 6: return ActivationSpec::gelu();
    default: throw FormatError("checkpoint activation kind " + std::to_string(kind) + " is not a built-in");
  }
}

}  // namespace

std::uint32_t activation_tag(const AffineActivation& act) {
  std::uint32_t kind = 0;
  switch (act.base.kind()) {
    case ActivationKind::Identity: kind = 0; break;
    case ActivationKind::Tanh: kind = 1; break;
    case ActivationKind::ReLU: kind = 2; break;
    case ActivationKind::LeakyReLU: kind = 3; break;
    case ActivationKind::ELU: kind = 4; break;
    case ActivationKind::SELU: kind = 5; break;
    case ActivationKind::GELU: kind = 6; break;
    case ActivationKind::Custom: throw InvalidArgument("custom activations cannot be checkpointed");
  }
  return kind | (act.is_raw() ? 0u : 0x100u);
}

void save_checkpoint(const Network& net, std::ostream& out) {
  const NetworkConfig& cfg = net.config();
  out.write("BSNN", 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(cfg.width));
  put_u32(out, static_cast<std::uint32_t>(cfg.depth));
  put_u32(out, cfg.weight_mode == WeightMode::RowNormalized ? 1u : 0u);
  put_u32(out, activation_tag(cfg.activation));
  for (Index l = 0; l < cfg.depth; ++l) put_matrix(out, net.parameter(l));
  put_f64(out, cfg.activation.scale);
  put_f64(out, cfg.activation.shift);
  for (const auto* adapter : {&net.input_adapter(), &net.output_adapter()}) {
    if (*adapter) {
      put_u32(out, static_cast<std::uint32_t>((*adapter)->rows()));
      put_u32(out, static_cast<std::uint32_t>((*adapter)->cols()));
      put_matrix(out, **adapter);
    } else {
      put_u32(out, 0);
      put_u32(out, 0);
    }
  }
  put_u32(out, cfg.batchnorm ? 1u : 0u);
  if (cfg.batchnorm) {
    for (const Layer& lay : net.layers()) {
      put_vector(out, lay.bn->gamma);
      put_vector(out, lay.bn->beta);
      put_vector(out, lay.bn->running_mean);
      put_vector(out, lay.bn->running_var);
    }
  }
  if (!out) throw FormatError("failed to write checkpoint");
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open checkpoint for writing: " + path.string());
  save_checkpoint(net, out);
}

Network load_checkpoint(std::istream& in) {
  Reader r(in);
  char magic[4];
  r.read(magic, 4, "magic");
  if (std::memcmp(magic, "BSNN", 4) != 0) throw FormatError("not a checkpoint: expected magic \"BSNN\"");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));

  NetworkConfig cfg;
  cfg.width = r.u32("width");
  cfg.depth = r.u32("depth");
  const std::uint32_t mode = r.u32("weight mode");
  if (mode > 1) throw FormatError("unknown weight mode " + std::to_string(mode));
  cfg.weight_mode = mode == 1 ? WeightMode::RowNormalized : WeightMode::HaarOrthogonal;
  const std::uint32_t tag = r.u32("activation tag");
  if (cfg.width < 1 || cfg.depth < 1) throw FormatError("checkpoint has empty dimensions");

  std::vector<Matrix> params;
  for (Index l = 0; l < cfg.depth; ++l) params.push_back(r.matrix(cfg.width, cfg.width, "layer weights"));
  cfg.activation = AffineActivation{activation_from_kind(tag & 0xffu)};
  cfg.activation.scale = r.f64("activation scale");
  cfg.activation.shift = r.f64("activation shift");

  std::optional<Matrix> adapters[2];
  for (auto& adapter : adapters) {
    const Index rows = r.u32("adapter rows");
    const Index cols = r.u32("adapter cols");
    if (rows > 0 && cols > 0) adapter = r.matrix(rows, cols, "adapter weights");
  }
  if (adapters[0]) cfg.input_dim = adapters[0]->cols();
  if (adapters[1]) cfg.output_dim = adapters[1]->rows();
  cfg.batchnorm = r.u32("batchnorm flag") != 0;

  std::vector<Layer> layers(static_cast<std::size_t>(cfg.depth));
  for (Index l = 0; l < cfg.depth; ++l) {
    Layer& lay = layers[static_cast<std::size_t>(l)];
    if (cfg.weight_mode == WeightMode::RowNormalized) {
      lay.param.emplace(std::move(params[static_cast<std::size_t>(l)]));
      lay.weight = lay.param->derived();
    } else {
      lay.weight = std::move(params[static_cast<std::size_t>(l)]);
    }
    if (cfg.batchnorm) {
      BatchNormParams bn;
      bn.gamma = r.vector(cfg.width, "batch-norm gamma");
      bn.beta = r.vector(cfg.width, "batch-norm beta");
      bn.running_mean = r.vector(cfg.width, "batch-norm running mean");
      bn.running_var = r.vector(cfg.width, "batch-norm running variance");
      lay.bn = std::move(bn);
    }
  }
  return Network(cfg, std::move(layers), std::move(adapters[0]), std::move(adapters[1]));
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint: " + path.string());
  return load_checkpoint(in);
}

}  // namespace bsnn

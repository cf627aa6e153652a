#include "bsnn/data.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <sstream>

namespace bsnn {

namespace fs = std::filesystem;

Matrix Dataset::columns(std::span<const Index> rows) const {
  Matrix out(dim(), static_cast<Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) out.col(static_cast<Index>(j)) = features.row(rows[j]).transpose();
  return out;
}

std::vector<int> Dataset::labels_of(std::span<const Index> rows) const {
  std::vector<int> out;
  out.reserve(rows.size());
  for (Index r : rows) out.push_back(labels[static_cast<std::size_t>(r)]);
  return out;
}

Dataset Dataset::head(Index n) const {
  if (n >= size()) return *this;
  Dataset d;
  d.features = features.topRows(n);
  d.labels.assign(labels.begin(), labels.begin() + n);
  d.classes = classes;
  d.split = split;
  return d;
}

std::vector<unsigned char> read_binary_file(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw FormatError("data file not found: " + path.string());
  // gzread passes non-gzip files through unchanged.
  std::unique_ptr<gzFile_s, int (*)(gzFile)> gz(gzopen(path.c_str(), "rb"), gzclose);
  if (!gz) throw FormatError("cannot open data file: " + path.string());
  std::vector<unsigned char> bytes;
  unsigned char buf[1 << 16];
  for (;;) {
    const int got = gzread(gz.get(), buf, sizeof buf);
    if (got < 0) {
      int err = 0;
      throw FormatError("failed to read " + path.string() + ": " + gzerror(gz.get(), &err));
    }
    if (got == 0) break;
    bytes.insert(bytes.end(), buf, buf + got);
  }
  return bytes;
}

namespace {

std::uint32_t be32(std::span<const unsigned char> b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

std::string hex(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08X", v);
  return buf;
}

}  // namespace

Dataset parse_mnist(std::span<const unsigned char> images, std::span<const unsigned char> labels) {
  constexpr std::uint32_t kImageMagic = 0x00000803;
  constexpr std::uint32_t kLabelMagic = 0x00000801;
  if (images.size() < 16) throw FormatError("MNIST image file truncated: header needs 16 bytes");
  if (labels.size() < 8) throw FormatError("MNIST label file truncated: header needs 8 bytes");
  if (be32(images, 0) != kImageMagic)
    throw FormatError("MNIST image file has magic " + hex(be32(images, 0)) + ", expected " + hex(kImageMagic));
  if (be32(labels, 0) != kLabelMagic)
    throw FormatError("MNIST label file has magic " + hex(be32(labels, 0)) + ", expected " + hex(kLabelMagic));
  const std::size_t n = be32(images, 4);
  const std::size_t rows = be32(images, 8);
  const std::size_t cols = be32(images, 12);
  const std::size_t n_labels = be32(labels, 4);
  if (n != n_labels)
    throw FormatError("MNIST count mismatch: " + std::to_string(n) + " images vs " + std::to_string(n_labels) + " labels");
  if (n == 0) throw FormatError("MNIST file holds no samples");
  const std::size_t p = rows * cols;
  if (images.size() < 16 + n * p)
    throw FormatError("MNIST image file truncated: expected " + std::to_string(16 + n * p) + " bytes, got " +
                      std::to_string(images.size()));
  if (labels.size() < 8 + n)
    throw FormatError("MNIST label file truncated: expected " + std::to_string(8 + n) + " bytes, got " +
                      std::to_string(labels.size()));

  Dataset d;
  d.classes = 10;
  d.features.resize(static_cast<Index>(n), static_cast<Index>(p));
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[8 + i];
    if (y > 9) throw FormatError("MNIST label " + std::to_string(y) + " out of range at index " + std::to_string(i));
    d.labels[i] = y;
    for (std::size_t j = 0; j < p; ++j)
      d.features(static_cast<Index>(i), static_cast<Index>(j)) = images[16 + i * p + j] / 255.0;
  }
  return d;
}

Dataset load_mnist(const fs::path& images, const fs::path& labels) {
  const auto img = read_binary_file(images);
  const auto lab = read_binary_file(labels);
  try {
    Dataset d = parse_mnist(img, lab);
    d.split = images.filename().string();
    return d;
  } catch (const FormatError& e) {
    throw FormatError(std::string(e.what()) + " (" + images.string() + ")");
  }
}

fs::path find_data_file(const fs::path& dir, const std::string& stem) {
  for (const std::string& name : {stem, stem + ".gz"}) {
    const fs::path p = dir / name;
    if (fs::is_regular_file(p)) return p;
  }
  throw FormatError("cannot find " + stem + "[.gz] in " + dir.string());
}

Dataset load_mnist_split(const fs::path& dir, const std::string& prefix) {
  Dataset d = load_mnist(find_data_file(dir, prefix + "-images-idx3-ubyte"),
                         find_data_file(dir, prefix + "-labels-idx1-ubyte"));
  d.split = prefix;
  return d;
}

Dataset parse_cifar10(std::span<const unsigned char> bytes, const std::string& source) {
  constexpr std::size_t kRecord = 3073;
  if (bytes.empty() || bytes.size() % kRecord != 0) {
    const std::size_t whole = bytes.size() / kRecord;
    throw FormatError("CIFAR-10 file " + source + " has length " + std::to_string(bytes.size()) +
                      ", not a multiple of 3073; trailing partial record starts at byte offset " +
                      std::to_string(whole * kRecord));
  }
  const std::size_t n = bytes.size() / kRecord;
  Dataset d;
  d.classes = 10;
  d.features.resize(static_cast<Index>(n), 3072);
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t at = i * kRecord;
    if (bytes[at] > 9)
      throw FormatError("CIFAR-10 label byte " + std::to_string(bytes[at]) + " > 9 at byte offset " +
                        std::to_string(at) + " of " + source);
    d.labels[i] = bytes[at];
    for (std::size_t j = 0; j < 3072; ++j)
      d.features(static_cast<Index>(i), static_cast<Index>(j)) = bytes[at + 1 + j] / 255.0;
  }
  return d;
}

Dataset load_cifar10(std::span<const fs::path> batch_paths) {
  if (batch_paths.empty()) throw InvalidArgument("no CIFAR-10 batch files given");
  std::vector<Dataset> parts;
  Index total = 0;
  for (const fs::path& p : batch_paths) {
    parts.push_back(parse_cifar10(read_binary_file(p), p.string()));
    total += parts.back().size();
  }
  Dataset d;
  d.classes = 10;
  d.features.resize(total, 3072);
  Index row = 0;
  for (const Dataset& part : parts) {
    d.features.middleRows(row, part.size()) = part.features;
    d.labels.insert(d.labels.end(), part.labels.begin(), part.labels.end());
    row += part.size();
  }
  return d;
}

Dataset load_cifar10_split(const fs::path& dir, bool train) {
  std::vector<fs::path> paths;
  if (train) {
    for (int i = 1; i <= 5; ++i) paths.push_back(find_data_file(dir, "data_batch_" + std::to_string(i) + ".bin"));
  } else {
    paths.push_back(find_data_file(dir, "test_batch.bin"));
  }
  Dataset d = load_cifar10(paths);
  d.split = train ? "train" : "test";
  return d;
}

RowMajorMatrix normalize_thin_shell(const Eigen::Ref<const RowMajorMatrix>& rows, Index d) {
  if (rows.cols() != d)
    throw InvalidArgument("thin-shell normalization expects " + std::to_string(d) + " columns, got " +
                          std::to_string(rows.cols()) + "; map through an adapter first");
  RowMajorMatrix out = rows.colwise() - rows.rowwise().mean();
  const Scalar target = std::sqrt(static_cast<Scalar>(d));
  for (Index i = 0; i < out.rows(); ++i) {
    const Scalar n = out.row(i).norm();
    if (!(n > 0.0)) throw InvalidArgument("row " + std::to_string(i) + " has zero variance; cannot normalize");
    out.row(i) *= target / n;
  }
  return out;
}

RowMajorMatrix normalize_thin_shell(const Eigen::Ref<const RowMajorMatrix>& rows, const Matrix& adapter) {
  if (adapter.cols() != rows.cols()) throw InvalidArgument("adapter input width does not match the feature width");
  RowMajorMatrix mapped = rows * adapter.transpose();
  return normalize_thin_shell(mapped, adapter.rows());
}

}  // namespace bsnn

#pragma once

#include "bsnn/common.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace bsnn {

/// Labelled feature rows (one sample per row) with pixels scaled to [0, 1].
struct Dataset {
  RowMajorMatrix features;
  std::vector<int> labels;
  int classes = 0;
  std::string split;

  Index size() const noexcept { return features.rows(); }
  Index dim() const noexcept { return features.cols(); }

  /// Samples as columns, in the order given.
  Matrix columns(std::span<const Index> rows) const;
  std::vector<int> labels_of(std::span<const Index> rows) const;
  /// First `n` samples (all of them when n >= size()).
  Dataset head(Index n) const;
};

/// Reads a whole file; gzip streams are detected and inflated transparently.
std::vector<unsigned char> read_binary_file(const std::filesystem::path& path);

/// IDX pair: images magic 0x00000803, labels magic 0x00000801, big-endian.
Dataset load_mnist(const std::filesystem::path& images, const std::filesystem::path& labels);
Dataset parse_mnist(std::span<const unsigned char> images, std::span<const unsigned char> labels);

/// Locates `<stem>` or `<stem>.gz` inside `dir` (stem e.g. "train-images-idx3-ubyte").
std::filesystem::path find_data_file(const std::filesystem::path& dir, const std::string& stem);
/// Loads the MNIST train ("train") or test ("t10k") split from a directory.
Dataset load_mnist_split(const std::filesystem::path& dir, const std::string& prefix);

/// CIFAR-10 binary batches: 3073-byte records (label byte + 3072 channel-major pixels).
Dataset load_cifar10(std::span<const std::filesystem::path> batch_paths);
Dataset parse_cifar10(std::span<const unsigned char> bytes, const std::string& source = "buffer");
/// data_batch_1..5.bin (train) or test_batch.bin (test) inside `dir`.
Dataset load_cifar10_split(const std::filesystem::path& dir, bool train);

/// Centers each row by its own mean and rescales it to norm sqrt(d); the
/// rows must already have d columns. Zero-variance rows are rejected.
RowMajorMatrix normalize_thin_shell(const Eigen::Ref<const RowMajorMatrix>& rows, Index d);
/// Maps rows through `adapter` (d x p) first, then normalizes.
RowMajorMatrix normalize_thin_shell(const Eigen::Ref<const RowMajorMatrix>& rows, const Matrix& adapter);

}  // namespace bsnn

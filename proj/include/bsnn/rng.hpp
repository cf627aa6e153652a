#pragma once

#include "bsnn/common.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace bsnn {

/// Seedable, splittable random stream.
///
/// Every stream carries an immutable key. `derive(tag, index)` returns an
/// independent child keyed by (key, tag, index), never by how many numbers the
/// parent has produced, so work split across tasks draws the same numbers no
/// matter how it is scheduled. Bits come from std::mt19937_64 (fully specified
/// by the standard); normals use the Marsaglia polar method implemented here so
/// sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  Rng derive(std::string_view tag, std::uint64_t index = 0) const;
  Rng derive(std::string_view tag, std::uint64_t index, std::uint64_t sub) const;

  std::uint64_t key() const noexcept { return key_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double normal();

  Vector gaussian_vector(Index n);
  Matrix gaussian_matrix(Index rows, Index cols);

 private:
  std::uint64_t key_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace bsnn

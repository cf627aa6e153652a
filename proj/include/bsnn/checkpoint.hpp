#pragma once

#include "bsnn/network.hpp"

#include <filesystem>
#include <iosfwd>

namespace bsnn {

/// Checkpoint layout, all little-endian:
///
///   "BSNN" | version u32 | d u32 | L u32 | weight_mode u32 | activation tag u32
///   L row-major d x d f64 matrices (raw V in RowNormalized mode, W otherwise)
///   activation scale f64 | activation shift f64
///   input adapter: rows u32 | cols u32 | row-major f64 data   (0 x 0 when absent)
///   output adapter: rows u32 | cols u32 | row-major f64 data
///   batchnorm u32 (0/1), then per layer gamma, beta, running mean, running var (d f64 each)
///
/// Activation tag: low byte is the kind (0 identity, 1 tanh, 2 relu,
/// 3 leakyrelu, 4 elu, 5 selu, 6 gelu); bit 8 is set when scale/shift differ
/// from (1, 0). Built-ins use their default hyperparameters.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Network& net, std::ostream& out);
void save_checkpoint(const Network& net, const std::filesystem::path& path);
Network load_checkpoint(std::istream& in);
Network load_checkpoint(const std::filesystem::path& path);

std::uint32_t activation_tag(const AffineActivation& act);

}  // namespace bsnn

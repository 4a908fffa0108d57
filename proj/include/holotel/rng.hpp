#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace holotel {

/// Philox4x32-10 counter-based block cipher (Salmon et al., SC 2011).
/// Stateless: output depends only on (counter, key), so any element of a
/// random stream can be generated independently and in any order.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Four standard normals addressed by (seed, sample, stream, block).
///
/// One Philox block yields four 32-bit words -> four uniforms -> two
/// Box-Muller pairs. `sample` must fit in 32 bits; `stream` separates
/// independent consumers within one sample (cell draws, completion draws,
/// input vacuum, ...).
struct NormalQuad {
  double n0, n1, n2, n3;
};

NormalQuad normals_at(std::uint64_t seed, std::uint64_t sample,
                      std::uint32_t stream, std::uint64_t block);

/// Order-stable pairwise (cascade) summation. Result depends only on the
/// element order of `x`, never on chunking or thread count.
double pairwise_sum(std::span<const double> x);

}  // namespace holotel

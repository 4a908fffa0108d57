#include "holotel/rng.hpp"

#include <cmath>
#include <numeric>

namespace holotel {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& c,
                         const std::array<std::uint32_t, 2>& k) {
  const std::uint64_t p0 = std::uint64_t(kMul0) * c[0];
  const std::uint64_t p1 = std::uint64_t(kMul1) * c[2];
  const std::uint32_t hi0 = std::uint32_t(p0 >> 32);
  const std::uint32_t lo0 = std::uint32_t(p0);
  const std::uint32_t hi1 = std::uint32_t(p1 >> 32);
  const std::uint32_t lo1 = std::uint32_t(p1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    philox_round(counter, key);
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return counter;
}

NormalQuad normals_at(std::uint64_t seed, std::uint64_t sample,
                      std::uint32_t stream, std::uint64_t block) {
  const std::array<std::uint32_t, 4> ctr = {
      std::uint32_t(block), std::uint32_t(block >> 32), std::uint32_t(sample),
      stream};
  const std::array<std::uint32_t, 2> key = {std::uint32_t(seed),
                                            std::uint32_t(seed >> 32)};
  const auto w = philox4x32(ctr, key);
  // (w + 0.5) * 2^-32 lies strictly inside (0,1), so log() is finite.
  const double u0 = (double(w[0]) + 0.5) * 0x1p-32;
  const double u1 = (double(w[1]) + 0.5) * 0x1p-32;
  const double u2 = (double(w[2]) + 0.5) * 0x1p-32;
  const double u3 = (double(w[3]) + 0.5) * 0x1p-32;
  const double r0 = std::sqrt(-2.0 * std::log(u0));
  const double r1 = std::sqrt(-2.0 * std::log(u2));
  const double a0 = 2.0 * M_PI * u1;
  const double a1 = 2.0 * M_PI * u3;
  return {r0 * std::cos(a0), r0 * std::sin(a0), r1 * std::cos(a1),
          r1 * std::sin(a1)};
}

double pairwise_sum(std::span<const double> x) {
  if (x.size() <= 16) {
    double acc = 0.0;
    for (double v : x) acc += v;
    return acc;
  }
  const std::size_t half = x.size() / 2;
  return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

}  // namespace holotel

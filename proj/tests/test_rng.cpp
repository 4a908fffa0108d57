#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "holotel/rng.hpp"

using namespace holotel;

TEST_CASE("philox4x32-10 known-answer vectors") {
  // Reference vectors from the Random123 distribution.
  auto r0 = philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(r0[0] == 0x6627e8d5u);
  CHECK(r0[1] == 0xe169c58du);
  CHECK(r0[2] == 0xbc57ac4cu);
  CHECK(r0[3] == 0x9b00dbd8u);

  auto r1 = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                       {0xffffffffu, 0xffffffffu});
  CHECK(r1[0] == 0x408f276du);
  CHECK(r1[1] == 0x41c83b0eu);
  CHECK(r1[2] == 0xa20bc7c6u);
  CHECK(r1[3] == 0x6d5451fdu);

  auto r2 = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                       {0xa4093822u, 0x299f31d0u});
  CHECK(r2[0] == 0xd16cfe09u);
  CHECK(r2[1] == 0x94fdccebu);
  CHECK(r2[2] == 0x5001e420u);
  CHECK(r2[3] == 0x24126ea1u);
}

TEST_CASE("normal stream is addressable and reproducible") {
  const NormalQuad a = normals_at(42, 7, 1, 123456789ull);
  const NormalQuad b = normals_at(42, 7, 1, 123456789ull);
  CHECK(a.n0 == b.n0);
  CHECK(a.n1 == b.n1);
  CHECK(a.n2 == b.n2);
  CHECK(a.n3 == b.n3);

  const NormalQuad c = normals_at(42, 7, 2, 123456789ull);
  CHECK(a.n0 != c.n0);
  const NormalQuad d = normals_at(42, 8, 1, 123456789ull);
  CHECK(a.n0 != d.n0);
  const NormalQuad e = normals_at(43, 7, 1, 123456789ull);
  CHECK(a.n0 != e.n0);
}

TEST_CASE("normal stream moments") {
  const std::int64_t n = 200000;
  double sum = 0.0, sum2 = 0.0, sum3 = 0.0, sum4 = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const NormalQuad q = normals_at(1, 0, 0, std::uint64_t(i));
    for (double v : {q.n0, q.n1, q.n2, q.n3}) {
      sum += v;
      sum2 += v * v;
      sum3 += v * v * v;
      sum4 += v * v * v * v;
    }
  }
  const double count = 4.0 * double(n);
  const double mean = sum / count;
  const double var = sum2 / count - mean * mean;
  // 5-sigma statistical gates.
  CHECK(std::fabs(mean) < 5.0 / std::sqrt(count));
  CHECK(std::fabs(var - 1.0) < 5.0 * std::sqrt(2.0 / count));
  CHECK(std::fabs(sum3 / count) < 5.0 * std::sqrt(15.0 / count));
  CHECK(std::fabs(sum4 / count - 3.0) < 5.0 * std::sqrt(96.0 / count));
}

TEST_CASE("pairwise sum matches plain accumulation") {
  std::vector<double> x;
  for (int i = 0; i < 1000; ++i) x.push_back(std::sin(0.1 * i));
  double plain = 0.0;
  for (double v : x) plain += v;
  CHECK(pairwise_sum(x) == doctest::Approx(plain).epsilon(1e-12));
  CHECK(pairwise_sum(std::span<const double>{}) == 0.0);
}

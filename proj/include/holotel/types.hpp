#pragma once

#include <cstdint>
#include <vector>

namespace holotel {

/// Pixel/time-bin layout. Pixel centers sit on pitch `delta` at
/// x_j = x0 + jx*delta (same for y), bin centers at t_i = t0 + i*t_window.
/// Defaults put pixel (0,0) at the origin of the first pixel cell.
struct GridSpec {
  double delta = 1.0;     ///< pixel edge (units of l_c)
  double t_window = 1.0;  ///< bin duration (units of T_c)
  int nx = 1;
  int ny = 1;
  int nt = 1;
  double x0 = 0.0;  ///< center of pixel column 0
  double y0 = 0.0;  ///< center of pixel row 0
  double t0 = 0.0;  ///< center of bin 0

  void validate() const;  // throws ConfigError ("grid.*")
  double pixel_x(int jx) const { return x0 + jx * delta; }
  double pixel_y(int jy) const { return y0 + jy * delta; }
  double bin_t(int i) const { return t0 + i * t_window; }
  int cells() const { return nx * ny * nt; }
};

/// One coarse-grained cell: pixel (jx, jy), time bin it.
struct CellIndex {
  int jx = 0;
  int jy = 0;
  int it = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

using CellPair = std::pair<CellIndex, CellIndex>;

struct CovEntry {
  CellIndex a, b;
  double value = 0.0;
  double stderr_ = 0.0;  ///< populated for monte-carlo entries only
};

/// Added-noise covariance over pixel/bin pairs with method metadata.
struct CovarianceTable {
  enum class Method { kQuadrature, kMonteCarlo };
  Method method = Method::kQuadrature;
  std::vector<CovEntry> entries;
  std::uint64_t fingerprint = 0;  ///< hash of parameters + grid + profile
};

/// FNV-1a accumulation helpers used for parameter fingerprints.
std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed);

}  // namespace holotel

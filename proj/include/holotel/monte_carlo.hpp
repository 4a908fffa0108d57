#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "holotel/opa_model.hpp"
#include "holotel/types.hpp"

namespace holotel {

/// Symmetric spectral lattice qx,qy in {-mq..mq}*dq, omega in {-mw..mw}*dw.
/// Contains the origin and is closed under negation by construction.
struct SpectralGrid {
  double dq = 0.1;
  double dw = 0.1;
  int mq = 10;
  int mw = 10;

  int nq() const { return 2 * mq + 1; }
  int nw() const { return 2 * mw + 1; }
  std::size_t cells() const {
    return std::size_t(nq()) * std::size_t(nq()) * std::size_t(nw());
  }
  double cell_volume() const { return dq * dq * dw; }

  SpectralPoint point(std::size_t c) const {
    const int n = nq();
    const int ix = int(c % n), iy = int((c / n) % n), iw = int(c / (n * n));
    return {(ix - mq) * dq, (iy - mq) * dq, (iw - mw) * dw};
  }
  std::size_t index(int kx, int ky, int kw) const {
    const int n = nq();
    return (std::size_t(kw + mw) * n + std::size_t(ky + mq)) * n +
           std::size_t(kx + mq);
  }
  std::size_t mirror(std::size_t c) const { return cells() - 1 - c; }
};

struct McOptions {
  // Spectral resolution/extent; zero means derive from the parameters
  // (band coverage plus window-lobe padding).
  double dq = 0.0;
  double dw = 0.0;
  double q_extent = 0.0;
  double w_extent = 0.0;
  /// Completes the truncated vacuum spectrum with an exact pixel-level
  /// Gaussian remainder so the classical part carries no lattice bias.
  bool vacuum_completion = true;
  /// Cells whose squeezing signal under the windows falls below this
  /// (absolute, covariance units, summed bound) are treated as vacuum.
  double mask_budget = 5e-5;
  int threads = 1;
};

SpectralGrid auto_spectral_grid(const OpaParams& params, const GridSpec& grid,
                                const McOptions& opts = {});

/// One stochastic realization of the two EPR field amplitudes.
struct SpectralSample {
  std::vector<std::complex<double>> e1, e2;  // SpectralGrid cell order
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
};

/// Bogoliubov coefficients frozen per grid cell for repeated sampling.
class EprSource {
 public:
  EprSource(const OpaParams& params, const SpectralGrid& grid);

  const SpectralGrid& grid() const { return grid_; }
  const OpaParams& params() const { return params_; }

  /// Vacuum draws with symmetric-ordering variance 1/2 per discrete mode
  /// (density-scaled by the cell volume), transformed pairwise: cell k of
  /// field 1 couples to cell -k of field 2. Randomness is counter-based on
  /// (seed, index), so samples are reproducible and order-independent.
  SpectralSample sample(std::uint64_t seed, std::uint64_t index) const;

  /// u, v of the pair governed by D at cell c (coefficients of e1 at c).
  std::complex<double> u(std::size_t c) const { return u_[c]; }
  std::complex<double> v(std::size_t c) const { return v_[c]; }

 private:
  OpaParams params_;
  SpectralGrid grid_;
  std::vector<std::complex<double>> u_, v_;
};

SpectralSample sample_epr(const OpaParams& params, const SpectralGrid& grid,
                          std::uint64_t seed, std::uint64_t index);

// ---------------------------------------------------------------------------
// Real-space synthesis and coarse-graining (teleport-pipeline backend).

/// Periodic real-space lattice dual to a SpectralGrid; sample n sits at
/// (n + 1/2) * step, extents are 2pi/dq and 2pi/dw.
struct LatticeSpec {
  int nx = 0, ny = 0, nt = 0;
  double dx = 0.0, dy = 0.0, dt = 0.0;
  std::size_t sites() const {
    return std::size_t(nx) * std::size_t(ny) * std::size_t(nt);
  }
};

/// Lattice resolving `min_xy` and `min_t` with at least `points_per` samples.
LatticeSpec lattice_for(const SpectralGrid& grid, double min_xy, double min_t,
                        int points_per = 8);

struct NoiseField {
  LatticeSpec lat;
  std::vector<std::complex<double>> values;  // [(it*ny + iy)*nx + ix]
};

/// Inverse Fourier synthesis under E(ρ,t) = (2π)^{-3/2} Σ e(q,Ω)
/// exp(i(q·ρ - Ωt)) dq²dΩ.
NoiseField synthesize_spectrum(std::span<const std::complex<double>> amps,
                               const SpectralGrid& grid,
                               const LatticeSpec& lat);

/// Spectral noise f(q,Ω) = e2(q,Ω) + conj(e1(-q,-Ω)), synthesized to the
/// lattice. The commutator coefficient of f vanishes cell-by-cell, so the
/// synthesized field is a classical complex Gaussian field.
NoiseField synthesize_noise(const SpectralSample& sample,
                            const SpectralGrid& grid, const LatticeSpec& lat);

std::vector<std::complex<double>> noise_spectrum(const SpectralSample& sample,
                                                 const SpectralGrid& grid);

/// A(j,i) = (1/sqrt(S T)) ∫_pixel ∫_bin field, as lattice sums with
/// cell-overlap weights. Throws GridTooCoarse when the lattice does not
/// resolve delta and t_window with >= 8 points or the layout does not fit
/// inside one periodic extent. Result in GridSpec cell order
/// [(it*ny + jy)*nx + jx].
std::vector<std::complex<double>> coarse_grain(const NoiseField& field,
                                               const GridSpec& grid);

/// X_phi = A e^{-i phi} + c.c.; the conjugate quadrature is phi + pi/2.
inline double quadrature_record(std::complex<double> amp, double phi) {
  return 2.0 * std::real(amp * std::polar(1.0, -phi));
}

// ---------------------------------------------------------------------------
// Exact spectral pixel integration shared by the estimators.

/// Exact coarse-graining of band-limited spectra: pixel value =
/// Σ_k amps[k] * weight_k with the analytic window integrals, equal to the
/// pixel integral of the synthesized field (no lattice discretization).
class PixelProjector {
 public:
  PixelProjector(const SpectralGrid& grid, const GridSpec& gspec,
                 std::span<const CellIndex> cells,
                 std::span<const std::uint32_t> kept);

  int pixels() const { return int(cells_.size()); }
  const std::vector<std::uint32_t>& kept() const { return kept_; }

  /// amps indexed like `kept` (compact). Appends one value per pixel.
  void project(std::span<const std::complex<double>> amps,
               std::complex<double>* out) const;

  /// On-grid vacuum pixel covariance Re<A_p conj(A_p')> per unit spectral
  /// density (symmetric, real on a negation-closed grid).
  std::vector<double> vacuum_gram() const;

 private:
  std::vector<CellIndex> cells_;
  std::vector<std::uint32_t> kept_;
  std::vector<std::vector<std::complex<double>>> weights_;  // [pixel][kept]
  double cell_volume_ = 1.0;
};

/// Exact Gaussian remainder for the vacuum modes a finite grid leaves out:
/// covariance = triangle-overlap (exact) minus on-grid gram. Factorized once
/// (eigen decomposition, tiny negative eigenvalues clipped), then drawn per
/// sample from the counter-based stream.
class VacuumCompletion {
 public:
  VacuumCompletion(const PixelProjector& proj, const GridSpec& gspec,
                   std::span<const CellIndex> cells);

  bool active() const { return active_; }
  double clipped() const { return clipped_; }

  /// Adds scale * B z(sample) to `amps` (one entry per pixel). `stream`
  /// separates independent consumers.
  void add_draw(std::uint64_t seed, std::uint64_t sample, std::uint32_t stream,
                double scale, std::complex<double>* amps) const;

 private:
  int n_ = 0;
  bool active_ = false;
  double clipped_ = 0.0;
  std::vector<double> factor_;  // n x n, row-major: draw = factor * z
};

// ---------------------------------------------------------------------------
// Estimators.

struct PairSqueezingResult {
  double minor_var = 0.0;
  double major_var = 0.0;
  double vac_minor = 0.0;
  double vac_major = 0.0;
  double minor_ratio = 0.0;
  double major_ratio = 0.0;
  double minor_ratio_stderr = 0.0;
  double major_ratio_stderr = 0.0;
};

/// Variance of the pair sum s = e1(q,Ω) + e2(-q,-Ω) along the ellipse axes,
/// against the same estimator at sigma = 0 (shared random numbers).
PairSqueezingResult pair_squeezing_check(const OpaParams& params,
                                         const SpectralPoint& pt,
                                         std::int64_t n_samples,
                                         std::uint64_t seed);

/// Monte Carlo noise realizations reduced to pixel amplitudes, kept per
/// sample so any quadrature phase can be read from one ensemble.
class NoiseEnsemble {
 public:
  NoiseEnsemble(const OpaParams& params, const GridSpec& grid,
                std::span<const CellIndex> cells, std::int64_t n_samples,
                std::uint64_t seed, const McOptions& opts = {});

  std::int64_t n_samples() const { return n_samples_; }
  const std::vector<CellIndex>& cells() const { return cells_; }
  const SpectralGrid& spectral_grid() const { return source_->grid(); }
  std::size_t kept_cells() const { return kept_count_; }
  double mask_bias_bound() const { return mask_bias_bound_; }

  std::complex<double> amplitude(std::int64_t sample, int cell) const {
    return amps_[std::size_t(sample) * cells_.size() + cell];
  }

  /// Sample covariance of X_phi with delete-1 jackknife standard errors.
  CovarianceTable covariance(std::span<const CellPair> pairs,
                             double phi) const;

 private:
  GridSpec grid_;
  std::vector<CellIndex> cells_;
  std::int64_t n_samples_ = 0;
  std::uint64_t seed_ = 0;
  std::size_t kept_count_ = 0;
  double mask_bias_bound_ = 0.0;
  std::uint64_t fingerprint_ = 0;
  std::shared_ptr<EprSource> source_;
  std::vector<std::complex<double>> amps_;  // [sample][cell]
};

/// Sample covariance of the added-noise quadratures over `pairs`, phase
/// `phi`, with jackknife standard errors. Agrees with the deterministic
/// kernel within statistics for any phi.
CovarianceTable estimate_covariance(const OpaParams& params,
                                    const GridSpec& grid,
                                    std::span<const CellPair> pairs,
                                    double phi, std::int64_t n_samples,
                                    std::uint64_t seed,
                                    const McOptions& opts = {});

}  // namespace holotel

#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "holotel/monte_carlo.hpp"
#include "holotel/opa_model.hpp"
#include "holotel/types.hpp"

namespace holotel {

/// Coherent input amplitudes per pixel/bin. Still images hold one bin and
/// replicate across time bins at run time.
struct ImagePlane {
  int nx = 0, ny = 0, nt = 1;
  double scale = 1.0;  ///< photons per pixel at full gray level
  std::vector<std::complex<double>> amps;  // [(it*ny + jy)*nx + jx]

  std::complex<double> at(int jx, int jy, int it) const {
    const int bin = nt == 1 ? 0 : it;
    return amps[(std::size_t(bin) * ny + jy) * nx + jx];
  }
};

struct GrayImage {
  int nx = 0, ny = 0;
  int maxval = 65535;
  std::vector<int> pixels;  // row-major
};

/// P2/P5 reader, maxval <= 65535 (two-byte samples are big-endian).
/// Throws BadImageFormat on magic/shape/maxval violations.
GrayImage read_pgm(const std::string& path);
void write_pgm(const std::string& path, const GrayImage& img,
               bool binary = true);

/// alpha(j,i) = sqrt(scale * g / maxval), real non-negative.
ImagePlane load_image(const std::string& path, double scale);
/// One PGM per time bin (all same shape).
ImagePlane load_image_stack(const std::vector<std::string>& paths,
                            double scale);
/// Gray rendering g = round(maxval * |alpha|^2 / scale), clamped.
GrayImage render_image(const ImagePlane& image, int it = 0,
                       int maxval = 65535);

/// Pixel grid covering the image: centers at ((j+1/2)delta, (i+1/2)T).
GridSpec grid_for_image(const ImagePlane& image, double delta,
                        double t_window);

struct TeleportOptions {
  std::int64_t n_samples = 200;
  std::uint64_t seed = 0;
  /// kLattice realizes coarse-graining as weighted sums over the synthesized
  /// real-space lattice; kSpectral integrates the same pixels analytically in
  /// the spectral domain (no lattice pass, much faster).
  enum class Backend { kLattice, kSpectral };
  Backend backend = Backend::kLattice;
  McOptions mc;
};

/// Per-sample teleportation machinery at pixel granularity. The explicit
/// chain (beamsplit, homodyne records at LO phases 0 and pi/2, modulation by
/// the conjugate complex record, recombination) reproduces
/// input + coarse-grained noise identically per sample.
class TeleportRun {
 public:
  TeleportRun(const ImagePlane& image, const OpaParams& params,
              const GridSpec& grid, const TeleportOptions& opts);

  int pixels() const { return int(input_.size()); }
  const GridSpec& grid() const { return grid_; }

  struct SampleOutput {
    std::vector<std::complex<double>> out;       // explicit chain
    std::vector<std::complex<double>> shortcut;  // input + noise
  };
  SampleOutput run_sample(std::int64_t index) const;

  /// Coarse-grained input amplitudes (no vacuum draw), alpha * sqrt(S T).
  const std::vector<std::complex<double>>& input() const { return input_; }

 private:
  GridSpec grid_;
  TeleportOptions opts_;
  std::vector<std::complex<double>> input_;
  std::shared_ptr<EprSource> source_;
  std::shared_ptr<PixelProjector> projector_;
  std::shared_ptr<VacuumCompletion> completion_;
  LatticeSpec lattice_;  // kLattice backend only
  std::vector<std::uint32_t> kept_;
};

struct TeleportResult {
  ImagePlane mean;
  ImagePlane noisy_sample;
  std::vector<double> c_diag;    ///< per pixel, bin-averaged added noise
  std::vector<double> fidelity;  ///< per pixel
  std::vector<double> mean_stderr;  ///< per pixel stderr of the mean |amp|
};

/// Per-pixel coherent-state teleportation fidelity 2/(2 + C) under the
/// vacuum-quadrature-variance-1 convention.
double fidelity_from_covariance(double c_diag);

TeleportResult teleport(const ImagePlane& image, const OpaParams& params,
                        const GridSpec& grid, const TeleportOptions& opts);

/// CSV `j_x,j_y,c_diag,fidelity`.
void write_fidelity_csv(std::ostream& out, const TeleportResult& result,
                        const GridSpec& grid);

}  // namespace holotel

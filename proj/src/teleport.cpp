#include "holotel/teleport.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "holotel/csv.hpp"
#include "holotel/errors.hpp"
#include "holotel/parallel.hpp"
#include "holotel/rng.hpp"

namespace holotel {

namespace {

constexpr std::uint32_t kStreamRestField1 = 1;
constexpr std::uint32_t kStreamRestField2 = 2;
constexpr std::uint32_t kStreamInputVacuum = 3;

constexpr double kInvSqrt2 = 0.70710678118654752440;

std::vector<CellIndex> all_cells(const GridSpec& grid) {
  std::vector<CellIndex> cells;
  cells.reserve(grid.cells());
  for (int it = 0; it < grid.nt; ++it)
    for (int jy = 0; jy < grid.ny; ++jy)
      for (int jx = 0; jx < grid.nx; ++jx) cells.push_back({jx, jy, it});
  return cells;
}

// Input vacuum at pixel level: non-overlapping aligned pixels carry
// independent vacuum amplitudes of symmetric-ordering variance 1/2.
void add_input_vacuum(std::uint64_t seed, std::uint64_t sample, int npix,
                      std::complex<double>* amps) {
  for (int p = 0; p < npix; p += 2) {
    const NormalQuad q =
        normals_at(seed, sample, kStreamInputVacuum, std::uint64_t(p / 2));
    amps[p] += std::complex<double>(0.5 * q.n0, 0.5 * q.n1);
    if (p + 1 < npix)
      amps[p + 1] += std::complex<double>(0.5 * q.n2, 0.5 * q.n3);
  }
}

}  // namespace

TeleportRun::TeleportRun(const ImagePlane& image, const OpaParams& params,
                         const GridSpec& grid, const TeleportOptions& opts)
    : grid_(grid), opts_(opts) {
  params.validate();
  grid.validate();
  if (image.nx != grid.nx || image.ny != grid.ny)
    throw ConfigError("teleport.image", "image shape does not match grid");
  if (image.nt != 1 && image.nt != grid.nt)
    throw ConfigError("teleport.image",
                      "image stack depth does not match grid.nt");

  const auto cells = all_cells(grid);
  const double root_st =
      std::sqrt(grid.delta * grid.delta * grid.t_window);
  input_.resize(cells.size());
  for (std::size_t p = 0; p < cells.size(); ++p)
    input_[p] =
        image.at(cells[p].jx, cells[p].jy, cells[p].it) * root_st;

  // The synthesized fields are periodic; one extent must hold the whole
  // pixel layout plus a correlation guard band.
  McOptions mc = opts.mc;
  const double extent_x = grid.x0 + grid.nx * grid.delta + 8.0;
  const double extent_t = grid.t0 + grid.nt * grid.t_window + 8.0;
  const double dq_cap = 2.0 * M_PI / extent_x;
  const double dw_cap = 2.0 * M_PI / extent_t;
  SpectralGrid probe = auto_spectral_grid(params, grid, mc);
  mc.dq = std::min(probe.dq, dq_cap);
  mc.dw = std::min(probe.dw, dw_cap);
  const SpectralGrid sg = auto_spectral_grid(params, grid, mc);
  source_ = std::make_shared<EprSource>(params, sg);

  kept_.resize(sg.cells());
  for (std::size_t c = 0; c < kept_.size(); ++c)
    kept_[c] = std::uint32_t(c);
  projector_ = std::make_shared<PixelProjector>(sg, grid, cells, kept_);
  if (opts.mc.vacuum_completion)
    completion_ = std::make_unique<VacuumCompletion>(*projector_, grid, cells);

  if (opts.backend == TeleportOptions::Backend::kLattice)
    lattice_ = lattice_for(sg, std::min(1.0, grid.delta),
                           std::min(1.0, grid.t_window));
}

TeleportRun::SampleOutput TeleportRun::run_sample(std::int64_t index) const {
  const int npix = pixels();
  const SpectralGrid& sg = source_->grid();
  const SpectralSample sample =
      source_->sample(opts_.seed, std::uint64_t(index));

  std::vector<std::complex<double>> cg1(npix), cg2(npix), cgf(npix);
  if (opts_.backend == TeleportOptions::Backend::kLattice) {
    const auto f1 = coarse_grain(synthesize_spectrum(sample.e1, sg, lattice_),
                                 grid_);
    const auto f2 = coarse_grain(synthesize_spectrum(sample.e2, sg, lattice_),
                                 grid_);
    const auto fn = coarse_grain(synthesize_noise(sample, sg, lattice_),
                                 grid_);
    std::copy(f1.begin(), f1.end(), cg1.begin());
    std::copy(f2.begin(), f2.end(), cg2.begin());
    std::copy(fn.begin(), fn.end(), cgf.begin());
  } else {
    projector_->project(sample.e1, cg1.data());
    projector_->project(sample.e2, cg2.data());
    const auto f = noise_spectrum(sample, sg);
    projector_->project(f, cgf.data());
  }

  std::vector<std::complex<double>> rest1(npix, {0.0, 0.0}),
      rest2(npix, {0.0, 0.0});
  if (completion_) {
    completion_->add_draw(opts_.seed, std::uint64_t(index), kStreamRestField1,
                          kInvSqrt2, rest1.data());
    completion_->add_draw(opts_.seed, std::uint64_t(index), kStreamRestField2,
                          kInvSqrt2, rest2.data());
  }

  std::vector<std::complex<double>> a_in(input_);
  add_input_vacuum(opts_.seed, std::uint64_t(index), npix, a_in.data());

  SampleOutput out;
  out.out.resize(npix);
  out.shortcut.resize(npix);
  for (int p = 0; p < npix; ++p) {
    const std::complex<double> e1 = cg1[p] + rest1[p];
    const std::complex<double> e2 = cg2[p] + rest2[p];
    // Explicit chain: 50/50 beamsplit, quadrature records at LO phases 0
    // (x channel) and pi/2 (y channel), modulation by the conjugate record.
    const std::complex<double> bx = (a_in[p] + e1) * kInvSqrt2;
    const std::complex<double> by = (-a_in[p] + e1) * kInvSqrt2;
    const double x_rec = quadrature_record(bx, 0.0);
    const double y_rec = quadrature_record(by, 0.5 * M_PI);
    const std::complex<double> record =
        std::complex<double>(x_rec, y_rec) * kInvSqrt2;
    out.out[p] = e2 + std::conj(record);
    out.shortcut[p] =
        a_in[p] + (cgf[p] + rest2[p] + std::conj(rest1[p]));
  }
  return out;
}

double fidelity_from_covariance(double c_diag) {
  return 2.0 / (2.0 + c_diag);
}

TeleportResult teleport(const ImagePlane& image, const OpaParams& params,
                        const GridSpec& grid, const TeleportOptions& opts) {
  if (opts.n_samples < 2)
    throw ConfigError("mc.n_samples", "must be >= 2");
  const TeleportRun run(image, params, grid, opts);
  const int npix = run.pixels();
  const std::int64_t n = opts.n_samples;

  std::vector<std::complex<double>> outs(std::size_t(n) * npix);
  parallel_chunks(n, opts.mc.threads, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t s = b; s < e; ++s) {
      const auto res = run.run_sample(s);
      std::copy(res.out.begin(), res.out.end(),
                outs.begin() + std::size_t(s) * npix);
    }
  });

  const double root_st = std::sqrt(grid.delta * grid.delta * grid.t_window);
  TeleportResult result;
  result.mean.nx = grid.nx;
  result.mean.ny = grid.ny;
  result.mean.nt = grid.nt;
  result.mean.scale = image.scale;
  result.mean.amps.resize(npix);
  result.noisy_sample = result.mean;

  std::vector<double> re(n), im(n);
  std::vector<double> cell_c(npix);
  for (int p = 0; p < npix; ++p) {
    for (std::int64_t s = 0; s < n; ++s) {
      const std::complex<double> a = outs[std::size_t(s) * npix + p];
      re[s] = a.real();
      im[s] = a.imag();
    }
    const double mean_re = pairwise_sum(re) / double(n);
    const double mean_im = pairwise_sum(im) / double(n);
    result.mean.amps[p] = std::complex<double>(mean_re, mean_im) / root_st;
    result.noisy_sample.amps[p] = outs[p] / root_st;

    // X = 2 Re(A), Y = 2 Im(A); output variance is 1 (input vacuum) + C.
    double vx = 0.0, vy = 0.0;
    for (std::int64_t s = 0; s < n; ++s) {
      vx += (re[s] - mean_re) * (re[s] - mean_re);
      vy += (im[s] - mean_im) * (im[s] - mean_im);
    }
    vx *= 4.0 / double(n - 1);
    vy *= 4.0 / double(n - 1);
    cell_c[p] = 0.5 * (vx + vy) - 1.0;
    result.mean_stderr.push_back(
        std::sqrt(0.25 * (vx + vy) / double(n)) / root_st);
  }

  // Bin-averaged per-pixel map.
  result.c_diag.assign(std::size_t(grid.nx) * grid.ny, 0.0);
  for (int it = 0; it < grid.nt; ++it)
    for (int j = 0; j < grid.nx * grid.ny; ++j)
      result.c_diag[j] += cell_c[std::size_t(it) * grid.nx * grid.ny + j] /
                          double(grid.nt);
  result.fidelity.resize(result.c_diag.size());
  for (std::size_t j = 0; j < result.c_diag.size(); ++j)
    result.fidelity[j] =
        fidelity_from_covariance(std::max(0.0, result.c_diag[j]));
  return result;
}

void write_fidelity_csv(std::ostream& out, const TeleportResult& result,
                        const GridSpec& grid) {
  out << "j_x,j_y,c_diag,fidelity\n";
  for (int jy = 0; jy < grid.ny; ++jy)
    for (int jx = 0; jx < grid.nx; ++jx) {
      const std::size_t j = std::size_t(jy) * grid.nx + jx;
      out << jx << ',' << jy << ',' << csv::num(result.c_diag[j]) << ','
          << csv::num(result.fidelity[j]) << '\n';
    }
}

}  // namespace holotel

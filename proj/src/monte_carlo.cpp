#include "holotel/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

#include <fftw3.h>

#include "holotel/errors.hpp"
#include "holotel/noise_kernel.hpp"
#include "holotel/parallel.hpp"
#include "holotel/rng.hpp"

namespace holotel {

namespace {

constexpr std::uint32_t kStreamCells = 0;
constexpr std::uint32_t kStreamNoiseRest = 4;

double sinc(double x) {
  if (std::fabs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

int next_5smooth(int n) {
  for (int v = n;; ++v) {
    int r = v;
    for (int p : {2, 3, 5})
      while (r % p == 0) r /= p;
    if (r == 1) return v;
  }
}

struct JackknifeStat {
  double value = 0.0;
  double stderr_ = 0.0;
};

double mean_of(std::span<const double> x) {
  return pairwise_sum(x) / double(x.size());
}

JackknifeStat jackknife_covariance(std::span<const double> x,
                                   std::span<const double> y) {
  const std::int64_t n = std::int64_t(x.size());
  const double mx = mean_of(x), my = mean_of(y);
  std::vector<double> uv(n);
  for (std::int64_t i = 0; i < n; ++i) uv[i] = (x[i] - mx) * (y[i] - my);
  const double suv = pairwise_sum(uv);
  JackknifeStat out;
  out.value = suv / double(n - 1);
  std::vector<double> loo(n);
  for (std::int64_t i = 0; i < n; ++i)
    loo[i] = (suv - uv[i] - uv[i] / double(n - 1)) / double(n - 2);
  const double lm = mean_of(loo);
  double ss = 0.0;
  for (double v : loo) ss += (v - lm) * (v - lm);
  out.stderr_ = std::sqrt(std::max(0.0, ss * double(n - 1) / double(n)));
  return out;
}

/// Jackknife for a ratio of variances over paired samples.
JackknifeStat jackknife_var_ratio(std::span<const double> num,
                                  std::span<const double> den) {
  const std::int64_t n = std::int64_t(num.size());
  const double mn = mean_of(num), md = mean_of(den);
  std::vector<double> a(n), b(n);
  for (std::int64_t i = 0; i < n; ++i) {
    a[i] = (num[i] - mn) * (num[i] - mn);
    b[i] = (den[i] - md) * (den[i] - md);
  }
  const double sa = pairwise_sum(a), sb = pairwise_sum(b);
  JackknifeStat out;
  out.value = sa / sb;
  std::vector<double> loo(n);
  for (std::int64_t i = 0; i < n; ++i)
    loo[i] = (sa - a[i]) / std::max(1e-300, sb - b[i]);
  const double lm = mean_of(loo);
  double ss = 0.0;
  for (double v : loo) ss += (v - lm) * (v - lm);
  out.stderr_ = std::sqrt(std::max(0.0, ss * double(n - 1) / double(n)));
  return out;
}

// Cyclic Jacobi diagonalization of a dense symmetric matrix (small n).
void jacobi_eigen(std::vector<double>& a, int n, std::vector<double>& evals,
                  std::vector<double>& evecs) {
  evecs.assign(std::size_t(n) * n, 0.0);
  for (int i = 0; i < n; ++i) evecs[std::size_t(i) * n + i] = 1.0;
  auto A = [&](int i, int j) -> double& { return a[std::size_t(i) * n + j]; };
  auto V = [&](int i, int j) -> double& {
    return evecs[std::size_t(i) * n + j];
  };
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += A(i, j) * A(i, j);
    if (off < 1e-28) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::fabs(A(p, q)) < 1e-300) continue;
        const double theta = 0.5 * (A(q, q) - A(p, p)) / A(p, q);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  evals.resize(n);
  for (int i = 0; i < n; ++i) evals[i] = A(i, i);
}

std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

SpectralGrid auto_spectral_grid(const OpaParams& params, const GridSpec& grid,
                                const McOptions& opts) {
  const double lobe_q = 2.0 * M_PI / grid.delta;
  const double lobe_t = 2.0 * M_PI / grid.t_window;
  SpectralGrid g;
  g.dq = opts.dq > 0.0 ? opts.dq : std::min(lobe_q / 6.0, 0.125);
  g.dw = opts.dw > 0.0 ? opts.dw : std::min(lobe_t / 6.0, 0.125);

  const double band_d = 2.0 * params.sigma + std::fabs(params.delta0) + 3.0;
  const double q_band = std::sqrt(band_d / params.diffraction);
  double w_band = 0.0;
  for (double s : {1.0, -1.0}) {
    for (double rhs : {band_d, -band_d}) {
      const double a = params.gvd, b = s * params.gvm,
                   c = params.delta0 - rhs;
      if (a == 0.0) {
        if (b != 0.0) w_band = std::max(w_band, std::fabs(c / b));
      } else {
        const double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
          const double sq = std::sqrt(disc);
          w_band = std::max({w_band, std::fabs((-b + sq) / (2.0 * a)),
                             std::fabs((-b - sq) / (2.0 * a))});
        }
      }
    }
  }

  const double q_ext = opts.q_extent > 0.0
                           ? opts.q_extent
                           : std::max(q_band + 2.0 * lobe_q, 3.0 * lobe_q);
  const double w_ext = opts.w_extent > 0.0
                           ? opts.w_extent
                           : std::max(w_band + 2.0 * lobe_t, 3.0 * lobe_t);
  g.mq = std::max(1, int(std::ceil(q_ext / g.dq)));
  g.mw = std::max(1, int(std::ceil(w_ext / g.dw)));
  if (g.cells() > std::size_t(6e7))
    throw ConfigError("mc", "spectral grid would exceed 6e7 cells; set dq/dw "
                            "or extents explicitly");
  return g;
}

EprSource::EprSource(const OpaParams& params, const SpectralGrid& grid)
    : params_(params), grid_(grid) {
  params_.validate();
  const std::size_t n = grid.cells();
  u_.resize(n);
  v_.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    const PairCoeffs pc = bogoliubov(params_, grid.point(c));
    u_[c] = pc.u1;
    v_[c] = pc.v1;
  }
}

SpectralSample EprSource::sample(std::uint64_t seed,
                                 std::uint64_t index) const {
  SpectralSample s;
  s.seed = seed;
  s.index = index;
  const std::size_t n = grid_.cells();
  s.e1.resize(n);
  s.e2.resize(n);
  const double amp = 0.5 / std::sqrt(grid_.cell_volume());
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t m = grid_.mirror(c);
    if (m < c) continue;
    const NormalQuad qc = normals_at(seed, index, kStreamCells, c);
    const std::complex<double> a1c{amp * qc.n0, amp * qc.n1};
    const std::complex<double> a2c{amp * qc.n2, amp * qc.n3};
    if (m == c) {
      s.e1[c] = u_[c] * a1c + v_[c] * std::conj(a2c);
      s.e2[c] = u_[c] * a2c + v_[c] * std::conj(a1c);
      continue;
    }
    const NormalQuad qm = normals_at(seed, index, kStreamCells, m);
    const std::complex<double> a1m{amp * qm.n0, amp * qm.n1};
    const std::complex<double> a2m{amp * qm.n2, amp * qm.n3};
    // Pair at c couples {a1(c), a2(m)}; pair at m couples {a1(m), a2(c)}.
    s.e1[c] = u_[c] * a1c + v_[c] * std::conj(a2m);
    s.e2[m] = u_[c] * a2m + v_[c] * std::conj(a1c);
    s.e1[m] = u_[m] * a1m + v_[m] * std::conj(a2c);
    s.e2[c] = u_[m] * a2c + v_[m] * std::conj(a1m);
  }
  return s;
}

SpectralSample sample_epr(const OpaParams& params, const SpectralGrid& grid,
                          std::uint64_t seed, std::uint64_t index) {
  return EprSource(params, grid).sample(seed, index);
}

LatticeSpec lattice_for(const SpectralGrid& grid, double min_xy, double min_t,
                        int points_per) {
  LatticeSpec lat;
  const double lx = 2.0 * M_PI / grid.dq;
  const double lt = 2.0 * M_PI / grid.dw;
  const double want_dx = min_xy / points_per;
  const double want_dt = min_t / points_per;
  lat.nx = next_5smooth(std::max<int>(grid.nq(), int(std::ceil(lx / want_dx))));
  lat.ny = lat.nx;
  lat.nt = next_5smooth(std::max<int>(grid.nw(), int(std::ceil(lt / want_dt))));
  lat.dx = lx / lat.nx;
  lat.dy = lx / lat.ny;
  lat.dt = lt / lat.nt;
  return lat;
}

NoiseField synthesize_spectrum(std::span<const std::complex<double>> amps,
                               const SpectralGrid& grid,
                               const LatticeSpec& lat) {
  if (amps.size() != grid.cells())
    throw std::invalid_argument("spectrum size does not match grid");
  if (lat.nx < grid.nq() || lat.ny < grid.nq() || lat.nt < grid.nw())
    throw GridTooCoarse("lattice smaller than the spectral grid");

  NoiseField field;
  field.lat = lat;
  std::vector<std::complex<double>> in(lat.sites(), {0.0, 0.0});
  field.values.assign(lat.sites(), {0.0, 0.0});

  const double norm =
      std::pow(2.0 * M_PI, -1.5) * grid.cell_volume();
  for (std::size_t c = 0; c < amps.size(); ++c) {
    if (amps[c] == std::complex<double>{}) continue;
    const int n = grid.nq();
    const int kx = int(c % n) - grid.mq;
    const int ky = int((c / n) % n) - grid.mq;
    const int kw = int(c / (std::size_t(n) * n)) - grid.mw;
    const int ix = kx >= 0 ? kx : lat.nx + kx;
    const int iy = ky >= 0 ? ky : lat.ny + ky;
    const int it = ((-kw) % lat.nt + lat.nt) % lat.nt;
    // Half-cell offsets: samples sit at (n + 1/2) * step.
    const double phase = kx * grid.dq * lat.dx * 0.5 +
                         ky * grid.dq * lat.dy * 0.5 -
                         kw * grid.dw * lat.dt * 0.5;
    in[(std::size_t(it) * lat.ny + iy) * lat.nx + ix] =
        amps[c] * std::polar(norm, phase);
  }

  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_plan plan = fftw_plan_dft_3d(
        lat.nt, lat.ny, lat.nx, reinterpret_cast<fftw_complex*>(in.data()),
        reinterpret_cast<fftw_complex*>(field.values.data()), FFTW_BACKWARD,
        FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }
  return field;
}

std::vector<std::complex<double>> noise_spectrum(const SpectralSample& sample,
                                                 const SpectralGrid& grid) {
  std::vector<std::complex<double>> f(grid.cells());
  for (std::size_t c = 0; c < f.size(); ++c)
    f[c] = sample.e2[c] + std::conj(sample.e1[grid.mirror(c)]);
  return f;
}

NoiseField synthesize_noise(const SpectralSample& sample,
                            const SpectralGrid& grid, const LatticeSpec& lat) {
  return synthesize_spectrum(noise_spectrum(sample, grid), grid, lat);
}

namespace {

// Overlap weights of lattice cells [n*step, (n+1)*step) with [lo, hi].
void axis_weights(double lo, double hi, double step, int count,
                  std::vector<std::pair<int, double>>& out) {
  const double extent = step * count;
  if (lo < -1e-9 * extent || hi > extent * (1.0 + 1e-9))
    throw GridTooCoarse("pixel layout exceeds one periodic lattice extent");
  out.clear();
  const int first = std::max(0, int(std::floor(lo / step)));
  const int last = std::min(count - 1, int(std::ceil(hi / step)));
  for (int n = first; n <= last; ++n) {
    const double w = std::min(hi, (n + 1) * step) - std::max(lo, n * step);
    if (w > 0.0) out.push_back({n, w});
  }
}

}  // namespace

std::vector<std::complex<double>> coarse_grain(const NoiseField& field,
                                               const GridSpec& grid) {
  grid.validate();
  const LatticeSpec& lat = field.lat;
  if (lat.dx > grid.delta / 8.0 * (1.0 + 1e-12) ||
      lat.dy > grid.delta / 8.0 * (1.0 + 1e-12))
    throw GridTooCoarse("lattice does not resolve the pixel edge with >= 8 points");
  if (lat.dt > grid.t_window / 8.0 * (1.0 + 1e-12))
    throw GridTooCoarse("lattice does not resolve the time bin with >= 8 points");

  std::vector<std::complex<double>> out(grid.cells());
  const double inv_norm =
      1.0 / std::sqrt(grid.delta * grid.delta * grid.t_window);
  std::vector<std::pair<int, double>> wx, wy, wt;
  for (int it = 0; it < grid.nt; ++it) {
    const double tc = grid.bin_t(it);
    axis_weights(tc - 0.5 * grid.t_window, tc + 0.5 * grid.t_window, lat.dt,
                 lat.nt, wt);
    for (int jy = 0; jy < grid.ny; ++jy) {
      const double yc = grid.pixel_y(jy);
      axis_weights(yc - 0.5 * grid.delta, yc + 0.5 * grid.delta, lat.dy,
                   lat.ny, wy);
      for (int jx = 0; jx < grid.nx; ++jx) {
        const double xc = grid.pixel_x(jx);
        axis_weights(xc - 0.5 * grid.delta, xc + 0.5 * grid.delta, lat.dx,
                     lat.nx, wx);
        std::complex<double> acc{0.0, 0.0};
        for (const auto& [lt_i, tw] : wt)
          for (const auto& [ly, yw] : wy) {
            std::complex<double> row{0.0, 0.0};
            const std::size_t base =
                (std::size_t(lt_i) * lat.ny + ly) * lat.nx;
            for (const auto& [lx, xw] : wx)
              row += xw * field.values[base + lx];
            acc += tw * yw * row;
          }
        out[(std::size_t(it) * grid.ny + jy) * grid.nx + jx] =
            acc * inv_norm;
      }
    }
  }
  return out;
}

PixelProjector::PixelProjector(const SpectralGrid& grid, const GridSpec& gspec,
                               std::span<const CellIndex> cells,
                               std::span<const std::uint32_t> kept)
    : cells_(cells.begin(), cells.end()), kept_(kept.begin(), kept.end()) {
  const double norm = std::pow(2.0 * M_PI, -1.5) *
                      std::sqrt(gspec.delta * gspec.delta * gspec.t_window) *
                      grid.cell_volume();
  weights_.resize(cells_.size());
  for (std::size_t p = 0; p < cells_.size(); ++p) {
    const CellIndex& cell = cells_[p];
    const double xj = gspec.pixel_x(cell.jx);
    const double yj = gspec.pixel_y(cell.jy);
    const double ti = gspec.bin_t(cell.it);
    auto& w = weights_[p];
    w.resize(kept_.size());
    for (std::size_t i = 0; i < kept_.size(); ++i) {
      const SpectralPoint pt = grid.point(kept_[i]);
      const double s = sinc(0.5 * pt.qx * gspec.delta) *
                       sinc(0.5 * pt.qy * gspec.delta) *
                       sinc(0.5 * pt.omega * gspec.t_window);
      w[i] = std::polar(norm * s,
                        pt.qx * xj + pt.qy * yj - pt.omega * ti);
    }
  }
  cell_volume_ = grid.cell_volume();
}

void PixelProjector::project(std::span<const std::complex<double>> amps,
                             std::complex<double>* out) const {
  for (std::size_t p = 0; p < weights_.size(); ++p) {
    const auto& w = weights_[p];
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t i = 0; i < w.size(); ++i) acc += amps[i] * w[i];
    out[p] = acc;
  }
}

std::vector<double> PixelProjector::vacuum_gram() const {
  const int n = pixels();
  std::vector<double> gram(std::size_t(n) * n, 0.0);
  for (int p = 0; p < n; ++p) {
    for (int q = p; q < n; ++q) {
      std::complex<double> acc{0.0, 0.0};
      for (std::size_t i = 0; i < kept_.size(); ++i)
        acc += weights_[p][i] * std::conj(weights_[q][i]);
      const double value = acc.real() / cell_volume_;
      gram[std::size_t(p) * n + q] = value;
      gram[std::size_t(q) * n + p] = value;
    }
  }
  return gram;
}

VacuumCompletion::VacuumCompletion(const PixelProjector& proj,
                                   const GridSpec& gspec,
                                   std::span<const CellIndex> cells) {
  n_ = proj.pixels();
  std::vector<double> rest = proj.vacuum_gram();
  double trace_exact = 0.0;
  for (int p = 0; p < n_; ++p) {
    for (int q = 0; q < n_; ++q) {
      const double dx = (cells[p].jx - cells[q].jx) * gspec.delta;
      const double dy = (cells[p].jy - cells[q].jy) * gspec.delta;
      const double dt = (cells[p].it - cells[q].it) * gspec.t_window;
      const double exact =
          0.5 * classical_covariance(gspec, dx, dy, dt);
      if (p == q) trace_exact += exact;
      rest[std::size_t(p) * n_ + q] = exact - rest[std::size_t(p) * n_ + q];
    }
  }
  std::vector<double> evals, evecs;
  jacobi_eigen(rest, n_, evals, evecs);
  for (int m = 0; m < n_; ++m) {
    if (evals[m] < 0.0) {
      clipped_ += -evals[m];
      evals[m] = 0.0;
    }
  }
  if (clipped_ > 0.05 * std::max(trace_exact, 1e-12))
    throw ConfigError("mc",
                      "vacuum completion covariance strongly indefinite; "
                      "refine dq/dw");
  factor_.assign(std::size_t(n_) * n_, 0.0);
  for (int p = 0; p < n_; ++p)
    for (int m = 0; m < n_; ++m)
      factor_[std::size_t(p) * n_ + m] =
          evecs[std::size_t(p) * n_ + m] * std::sqrt(evals[m]);
  active_ = true;
}

void VacuumCompletion::add_draw(std::uint64_t seed, std::uint64_t sample,
                                std::uint32_t stream, double scale,
                                std::complex<double>* amps) const {
  if (!active_ || n_ == 0) return;
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  std::vector<std::complex<double>> z(n_);
  for (int m = 0; m < n_; m += 2) {
    const NormalQuad q = normals_at(seed, sample, stream, std::uint64_t(m / 2));
    z[m] = std::complex<double>(q.n0, q.n1) * inv_sqrt2;
    if (m + 1 < n_) z[m + 1] = std::complex<double>(q.n2, q.n3) * inv_sqrt2;
  }
  for (int p = 0; p < n_; ++p) {
    std::complex<double> acc{0.0, 0.0};
    for (int m = 0; m < n_; ++m) acc += factor_[std::size_t(p) * n_ + m] * z[m];
    amps[p] += scale * acc;
  }
}

PairSqueezingResult pair_squeezing_check(const OpaParams& params,
                                         const SpectralPoint& pt,
                                         std::int64_t n_samples,
                                         std::uint64_t seed) {
  if (n_samples < 1000)
    throw ConfigError("mc.n_samples", "pair_squeezing_check needs >= 1000");
  params.validate();
  const PairCoeffs pc = bogoliubov(params, pt);
  const EllipseParams el = ellipse(params, 1, pt);
  const double psi = el.psi;

  std::vector<double> sq_minor(n_samples), sq_major(n_samples),
      vac_minor(n_samples), vac_major(n_samples);
  for (std::int64_t i = 0; i < n_samples; ++i) {
    const NormalQuad q = normals_at(seed, std::uint64_t(i), kStreamCells, 0);
    const std::complex<double> a1{0.5 * q.n0, 0.5 * q.n1};
    const std::complex<double> a2{0.5 * q.n2, 0.5 * q.n3};
    const std::complex<double> s =
        (pc.u1 * a1 + pc.v1 * std::conj(a2)) +
        (pc.u2m * a2 + pc.v2m * std::conj(a1));
    const std::complex<double> sv = a1 + a2;  // same draws at sigma = 0
    sq_major[i] = quadrature_record(s, psi);
    sq_minor[i] = quadrature_record(s, psi + 0.5 * M_PI);
    vac_major[i] = quadrature_record(sv, psi);
    vac_minor[i] = quadrature_record(sv, psi + 0.5 * M_PI);
  }

  auto variance = [](std::span<const double> x) {
    const double m = mean_of(x);
    double acc = 0.0;
    for (double v : x) acc += (v - m) * (v - m);
    return acc / double(x.size() - 1);
  };

  PairSqueezingResult out;
  out.minor_var = variance(sq_minor);
  out.major_var = variance(sq_major);
  out.vac_minor = variance(vac_minor);
  out.vac_major = variance(vac_major);
  const JackknifeStat rmin = jackknife_var_ratio(sq_minor, vac_minor);
  const JackknifeStat rmaj = jackknife_var_ratio(sq_major, vac_major);
  out.minor_ratio = rmin.value;
  out.minor_ratio_stderr = rmin.stderr_;
  out.major_ratio = rmaj.value;
  out.major_ratio_stderr = rmaj.stderr_;
  return out;
}

NoiseEnsemble::NoiseEnsemble(const OpaParams& params, const GridSpec& grid,
                             std::span<const CellIndex> cells,
                             std::int64_t n_samples, std::uint64_t seed,
                             const McOptions& opts)
    : grid_(grid),
      cells_(cells.begin(), cells.end()),
      n_samples_(n_samples),
      seed_(seed) {
  params.validate();
  grid.validate();
  if (n_samples_ < 2) throw ConfigError("mc.n_samples", "must be >= 2");
  for (const CellIndex& c : cells_) {
    if (c.jx < 0 || c.jx >= grid.nx || c.jy < 0 || c.jy >= grid.ny ||
        c.it < 0 || c.it >= grid.nt)
      throw ConfigError("pairs", "cell index outside grid");
  }
  fingerprint_ = covariance_fingerprint(params, grid, nullptr);

  const SpectralGrid sg = auto_spectral_grid(params, grid, opts);
  source_ = std::make_shared<EprSource>(params, sg);

  // Squeezing mask: cells whose largest possible contribution to any
  // covariance entry stays below the budget are treated as pure vacuum and
  // folded into the completion term.
  const std::size_t total = sg.cells();
  std::vector<std::uint32_t> kept;
  {
    const double cv = sg.cell_volume();
    const double prefactor = 2.0 * std::pow(2.0 * M_PI, -3.0) * grid.delta *
                             grid.delta * grid.t_window * cv;
    // Mirror pairs are masked or kept together so the estimator always sees
    // the even omega-part of G.
    std::vector<std::pair<double, std::uint32_t>> pair_signal;
    pair_signal.reserve(total / 2 + 1);
    for (std::size_t c = 0; c < total; ++c) {
      const std::size_t m = sg.mirror(c);
      if (m < c) continue;
      const std::complex<double> alpha =
          source_->u(m) + std::conj(source_->v(m));
      const std::complex<double> alpham =
          source_->u(c) + std::conj(source_->v(c));
      const double gbar = 0.5 * (std::norm(alpha) + std::norm(alpham));
      const SpectralPoint pt = sg.point(c);
      const double s = sinc(0.5 * pt.qx * grid.delta) *
                       sinc(0.5 * pt.qy * grid.delta) *
                       sinc(0.5 * pt.omega * grid.t_window);
      const double cell_bound = prefactor * s * s * std::fabs(gbar - 1.0);
      pair_signal.push_back(
          {m == c ? cell_bound : 2.0 * cell_bound, std::uint32_t(c)});
    }
    std::sort(pair_signal.begin(), pair_signal.end());
    double dropped = 0.0;
    std::size_t first_kept = 0;
    while (first_kept < pair_signal.size() &&
           dropped + pair_signal[first_kept].first <= opts.mask_budget) {
      dropped += pair_signal[first_kept].first;
      ++first_kept;
    }
    mask_bias_bound_ = dropped;
    kept.reserve(2 * (pair_signal.size() - first_kept));
    for (std::size_t i = first_kept; i < pair_signal.size(); ++i) {
      const std::uint32_t c = pair_signal[i].second;
      const std::uint32_t m = std::uint32_t(sg.mirror(c));
      kept.push_back(c);
      if (m != c) kept.push_back(m);
    }
    std::sort(kept.begin(), kept.end());
  }
  kept_count_ = kept.size();

  PixelProjector proj(sg, grid, cells_, kept);
  std::unique_ptr<VacuumCompletion> completion;
  if (opts.vacuum_completion)
    completion = std::make_unique<VacuumCompletion>(proj, grid, cells_);

  // Compact per-kept-cell tables for the sampler.
  const std::size_t nk = kept.size();
  std::vector<std::uint32_t> mirror_of(nk);
  std::vector<std::complex<double>> um(nk), vm(nk);
  for (std::size_t i = 0; i < nk; ++i) {
    const std::size_t m = sg.mirror(kept[i]);
    mirror_of[i] = std::uint32_t(m);
    um[i] = source_->u(m);
    vm[i] = source_->v(m);
  }
  // Slot of the mirrored cell inside `kept`, or npos when it was masked out.
  constexpr std::uint32_t kNone = 0xffffffffu;
  std::vector<std::uint32_t> mirror_slot(nk, kNone);
  for (std::size_t i = 0; i < nk; ++i) {
    const auto it =
        std::lower_bound(kept.begin(), kept.end(), mirror_of[i]);
    if (it != kept.end() && *it == mirror_of[i])
      mirror_slot[i] = std::uint32_t(it - kept.begin());
  }

  const int npix = int(cells_.size());
  amps_.assign(std::size_t(n_samples_) * npix, {0.0, 0.0});
  const double amp = 0.5 / std::sqrt(sg.cell_volume());

  parallel_chunks(n_samples_, opts.threads, [&](std::int64_t b, std::int64_t e) {
    std::vector<std::complex<double>> f(nk);
    for (std::int64_t s = b; s < e; ++s) {
      // Fill f over kept cells; mirror pairs share their Philox blocks.
      for (std::size_t i = 0; i < nk; ++i) {
        const std::uint32_t c = kept[i];
        const std::uint32_t m = mirror_of[i];
        const std::uint32_t j = mirror_slot[i];
        if (j != kNone && m < c) continue;  // handled from the partner slot
        const NormalQuad qc =
            normals_at(seed_, std::uint64_t(s), kStreamCells, c);
        const NormalQuad qm =
            m == c ? qc : normals_at(seed_, std::uint64_t(s), kStreamCells, m);
        const std::complex<double> a1c{amp * qc.n0, amp * qc.n1};
        const std::complex<double> a2c{amp * qc.n2, amp * qc.n3};
        const std::complex<double> a1m{amp * qm.n0, amp * qm.n1};
        const std::complex<double> a2m{amp * qm.n2, amp * qm.n3};
        {
          // f(c) = e2(c) + conj(e1(-c)) built from the pair at -c.
          const std::complex<double> e2c = um[i] * a2c + vm[i] * std::conj(a1m);
          const std::complex<double> e1m = um[i] * a1m + vm[i] * std::conj(a2c);
          f[i] = e2c + std::conj(e1m);
        }
        if (j != kNone && m != c) {
          const std::complex<double> e2m =
              source_->u(c) * a2m + source_->v(c) * std::conj(a1c);
          const std::complex<double> e1c =
              source_->u(c) * a1c + source_->v(c) * std::conj(a2m);
          f[j] = e2m + std::conj(e1c);
        }
      }
      std::complex<double>* out = &amps_[std::size_t(s) * npix];
      proj.project(f, out);
      if (completion)
        completion->add_draw(seed_, std::uint64_t(s), kStreamNoiseRest, 1.0,
                             out);
    }
  });
}

CovarianceTable NoiseEnsemble::covariance(std::span<const CellPair> pairs,
                                          double phi) const {
  auto slot_of = [&](const CellIndex& c) {
    for (std::size_t i = 0; i < cells_.size(); ++i)
      if (cells_[i] == c) return int(i);
    throw ConfigError("pairs", "cell not present in the ensemble");
  };

  const std::complex<double> rot = std::polar(1.0, -phi);
  const int npix = int(cells_.size());
  CovarianceTable table;
  table.method = CovarianceTable::Method::kMonteCarlo;
  table.fingerprint = fingerprint_;
  std::vector<double> x(n_samples_), y(n_samples_);
  for (const auto& pr : pairs) {
    const int pa = slot_of(pr.first);
    const int pb = slot_of(pr.second);
    for (std::int64_t s = 0; s < n_samples_; ++s) {
      x[s] = 2.0 * std::real(amps_[std::size_t(s) * npix + pa] * rot);
      y[s] = 2.0 * std::real(amps_[std::size_t(s) * npix + pb] * rot);
    }
    const JackknifeStat st = jackknife_covariance(x, y);
    CovEntry e;
    e.a = pr.first;
    e.b = pr.second;
    e.value = st.value;
    e.stderr_ = st.stderr_;
    table.entries.push_back(e);
  }
  return table;
}

CovarianceTable estimate_covariance(const OpaParams& params,
                                    const GridSpec& grid,
                                    std::span<const CellPair> pairs,
                                    double phi, std::int64_t n_samples,
                                    std::uint64_t seed,
                                    const McOptions& opts) {
  if (n_samples < 100) throw ConfigError("mc.n_samples", "must be >= 100");
  std::vector<CellIndex> cells;
  for (const auto& pr : pairs) {
    for (const CellIndex& c : {pr.first, pr.second}) {
      if (std::find(cells.begin(), cells.end(), c) == cells.end())
        cells.push_back(c);
    }
  }
  const NoiseEnsemble ens(params, grid, cells, n_samples, seed, opts);
  return ens.covariance(pairs, phi);
}

}  // namespace holotel

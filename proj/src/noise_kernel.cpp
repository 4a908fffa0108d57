#include "holotel/noise_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "holotel/csv.hpp"
#include "holotel/errors.hpp"
#include "holotel/quadrature.hpp"

namespace holotel {

namespace {

double sinc(double x) {
  if (std::fabs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

double tri(double u) { return std::max(0.0, 1.0 - std::fabs(u)); }

// One-axis spatial window (delta/2pi) sinc^2(q delta/2); the 2-D window of
// window_spatial factorizes into two of these.
double window_axis(double delta, double q) {
  const double s = sinc(0.5 * q * delta);
  return delta / (2.0 * M_PI) * s * s;
}

/// Evaluates the correction integrand pieces for one (params, grid, comp)
/// set. All members are immutable after construction; evaluation is pure.
class CorrectionEngine {
 public:
  CorrectionEngine(const OpaParams& params, const GridSpec& grid,
                   const CompensationProfile* comp,
                   const QuadratureOptions& opts)
      : p_(params), grid_(grid), comp_(comp), opts_(opts) {
    lobe_q_ = 2.0 * M_PI / grid.delta;
    lobe_t_ = 2.0 * M_PI / grid.t_window;
    omega_independent_ = p_.gvm == 0.0 && p_.gvd == 0.0;
  }

  struct Value {
    double value = 0.0;
    double error = 0.0;
  };

  /// Correction term 2*Int B B cos (G-1) for center offsets (dx, dy, dt),
  /// with total absolute error target `abs_target`.
  Value correction(double dx, double dy, double dt, double abs_target) const;

 private:
  // Even part in omega of G(q,.) - 1 (the only part the cosine kernel sees).
  double gbar_minus1(double q2, double omega) const {
    return 0.5 * (green_at(q2, omega) + green_at(q2, -omega)) - 1.0;
  }

  double green_at(double q2, double omega) const {
    EllipseParams e = ellipse(p_, 2, {std::sqrt(q2), 0.0, omega});
    if (comp_) e = apply_compensation(e, *comp_, omega);
    return green_function(e);
  }

  // Mismatch of the pair feeding field 2 at (q, +-omega):
  // c(omega) - eta q^2 with c(omega) = delta0 -+ gvm*omega + gvd*omega^2.
  double c_plus(double omega) const {
    return p_.delta0 - p_.gvm * omega + p_.gvd * omega * omega;
  }
  double c_minus(double omega) const {
    return p_.delta0 + p_.gvm * omega + p_.gvd * omega * omega;
  }

  // |q| values where either branch crosses the band edges |D| = 2s.
  void band_roots_q2(double omega, std::vector<double>& out) const {
    const double two_sigma = 2.0 * p_.sigma;
    for (double c : {c_plus(omega), c_minus(omega)}) {
      for (double edge : {c - two_sigma, c + two_sigma, c}) {
        if (edge > 0.0) out.push_back(edge / p_.diffraction);
      }
    }
  }

  double q_upper(double omega, double abs_eps) const {
    // Band coverage on both branches plus window-tail control: beyond the
    // band, |G-1| <= ~4*sigma/|D|, and the per-axis window envelope is
    // 2/(pi*delta*q^2), so the residual tail is 8 sigma/(3 pi delta eta Q^3).
    double band_q2 = 0.0;
    std::vector<double> roots;
    band_roots_q2(omega, roots);
    for (double r : roots) band_q2 = std::max(band_q2, r);
    const double pad_D = 8.0 * p_.sigma + 8.0;
    const double banded =
        std::sqrt(band_q2 + pad_D / p_.diffraction);
    const double eps = std::max(abs_eps, 1e-12);
    const double tail = std::cbrt(
        8.0 * std::max(p_.sigma, 1e-3) /
        (3.0 * M_PI * grid_.delta * p_.diffraction * eps));
    return std::max({banded + 2.0 * lobe_q_, 4.0 * lobe_q_, tail});
  }

  double inner_qy(double qx, double omega, double dy, double qy_max,
                  double abs_eps) const;
  double middle_qx(double omega, double dx, double dy, double abs_eps) const;

  const OpaParams& p_;
  const GridSpec& grid_;
  const CompensationProfile* comp_;
  const QuadratureOptions& opts_;
  double lobe_q_ = 0.0;
  double lobe_t_ = 0.0;
  bool omega_independent_ = false;
};

double CorrectionEngine::inner_qy(double qx, double omega, double dy,
                                  double qy_max, double abs_eps) const {
  const double qx2 = qx * qx;
  std::vector<double> brk;
  for (int j = 1; j <= 6; ++j) brk.push_back(j * lobe_q_);
  std::vector<double> roots;
  band_roots_q2(omega, roots);
  for (double q2 : roots) {
    const double rem = q2 - qx2;
    if (rem > 0.0) brk.push_back(std::sqrt(rem));
  }
  brk.push_back(0.5 * qy_max);

  auto f = [&](double qy) {
    return window_axis(grid_.delta, qy) * std::cos(qy * dy) *
           gbar_minus1(qx2 + qy * qy, omega);
  };
  const QuadResult r = gk_adaptive(f, 0.0, qy_max, brk, opts_.rel_tol / 3.0,
                                   abs_eps, opts_.max_subdiv);
  if (!r.converged) throw QuadratureNotConverged(r.error, abs_eps);
  return r.value;
}

double CorrectionEngine::middle_qx(double omega, double dx, double dy,
                                   double abs_eps) const {
  const double qmax = q_upper(omega, abs_eps);
  std::vector<double> brk;
  for (int j = 1; j <= 6; ++j) brk.push_back(j * lobe_q_);
  std::vector<double> roots;
  band_roots_q2(omega, roots);
  for (double q2 : roots) brk.push_back(std::sqrt(q2));
  brk.push_back(0.5 * qmax);

  // Inner-integral errors accumulate against the unit-mass outer window.
  const double inner_eps = 2.0 * abs_eps;
  auto f = [&](double qx) {
    return window_axis(grid_.delta, qx) * std::cos(qx * dx) *
           inner_qy(qx, omega, dy, qmax, inner_eps);
  };
  const QuadResult r = gk_adaptive(f, 0.0, qmax, brk, opts_.rel_tol / 3.0,
                                   abs_eps, opts_.max_subdiv);
  if (!r.converged) throw QuadratureNotConverged(r.error, abs_eps);
  return r.value;
}

CorrectionEngine::Value CorrectionEngine::correction(double dx, double dy,
                                                     double dt,
                                                     double abs_target) const {
  if (p_.sigma == 0.0) return {0.0, 0.0};
  dx = std::fabs(dx);
  dy = std::fabs(dy);
  dt = std::fabs(dt);

  // Whole-space integral reduces to 16x the positive octant with the even
  // omega-part of G; the outer temporal window integrates to 1/2 over the
  // half line.
  const double target_i = abs_target / 16.0;

  if (omega_independent_) {
    // G carries no omega dependence; the temporal integral is analytic:
    // Int_0^inf bt(O) cos(O dt) dO = tri(dt/T)/2.
    const double shape = 0.5 * tri(dt / grid_.t_window);
    if (shape == 0.0) return {0.0, 0.0};
    const double jq = middle_qx(0.0, dx, dy, target_i / (2.0 * shape));
    return {16.0 * shape * jq, abs_target};
  }

  // Temporal domain: bands at q=0 and probe-extended tail.
  double omega_band = 0.0;
  {
    // Roots of c_{+-}(omega) = +-2 sigma (quadratic in omega).
    const double two_sigma = 2.0 * p_.sigma;
    for (double s : {1.0, -1.0}) {
      for (double rhs : {two_sigma, -two_sigma}) {
        const double a = p_.gvd, b = -s * p_.gvm, c = p_.delta0 - rhs;
        if (a == 0.0) {
          if (b != 0.0) omega_band = std::max(omega_band, std::fabs(-c / b));
        } else {
          const double disc = b * b - 4.0 * a * c;
          if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            omega_band = std::max(
                {omega_band, std::fabs((-b + sq) / (2.0 * a)),
                 std::fabs((-b - sq) / (2.0 * a))});
          }
        }
      }
    }
  }

  const double j_eps = target_i / 2.0;  // inner 2-D integral error budget
  auto j_of = [&](double omega) { return middle_qx(omega, dx, dy, j_eps); };

  double w = std::max(omega_band * 1.1 + 4.0 * lobe_t_, 8.0 * lobe_t_);
  for (int probe = 0; probe < 12; ++probe) {
    const double tail_mass = 2.0 / (M_PI * grid_.t_window * w);
    const double j_tail = std::fabs(j_of(w));
    if (tail_mass * j_tail <= 0.2 * target_i) break;
    w *= 1.7;
  }

  double outer_value = 0.0, outer_error = 0.0;
  const double bt_mass = 0.5;
  std::vector<double> brk;
  {
    const int lobes = std::min<int>(64, int(w / lobe_t_));
    for (int j = 1; j <= lobes; ++j) brk.push_back(j * lobe_t_);
    for (double g = lobes * lobe_t_ * 2.0; g < w; g *= 2.0) brk.push_back(g);
    if (omega_band > 0.0 && omega_band < w) brk.push_back(omega_band);
  }
  auto bt = [&](double omega) { return window_temporal(grid_.t_window, omega); };

  if (opts_.outer == QuadratureOptions::Outer::kDirect) {
    auto h = [&](double omega) {
      return bt(omega) * std::cos(omega * dt) * j_of(omega);
    };
    const QuadResult r = gk_adaptive(h, 0.0, w, brk, opts_.rel_tol / 3.0,
                                     target_i / 2.0, opts_.max_subdiv);
    if (!r.converged) throw QuadratureNotConverged(16.0 * r.error, abs_target);
    outer_value = r.value;
    outer_error = r.error + bt_mass * j_eps;
  } else {
    // The inner 2-D integral J(omega) is smooth while the temporal window
    // oscillates; model J once, then integrate window*cos*model cheaply.
    const double fit_eps = target_i / (4.0 * bt_mass);
    const double split = std::clamp(
        std::max(omega_band * 1.05, 4.0 * lobe_t_), 0.0, 0.8 * w);
    std::vector<ChebyshevFit> fits;
    std::vector<std::pair<double, double>> ranges;
    if (split > 0.05 * w && split < 0.8 * w) {
      ranges = {{0.0, split}, {split, w}};
    } else {
      ranges = {{0.0, w}};
    }
    double fit_err = 0.0;
    for (auto [a, b] : ranges) {
      fits.push_back(ChebyshevFit::build(j_of, a, b, fit_eps, 513));
      if (!fits.back().converged())
        throw QuadratureNotConverged(fits.back().fit_error() * bt_mass * 16.0,
                                     abs_target);
      fit_err = std::max(fit_err, fits.back().fit_error());
    }
    auto j_model = [&](double omega) {
      for (std::size_t i = 0; i + 1 < ranges.size(); ++i)
        if (omega <= ranges[i].second) return fits[i](omega);
      return fits.back()(omega);
    };
    auto h = [&](double omega) {
      return bt(omega) * std::cos(omega * dt) * j_model(omega);
    };
    std::vector<double> brk2 = brk;
    for (auto [a, b] : ranges) brk2.push_back(b);
    const QuadResult r = gk_adaptive(h, 0.0, w, brk2, opts_.rel_tol / 3.0,
                                     target_i / 4.0, opts_.max_subdiv);
    if (!r.converged) throw QuadratureNotConverged(16.0 * r.error, abs_target);
    outer_value = r.value;
    outer_error = r.error + bt_mass * (fit_err + j_eps);
  }

  return {16.0 * outer_value, 16.0 * outer_error};
}

}  // namespace

double green_function(const EllipseParams& e) {
  const double c = std::cos(e.psi), s = std::sin(e.psi);
  return std::exp(2.0 * e.r) * c * c + std::exp(-2.0 * e.r) * s * s;
}

double window_spatial(double delta, double qx, double qy) {
  const double sx = sinc(0.5 * qx * delta);
  const double sy = sinc(0.5 * qy * delta);
  return delta * delta / (4.0 * M_PI * M_PI) * sx * sx * sy * sy;
}

double window_temporal(double t_window, double omega) {
  const double s = sinc(0.5 * omega * t_window);
  return t_window / (2.0 * M_PI) * s * s;
}

double classical_covariance(const GridSpec& grid, double dx, double dy,
                            double dt) {
  return 2.0 * tri(dx / grid.delta) * tri(dy / grid.delta) *
         tri(dt / grid.t_window);
}

std::uint64_t covariance_fingerprint(const OpaParams& params,
                                     const GridSpec& grid,
                                     const CompensationProfile* comp) {
  const double opa[9] = {params.sigma,      params.delta0, params.gvm,
                         params.gvd,        params.diffraction,
                         params.pump_phase, params.omega1, params.omega2,
                         params.omega_p};
  std::uint64_t h = fnv1a(opa, sizeof opa, 0);
  const double g[6] = {grid.delta, grid.t_window, grid.x0,
                       grid.y0,    grid.t0,       0.0};
  h = fnv1a(g, sizeof g, h);
  const int dims[3] = {grid.nx, grid.ny, grid.nt};
  h = fnv1a(dims, sizeof dims, h);
  if (comp && !comp->coeffs.empty())
    h = fnv1a(comp->coeffs.data(), comp->coeffs.size() * sizeof(double), h);
  return h;
}

CovarianceTable added_noise_covariance(const OpaParams& params,
                                       const GridSpec& grid,
                                       std::span<const CellPair> pairs,
                                       const CompensationProfile* comp,
                                       const QuadratureOptions& opts) {
  params.validate();
  grid.validate();
  if (!(opts.rel_tol > 0.0))
    throw ConfigError("quadrature.tol", "must be > 0");
  for (const auto& pr : pairs) {
    for (const CellIndex& c : {pr.first, pr.second}) {
      if (c.jx < 0 || c.jx >= grid.nx || c.jy < 0 || c.jy >= grid.ny ||
          c.it < 0 || c.it >= grid.nt)
        throw ConfigError("pairs", "cell index outside grid");
    }
  }

  const CorrectionEngine engine(params, grid, comp, opts);

  // Entries depend only on the unsigned center offsets; identical offsets
  // share one evaluation (translation invariance is structural).
  std::map<std::array<int, 3>, double> cache;
  auto correction_for = [&](const std::array<int, 3>& key) {
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const double dx = key[0] * grid.delta;
    const double dy = key[1] * grid.delta;
    const double dt = key[2] * grid.t_window;
    // Pilot pass fixes the magnitude scale for the final error target.
    const auto pilot = engine.correction(dx, dy, dt, 2e-3);
    const double c_est =
        classical_covariance(grid, dx, dy, dt) + pilot.value;
    const double target =
        opts.rel_tol * std::max(std::fabs(c_est), 0.02);
    double value = pilot.value;
    if (pilot.error > target)
      value = engine.correction(dx, dy, dt, target).value;
    cache.emplace(key, value);
    return value;
  };

  CovarianceTable table;
  table.method = CovarianceTable::Method::kQuadrature;
  table.fingerprint = covariance_fingerprint(params, grid, comp);
  table.entries.reserve(pairs.size());
  for (const auto& pr : pairs) {
    const std::array<int, 3> key = {std::abs(pr.first.jx - pr.second.jx),
                                    std::abs(pr.first.jy - pr.second.jy),
                                    std::abs(pr.first.it - pr.second.it)};
    CovEntry e;
    e.a = pr.first;
    e.b = pr.second;
    e.value = classical_covariance(grid, key[0] * grid.delta,
                                   key[1] * grid.delta,
                                   key[2] * grid.t_window) +
              correction_for(key);
    table.entries.push_back(e);
  }
  return table;
}

std::vector<ScanRow> diagonal_scan(const OpaParams& params,
                                   std::span<const double> d_values,
                                   std::span<const double> t_values,
                                   const CompensationProfile* comp,
                                   const QuadratureOptions& opts) {
  std::vector<ScanRow> rows;
  for (double t : t_values) {
    for (double d : d_values) {
      GridSpec g;
      g.delta = d;
      g.t_window = t;
      const CellPair diag{CellIndex{}, CellIndex{}};
      const auto table =
          added_noise_covariance(params, g, std::span(&diag, 1), comp, opts);
      rows.push_back({d, t, table.entries.front().value});
    }
  }
  return rows;
}

void write_scan_csv(std::ostream& out, const std::vector<ScanRow>& rows) {
  out << "delta,t,c_diag\n";
  for (const auto& r : rows)
    out << csv::num(r.delta) << ',' << csv::num(r.t) << ','
        << csv::num(r.c_diag) << '\n';
}

void write_covariance_csv(std::ostream& out, const CovarianceTable& table,
                          const GridSpec& grid) {
  const bool mc = table.method == CovarianceTable::Method::kMonteCarlo;
  out << (mc ? "j,i,jp,ip,c,stderr\n" : "j,i,jp,ip,c\n");
  for (const auto& e : table.entries) {
    const int j = e.a.jy * grid.nx + e.a.jx;
    const int jp = e.b.jy * grid.nx + e.b.jx;
    out << j << ',' << e.a.it << ',' << jp << ',' << e.b.it << ','
        << csv::num(e.value);
    if (mc) out << ',' << csv::num(e.stderr_);
    out << '\n';
  }
}

}  // namespace holotel

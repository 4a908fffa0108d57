#include "holotel/opa_model.hpp"

#include <cmath>
#include <ostream>

#include "holotel/csv.hpp"
#include "holotel/errors.hpp"

namespace holotel {

namespace {

// cosh(sqrt(x)) continued to x < 0 as cos(sqrt(-x)).
double cosh_sqrt(double x) {
  return x >= 0.0 ? std::cosh(std::sqrt(x)) : std::cos(std::sqrt(-x));
}

// sinh(sqrt(x))/sqrt(x) continued to x < 0 as sin(sqrt(-x))/sqrt(-x).
// Series near x = 0 keeps the band edge smooth.
double sinhc_sqrt(double x) {
  if (std::fabs(x) < 1e-10) return 1.0 + x / 6.0;
  const double s = std::sqrt(std::fabs(x));
  return x > 0.0 ? std::sinh(s) / s : std::sin(s) / s;
}

double reduce_angle_half_open(double psi) {
  psi = std::fmod(psi, M_PI);
  if (psi < 0.0) psi += M_PI;
  if (psi >= M_PI) psi -= M_PI;  // fmod rounding guard
  return psi;
}

}  // namespace

void OpaParams::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw ConfigError("opa.sigma", "must be finite and >= 0");
  if (!(diffraction > 0.0) || !std::isfinite(diffraction))
    throw ConfigError("opa.diffraction", "must be finite and > 0");
  for (auto [v, key] : {std::pair{delta0, "opa.delta0"},
                        std::pair{gvm, "opa.gvm"},
                        std::pair{gvd, "opa.gvd"},
                        std::pair{pump_phase, "opa.pump_phase"}}) {
    if (!std::isfinite(v)) throw ConfigError(key, "must be finite");
  }
  const double scale = std::max({std::fabs(omega1), std::fabs(omega2),
                                 std::fabs(omega_p), 1.0});
  if (std::fabs(omega1 + omega2 - omega_p) > 1e-9 * scale)
    throw ConfigError("opa.omega_p", "energy conservation requires omega1 + omega2 == omega_p");
}

double pair_mismatch(const OpaParams& p, const SpectralPoint& pt) {
  return p.delta0 + p.gvm * pt.omega + p.gvd * pt.omega * pt.omega -
         p.diffraction * (pt.qx * pt.qx + pt.qy * pt.qy);
}

PairCoeffs bogoliubov(const OpaParams& p, const SpectralPoint& pt) {
  const double d = pair_mismatch(p, pt);
  const double gamma_sq = p.sigma * p.sigma - 0.25 * d * d;
  const double ch = cosh_sqrt(gamma_sq);
  const double shc = sinhc_sqrt(gamma_sq);
  const std::complex<double> u =
      std::polar(1.0, 0.5 * d) * std::complex<double>(ch, -0.5 * d * shc);
  const std::complex<double> v =
      std::polar(1.0, p.pump_phase + 0.5 * d) * (p.sigma * shc);
  return {u, v, u, v};
}

EllipseParams ellipse(const OpaParams& p, int n, const SpectralPoint& pt) {
  // Field 1 at pt lives in the pair at pt; field 2 at pt in the pair at -pt.
  const PairCoeffs c = bogoliubov(p, n == 1 ? pt : negate(pt));
  const std::complex<double> big = n == 1 ? c.u1 : c.u2m;
  const std::complex<double> small = n == 1 ? c.v2m : c.v1;
  EllipseParams e;
  e.psi = reduce_angle_half_open(0.5 * std::arg(big * small));
  e.r = std::log(std::abs(big) + std::abs(small));
  return e;
}

std::vector<EllipseRow> ellipse_dispersion_scan(const OpaParams& params,
                                                double omega_min,
                                                double omega_max, int count) {
  std::vector<EllipseRow> rows;
  rows.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double omega =
        omega_min + (omega_max - omega_min) * double(i) / double(count - 1);
    const EllipseParams e = ellipse(params, 2, {0.0, 0.0, omega});
    rows.push_back({omega, e.psi, e.r, std::exp(e.r), std::exp(-e.r)});
  }
  return rows;
}

void write_ellipse_csv(std::ostream& out,
                       const std::vector<EllipseRow>& rows) {
  out << "omega,psi,r,major,minor\n";
  for (const auto& r : rows) {
    out << csv::num(r.omega) << ',' << csv::num(r.psi) << ',' << csv::num(r.r)
        << ',' << csv::num(r.major) << ',' << csv::num(r.minor) << '\n';
  }
}

}  // namespace holotel

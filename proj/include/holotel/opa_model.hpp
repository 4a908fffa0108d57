#pragma once

#include <complex>
#include <iosfwd>
#include <vector>

namespace holotel {

/// Dimensionless model of a type-I traveling-wave non-degenerate OPA.
/// Transverse frequencies are measured in 1/l_c (diffraction = 1 defines the
/// q scale), temporal frequencies in 1/T_c (gvm = 1 defines the Omega scale).
struct OpaParams {
  double sigma = 3.0;        ///< pump gain; r(0,0) = sigma at zero mismatch
  double delta0 = 0.0;       ///< collinear mismatch
  double gvm = 1.0;          ///< group-velocity-mismatch coefficient
  double gvd = 0.0;          ///< quadratic dispersion coefficient
  double diffraction = 1.0;  ///< transverse mismatch coefficient
  double pump_phase = M_PI;  ///< so psi_2(0,0) = pi/2 when delta0 = 0
  double omega1 = 1.0;       ///< signal carrier (arbitrary frequency units)
  double omega2 = 1.0;       ///< idler carrier
  double omega_p = 2.0;      ///< pump carrier; omega1 + omega2 == omega_p

  /// Throws ConfigError on violated invariants (key names "opa.*").
  void validate() const;
};

struct SpectralPoint {
  double qx = 0.0;
  double qy = 0.0;
  double omega = 0.0;
};

inline SpectralPoint negate(const SpectralPoint& p) {
  return {-p.qx, -p.qy, -p.omega};
}

/// Coefficients of the coupled pair {a1(q,O), a2(-q,-O)}:
///   e1(q,O)  = u1 * a1(q,O)  + v1 * a2†(-q,-O)
///   e2(-q,-O)= u2m * a2(-q,-O) + v2m * a1†(q,O)
/// Coefficients of e2 *at* (q,O) are obtained by evaluating at (-q,-O).
struct PairCoeffs {
  std::complex<double> u1, v1;
  std::complex<double> u2m, v2m;
};

/// Squeezing-ellipse orientation (radians, in [0,pi)) and degree (r >= 0).
struct EllipseParams {
  double psi = 0.0;
  double r = 0.0;
};

/// Pair phase mismatch D(q,O) = delta0 + gvm*O + gvd*O^2 - diffraction*|q|^2.
/// D evaluated at (q,O) governs the coupled pair {a1(q,O), a2(-q,-O)}.
double pair_mismatch(const OpaParams& params, const SpectralPoint& pt);

/// Bogoliubov coefficients of the coupled pair at `pt`. With
/// D = pair_mismatch and Gamma = sqrt(sigma^2 - D^2/4), continued through
/// imaginary Gamma via cosh(ix) = cos(x) and the limit-safe sinh(G)/G:
///   u = e^{iD/2} [cosh G - i (D/2) sinh(G)/G]
///   v = e^{i(pump_phase + D/2)} sigma sinh(G)/G
/// and u1 = u2m = u, v1 = v2m = v, so |u|^2 - |v|^2 = 1 identically.
PairCoeffs bogoliubov(const OpaParams& params, const SpectralPoint& pt);

/// Squeezing ellipse of field n (1 or 2) at `pt`:
///   psi_n = arg{U_n(pt) V_n'(-pt)} / 2 reduced to [0,pi),
///   e^{±r_n} = |U_n(pt)| ± |V_n'(-pt)|,
/// with both factors taken from the single coupled pair containing field n
/// at `pt`, so e^{r} e^{-r} = 1 exactly.
EllipseParams ellipse(const OpaParams& params, int n, const SpectralPoint& pt);

struct EllipseRow {
  double omega;
  double psi;
  double r;
  double major;  ///< e^{+r}
  double minor;  ///< e^{-r}
};

/// Uniform scan of the field-2 ellipse over omega at q = 0.
std::vector<EllipseRow> ellipse_dispersion_scan(const OpaParams& params,
                                                double omega_min,
                                                double omega_max, int count);

/// CSV header `omega,psi,r,major,minor`, full double precision, LF endings.
void write_ellipse_csv(std::ostream& out, const std::vector<EllipseRow>& rows);

}  // namespace holotel

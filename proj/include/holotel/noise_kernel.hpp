#pragma once

#include <iosfwd>
#include <optional>
#include <span>

#include "holotel/compensation.hpp"
#include "holotel/opa_model.hpp"
#include "holotel/types.hpp"

namespace holotel {

/// Spectral density of the added noise for one squeezing ellipse:
/// G = e^{2r} cos^2(psi) + e^{-2r} sin^2(psi).
double green_function(const EllipseParams& e);

/// Coarse-graining window of a square pixel of edge `delta`:
/// B(q) = (delta^2/4pi^2) sinc^2(qx delta/2) sinc^2(qy delta/2).
double window_spatial(double delta, double qx, double qy);

/// Coarse-graining window of a time bin of duration `t_window`:
/// B(O) = (t_window/2pi) sinc^2(O t_window/2).
double window_temporal(double t_window, double omega);

/// Covariance with no EPR correlations, in closed form:
/// 2 tri(dx/delta) tri(dy/delta) tri(dt/t_window), tri(u) = max(0, 1-|u|).
/// dx, dy, dt are center separations (any real values).
double classical_covariance(const GridSpec& grid, double dx, double dy,
                            double dt);

struct QuadratureOptions {
  double rel_tol = 1e-4;
  int max_subdiv = 16384;  ///< per-axis panel limit
  /// Outer temporal axis: "cheb" separates the smooth inner integral from the
  /// oscillatory window via an adaptive Chebyshev model; "direct" nests the
  /// adaptive scheme over the raw axis (slower, used for cross-checks).
  enum class Outer { kCheb, kDirect };
  Outer outer = Outer::kCheb;
  int threads = 1;  ///< wall-time only; results independent of thread count
};

/// Deterministic evaluation of the added-noise covariance for the requested
/// pixel/bin pairs. Each entry is
///   C = classical + 2 Int d2q dO B_delta B_T cos[q.dρ - O.dt] (G - 1),
/// with the correction evaluated by adaptive quadrature over the compact
/// region where (G-1) survives the windows. G is built from
/// ellipse(params, 2, .) with `comp` applied when supplied.
/// Throws QuadratureNotConverged when the tolerance cannot be met.
CovarianceTable added_noise_covariance(
    const OpaParams& params, const GridSpec& grid,
    std::span<const CellPair> pairs,
    const CompensationProfile* comp = nullptr,
    const QuadratureOptions& opts = {});

struct ScanRow {
  double delta;
  double t;
  double c_diag;
};

/// Diagonal covariance versus pixel size for each observation time.
std::vector<ScanRow> diagonal_scan(const OpaParams& params,
                                   std::span<const double> d_values,
                                   std::span<const double> t_values,
                                   const CompensationProfile* comp = nullptr,
                                   const QuadratureOptions& opts = {});

/// CSV `delta,t,c_diag` (full double precision).
void write_scan_csv(std::ostream& out, const std::vector<ScanRow>& rows);

/// CSV `j,i,jp,ip,c` for quadrature tables, `j,i,jp,ip,c,stderr` for
/// monte-carlo tables; j = jy*nx + jx row-major pixel index.
void write_covariance_csv(std::ostream& out, const CovarianceTable& table,
                          const GridSpec& grid);

std::uint64_t covariance_fingerprint(const OpaParams& params,
                                     const GridSpec& grid,
                                     const CompensationProfile* comp);

}  // namespace holotel

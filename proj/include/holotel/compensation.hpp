#pragma once

#include <string>
#include <vector>

#include "holotel/opa_model.hpp"

namespace holotel {

struct GridSpec;
struct QuadratureOptions;

/// Polynomial phase phi_c(O) = sum_m c_m O^m (m = 1..k, k <= 4) added by
/// propagation through a linear dispersive medium. A constant term would be
/// a global phase (absorbed into the pump phase) and is excluded.
struct CompensationProfile {
  std::vector<double> coeffs;  ///< c1..ck

  double phase(double omega) const;
  void validate() const;  // throws ConfigError ("compensation.*")

  std::string to_json() const;                       ///< {"coeffs":[...]}
  static CompensationProfile from_json(const std::string& text);
};

/// Pure phase effect: psi' = reduce(psi + phi_c(omega)/2) to [0,pi),
/// r unchanged.
EllipseParams apply_compensation(const EllipseParams& e,
                                 const CompensationProfile& profile,
                                 double omega);

struct CompensationResult {
  CompensationProfile profile;
  double achieved = 0.0;       ///< diagonal covariance with `profile`
  double uncompensated = 0.0;  ///< diagonal covariance with zero profile
  int evaluations = 0;
  bool budget_exhausted = false;
};

/// Deterministic derivative-free (Nelder-Mead) minimization of the diagonal
/// added-noise covariance over profiles of the given degree. The initial
/// simplex is the zero profile plus 0.1 perturbations per coefficient; the
/// search stops at `budget` objective evaluations or simplex diameter below
/// 1e-6. Guaranteed: achieved <= uncompensated + 1e-9. For degree > 1 the
/// embedded lower-degree optimum seeds a second polish pass when it beats the
/// primary search, so objectives are non-increasing in the degree.
CompensationResult optimize_compensation(const OpaParams& params,
                                         const GridSpec& grid, int degree,
                                         int budget,
                                         const QuadratureOptions& opts);

}  // namespace holotel

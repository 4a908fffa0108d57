#pragma once

#include <functional>
#include <span>
#include <vector>

namespace holotel {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // absolute error estimate
  long evaluations = 0;
  bool converged = false;
};

/// Adaptive Gauss-Kronrod (G7,K15) integration of f over [a, b].
///
/// The interval is pre-split at the interior `breakpoints` (values outside
/// (a,b) are ignored), then panels are bisected worst-error-first until
/// sum(err) <= max(abs_tol, rel_tol*|value|) or `max_panels` is reached.
/// Fully deterministic: ties in the panel queue are broken by interval
/// position.
QuadResult gk_adaptive(const std::function<double(double)>& f, double a,
                       double b, std::span<const double> breakpoints,
                       double rel_tol, double abs_tol, int max_panels);

/// Chebyshev interpolant of a smooth function on [a, b], built by node
/// doubling (17, 33, 65, ... points) until newly added nodes agree with the
/// previous fit to `abs_tol`. Evaluation uses Clenshaw recurrence.
class ChebyshevFit {
 public:
  static ChebyshevFit build(const std::function<double(double)>& f, double a,
                            double b, double abs_tol, int max_nodes = 1025);

  double operator()(double x) const;
  double fit_error() const { return fit_error_; }
  bool converged() const { return converged_; }
  int nodes() const { return int(coeff_.size()); }

 private:
  double a_ = 0.0, b_ = 1.0;
  std::vector<double> coeff_;
  double fit_error_ = 0.0;
  bool converged_ = false;
};

}  // namespace holotel

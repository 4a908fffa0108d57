#pragma once

#include <stdexcept>
#include <string>

namespace holotel {

/// Invalid or inconsistent run configuration; `key` is the offending path
/// (e.g. "opa.sigma").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& reason)
      : std::runtime_error(key + ": " + reason), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Adaptive quadrature could not reach the requested tolerance within the
/// subdivision limit. Carries the error estimate that was achieved.
class QuadratureNotConverged : public std::runtime_error {
 public:
  QuadratureNotConverged(double achieved, double requested)
      : std::runtime_error("quadrature error estimate " +
                           std::to_string(achieved) +
                           " exceeds requested tolerance " +
                           std::to_string(requested)),
        achieved_(achieved),
        requested_(requested) {}
  double achieved() const { return achieved_; }
  double requested() const { return requested_; }

 private:
  double achieved_;
  double requested_;
};

/// Real-space lattice does not resolve the requested pixel/bin sizes.
class GridTooCoarse : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// PGM file violates the magic/shape/maxval constraints.
class BadImageFormat : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace holotel

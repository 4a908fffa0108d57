#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "holotel/errors.hpp"
#include "holotel/opa_model.hpp"

using namespace holotel;

namespace {

OpaParams defaults() { return OpaParams{}; }

OpaParams with_mismatch(double delta0, double gvm, double gvd) {
  OpaParams p;
  p.delta0 = delta0;
  p.gvm = gvm;
  p.gvd = gvd;
  return p;
}

}  // namespace

TEST_CASE("pair mismatch direct substitution") {
  OpaParams p = with_mismatch(0.0, 1.0, 0.0);
  CHECK(pair_mismatch(p, {0, 0, 0}) == 0.0);
  CHECK(pair_mismatch(p, {1, 0, 2}) == doctest::Approx(1.0).epsilon(1e-15));

  OpaParams q = with_mismatch(0.5, 1.0, 0.1);
  CHECK(pair_mismatch(q, {0, 0, -2}) == doctest::Approx(-1.1).epsilon(1e-14));
}

TEST_CASE("bogoliubov at zero mismatch") {
  OpaParams p = defaults();  // sigma = 3, theta_p = pi
  const PairCoeffs c = bogoliubov(p, {0, 0, 0});
  CHECK(c.u1.real() == doctest::Approx(std::cosh(3.0)).epsilon(1e-14));
  CHECK(c.u1.imag() == doctest::Approx(0.0).epsilon(1e-14));
  // v = e^{i pi} sinh(3)
  CHECK(c.v1.real() == doctest::Approx(-std::sinh(3.0)).epsilon(1e-14));
  CHECK(std::fabs(c.v1.imag()) < 1e-12);
  CHECK(c.u2m == c.u1);
  CHECK(c.v2m == c.v1);
}

TEST_CASE("bogoliubov beyond the gain band (imaginary Gamma)") {
  // sigma=1, D=4 -> Gamma' = sqrt(3); |v| = sin(sqrt 3)/sqrt 3.
  OpaParams p = defaults();
  p.sigma = 1.0;
  p.delta0 = 4.0;
  const PairCoeffs c = bogoliubov(p, {0, 0, 0});
  CHECK(std::abs(c.v1) ==
        doctest::Approx(0.5698600991825139).epsilon(1e-12));
  CHECK(std::abs(c.u1) ==
        doctest::Approx(1.1509737323850204).epsilon(1e-12));
}

TEST_CASE("unitarity and pair symmetry over a random sweep") {
  std::mt19937 gen(20240811);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    OpaParams p;
    p.sigma = 4.0 * uni(gen);
    p.delta0 = 6.0 * uni(gen) - 3.0;
    p.gvm = 2.0 * uni(gen);
    p.gvd = uni(gen) - 0.5;
    p.diffraction = 0.5 + uni(gen);
    p.pump_phase = 2.0 * M_PI * uni(gen);
    const SpectralPoint pt{8.0 * uni(gen) - 4.0, 8.0 * uni(gen) - 4.0,
                           12.0 * uni(gen) - 6.0};
    const PairCoeffs c = bogoliubov(p, pt);
    CHECK(std::fabs(std::norm(c.u1) - std::norm(c.v1) - 1.0) < 1e-12);
    CHECK(std::fabs(std::abs(c.v1) - std::abs(c.v2m)) < 1e-12);
  }
}

TEST_CASE("band-edge continuity of the continued coefficients") {
  OpaParams p = defaults();
  p.sigma = 3.0;
  for (double eps : {1e-8, -1e-8}) {
    p.delta0 = 2.0 * p.sigma + eps;
    const PairCoeffs a = bogoliubov(p, {0, 0, 0});
    p.delta0 = 2.0 * p.sigma - eps;
    const PairCoeffs b = bogoliubov(p, {0, 0, 0});
    CHECK(std::abs(a.u1 - b.u1) < 1e-6);
    CHECK(std::abs(a.v1 - b.v1) < 1e-6);
  }
}

TEST_CASE("ellipse anchors at the origin") {
  OpaParams p = defaults();
  const EllipseParams e2 = ellipse(p, 2, {0, 0, 0});
  CHECK(e2.psi == doctest::Approx(M_PI / 2).epsilon(1e-13));
  CHECK(e2.r == doctest::Approx(3.0).epsilon(1e-13));

  p.sigma = 1e-14;
  const EllipseParams e0 = ellipse(p, 2, {0, 0, 0});
  CHECK(e0.r == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("phase control: psi_2(0,0) = pump_phase/2 at zero mismatch") {
  for (double thp : {0.5, 1.0, 2.0, 3.0, M_PI}) {
    OpaParams p = defaults();
    p.pump_phase = thp;
    const EllipseParams e = ellipse(p, 2, {0, 0, 0});
    CHECK(e.psi == doctest::Approx(0.5 * thp).epsilon(1e-12));
  }
}

TEST_CASE("ellipse off the carrier (independently tabulated)") {
  // sigma=3, tau=1, theta_p=pi, n=2 at (0,0,1): the governing pair sits at
  // D = -1; reference values from an arbitrary-precision evaluation.
  OpaParams p = defaults();
  const EllipseParams e = ellipse(p, 2, {0, 0, 1.0});
  CHECK(e.psi == doctest::Approx(1.1540784844133298).epsilon(1e-12));
  CHECK(e.r == doctest::Approx(2.9720506411285546).epsilon(1e-12));
}

TEST_CASE("reciprocity r1(q,omega) == r2(-q,-omega)") {
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> uni(-3.0, 3.0);
  OpaParams p = with_mismatch(0.3, 1.0, 0.05);
  for (int i = 0; i < 1000; ++i) {
    const SpectralPoint pt{uni(gen), uni(gen), 2.0 * uni(gen)};
    const EllipseParams a = ellipse(p, 1, pt);
    const EllipseParams b = ellipse(p, 2, negate(pt));
    CHECK(std::fabs(a.r - b.r) < 1e-12);
    CHECK(std::fabs(a.psi - b.psi) < 1e-12);
  }
}

TEST_CASE("major and minor axes multiply to one exactly") {
  std::mt19937 gen(13);
  std::uniform_real_distribution<double> uni(-4.0, 4.0);
  OpaParams p = with_mismatch(-0.7, 1.3, 0.0);
  for (int i = 0; i < 1000; ++i) {
    const SpectralPoint pt{uni(gen), uni(gen), uni(gen)};
    for (int n : {1, 2}) {
      const EllipseParams e = ellipse(p, n, pt);
      CHECK(e.r >= 0.0);
      CHECK(e.psi >= 0.0);
      CHECK(e.psi < M_PI);
      // e^{+r} e^{-r} = (|U|+|V|)(|U|-|V|) = 1 by unitarity.
      const PairCoeffs c = bogoliubov(p, n == 1 ? pt : negate(pt));
      const double big = std::abs(n == 1 ? c.u1 : c.u2m);
      const double small = std::abs(n == 1 ? c.v2m : c.v1);
      CHECK(std::fabs(std::exp(e.r) - (big + small)) < 1e-12);
      CHECK(std::fabs(std::exp(-e.r) - (big - small)) < 1e-11);
    }
  }
}

TEST_CASE("dispersion scan rows match pointwise calls and stay physical") {
  OpaParams p = defaults();
  const auto rows = ellipse_dispersion_scan(p, -12.0, 12.0, 121);
  REQUIRE(rows.size() == 121);
  CHECK(rows.front().omega == doctest::Approx(-12.0));
  CHECK(rows.back().omega == doctest::Approx(12.0));
  for (const auto& row : rows) {
    const EllipseParams e = ellipse(p, 2, {0, 0, row.omega});
    CHECK(row.psi == doctest::Approx(e.psi).epsilon(1e-14));
    CHECK(row.r == doctest::Approx(e.r).epsilon(1e-14));
    CHECK(row.r >= 0.0);
    CHECK(row.major == doctest::Approx(std::exp(e.r)));
    CHECK(row.minor == doctest::Approx(std::exp(-e.r)));
  }
  // Central row carries the figure anchors.
  const auto& mid = rows[60];
  CHECK(mid.omega == doctest::Approx(0.0));
  CHECK(mid.psi == doctest::Approx(M_PI / 2).epsilon(1e-13));
  CHECK(mid.r == doctest::Approx(3.0).epsilon(1e-13));
}

TEST_CASE("r2 decreases monotonically as |D| grows toward the band edge") {
  OpaParams p = defaults();
  double last = ellipse(p, 2, {0, 0, 0}).r;
  for (double omega = 0.25; omega <= 6.0; omega += 0.25) {
    const double r = ellipse(p, 2, {0, 0, omega}).r;  // D(-omega) = -omega
    CHECK(r <= last + 1e-12);
    last = r;
  }
}

TEST_CASE("scan csv format") {
  OpaParams p = defaults();
  const auto rows = ellipse_dispersion_scan(p, 0.0, 1.0, 2);
  std::ostringstream os;
  write_ellipse_csv(os, rows);
  const std::string text = os.str();
  CHECK(text.rfind("omega,psi,r,major,minor\n", 0) == 0);
  CHECK(text.find("\r") == std::string::npos);
  // Full double precision round-trip on a value.
  std::istringstream is(text.substr(text.find('\n') + 1));
  std::string first_line;
  std::getline(is, first_line);
  const double psi = std::stod(first_line.substr(first_line.find(',') + 1));
  CHECK(psi == ellipse(p, 2, {0, 0, 0}).psi);
}

TEST_CASE("parameter validation") {
  OpaParams p = defaults();
  p.sigma = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = defaults();
  p.omega_p = 5.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = defaults();
  p.diffraction = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = defaults();
  p.sigma = 0.0;  // classical limit is a valid configuration
  CHECK_NOTHROW(p.validate());
}

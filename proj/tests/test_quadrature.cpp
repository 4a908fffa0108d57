#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "holotel/quadrature.hpp"

using namespace holotel;

TEST_CASE("gk adaptive on smooth integrands") {
  auto sq = [](double x) { return x * x; };
  const QuadResult r1 = gk_adaptive(sq, 0.0, 1.0, {}, 1e-12, 1e-14, 100);
  CHECK(r1.converged);
  CHECK(r1.value == doctest::Approx(1.0 / 3.0).epsilon(1e-13));

  auto s = [](double x) { return std::sin(x); };
  const QuadResult r2 = gk_adaptive(s, 0.0, M_PI, {}, 1e-12, 1e-14, 1000);
  CHECK(r2.converged);
  CHECK(r2.value == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("gk adaptive resolves oscillatory integrands") {
  // int_0^{20pi} sin(x)/x dx, slowly converging oscillations
  auto f = [](double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; };
  const QuadResult r =
      gk_adaptive(f, 0.0, 20.0 * M_PI, {}, 1e-10, 1e-12, 4000);
  CHECK(r.converged);
  // Si(20*pi), computed independently with arbitrary-precision arithmetic.
  CHECK(r.value == doctest::Approx(1.5548888710447447).epsilon(1e-9));
}

TEST_CASE("gk adaptive respects breakpoints and panel limits") {
  auto kink = [](double x) { return std::fabs(x - 0.3); };
  const double brk[] = {0.3};
  const QuadResult r = gk_adaptive(kink, 0.0, 1.0, brk, 1e-13, 1e-15, 64);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(0.5 * (0.09 + 0.49)).epsilon(1e-13));

  // A needle the initial panel cannot see gets refined only up to the limit.
  auto needle = [](double x) { return std::exp(-1e6 * (x - 0.5) * (x - 0.5)); };
  const QuadResult r2 = gk_adaptive(needle, 0.0, 1.0, {}, 1e-14, 1e-16, 3);
  CHECK_FALSE(r2.converged);
}

TEST_CASE("gk adaptive zero-length and zero integrand") {
  auto f = [](double) { return 1.0; };
  const QuadResult r = gk_adaptive(f, 2.0, 2.0, {}, 1e-10, 1e-12, 10);
  CHECK(r.converged);
  CHECK(r.value == 0.0);

  auto zero = [](double) { return 0.0; };
  const QuadResult rz = gk_adaptive(zero, 0.0, 1e6, {}, 1e-10, 1e-12, 10);
  CHECK(rz.converged);
  CHECK(rz.value == 0.0);
}

TEST_CASE("chebyshev fit of smooth functions") {
  auto f = [](double x) { return std::exp(x) * std::cos(2.0 * x); };
  const ChebyshevFit fit = ChebyshevFit::build(f, 0.0, 3.0, 1e-11, 513);
  CHECK(fit.converged());
  for (double x : {0.0, 0.37, 1.1, 2.99, 3.0})
    CHECK(fit(x) == doctest::Approx(f(x)).epsilon(1e-9));

  auto runge = [](double x) { return 1.0 / (1.0 + x * x); };
  const ChebyshevFit fr = ChebyshevFit::build(runge, -5.0, 5.0, 1e-9, 1025);
  CHECK(fr.converged());
  CHECK(fr(0.33) == doctest::Approx(runge(0.33)).epsilon(1e-8));
}

TEST_CASE("chebyshev fit reports failure on insufficient nodes") {
  auto nasty = [](double x) { return std::tanh(500.0 * (x - 0.5)); };
  const ChebyshevFit fit = ChebyshevFit::build(nasty, 0.0, 1.0, 1e-12, 65);
  CHECK_FALSE(fit.converged());
  CHECK(fit.fit_error() > 1e-12);
}

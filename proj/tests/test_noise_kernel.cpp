#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "holotel/errors.hpp"
#include "holotel/noise_kernel.hpp"
#include "holotel/quadrature.hpp"

using namespace holotel;

namespace {

const CellPair kDiag{CellIndex{}, CellIndex{}};

double diag_value(const OpaParams& p, double delta, double t,
                  const QuadratureOptions& opts = {},
                  const CompensationProfile* comp = nullptr) {
  GridSpec g;
  g.delta = delta;
  g.t_window = t;
  return added_noise_covariance(p, g, std::span(&kDiag, 1), comp, opts)
      .entries.front()
      .value;
}

}  // namespace

TEST_CASE("green function anchors") {
  CHECK(green_function({0.7, 0.0}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(green_function({M_PI / 2, 3.0}) ==
        doctest::Approx(2.478752176666358e-3).epsilon(1e-12));
  CHECK(green_function({0.0, 3.0}) ==
        doctest::Approx(403.4287934927351).epsilon(1e-12));
}

TEST_CASE("coarse-graining windows: values, zeros, unit mass") {
  const double delta = 2.5, t = 1.7;
  CHECK(window_spatial(delta, 0, 0) ==
        doctest::Approx(delta * delta / (4 * M_PI * M_PI)).epsilon(1e-15));
  CHECK(window_temporal(t, 0) == doctest::Approx(t / (2 * M_PI)).epsilon(1e-15));
  CHECK(window_temporal(t, 2 * M_PI / t) == doctest::Approx(0.0).epsilon(1e-28));
  CHECK(window_spatial(delta, 2 * M_PI / delta, 0.3) ==
        doctest::Approx(0.0).epsilon(1e-28));

  // Unit normalization, checked with the module's own quadrature out to a
  // long tail (sinc^2 mass decays like 1/x).
  auto bt = [&](double w) { return window_temporal(t, w); };
  double mass = 2.0 * gk_adaptive(bt, 0.0, 4e4 / t, {}, 1e-9, 1e-11,
                                  16384)
                          .value;
  CHECK(mass == doctest::Approx(1.0).epsilon(2e-5));

  auto bx = [&](double q) {
    const double s = std::sin(0.5 * q * delta) / (0.5 * q * delta);
    return delta / (2 * M_PI) * s * s;
  };
  mass = 2.0 * gk_adaptive(bx, 1e-12, 4e4 / delta, {}, 1e-9, 1e-11, 16384)
                   .value;
  CHECK(mass == doctest::Approx(1.0).epsilon(2e-5));
}

TEST_CASE("classical covariance closed form") {
  GridSpec g;
  g.delta = 2.0;
  g.t_window = 3.0;
  CHECK(classical_covariance(g, 0, 0, 0) == 2.0);
  CHECK(classical_covariance(g, 2.0, 0, 0) == 0.0);  // adjacent pixel
  CHECK(classical_covariance(g, 1.0, 0, 0) == doctest::Approx(1.0));
  CHECK(classical_covariance(g, 1.0, 1.0, 0) == doctest::Approx(0.5));
  CHECK(classical_covariance(g, 0, 0, 1.5) == doctest::Approx(1.0));
}

TEST_CASE("classical covariance equals the windowed integral with G = 1") {
  // Independent check of the triangle closed form: 1-D Gauss-Kronrod of
  // the exact window transform, long domain, per axis.
  const double delta = 2.0;
  for (double dx : {0.0, 1.0, 2.0, 3.0}) {
    auto f = [&](double q) {
      const double x = 0.5 * q * delta;
      const double s = x == 0.0 ? 1.0 : std::sin(x) / x;
      return delta / (2 * M_PI) * s * s * std::cos(q * dx);
    };
    const double val =
        2.0 * gk_adaptive(f, 0.0, 3e4, {}, 1e-8, 1e-9, 16384).value;
    const double tri = std::max(0.0, 1.0 - std::fabs(dx / delta));
    CHECK(val == doctest::Approx(tri).epsilon(5e-4));
  }
}

TEST_CASE("classical limit: sigma = 0 is exact") {
  OpaParams p;
  p.sigma = 0.0;
  GridSpec g;
  g.delta = 3.0;
  g.t_window = 2.0;
  g.nx = 2;
  g.ny = 2;
  g.nt = 2;
  std::vector<CellPair> pairs = {
      {{0, 0, 0}, {0, 0, 0}}, {{1, 1, 1}, {1, 1, 1}}, {{0, 0, 0}, {1, 0, 0}},
      {{0, 0, 0}, {0, 1, 1}}, {{1, 0, 1}, {0, 1, 0}},
  };
  const auto table = added_noise_covariance(p, g, pairs);
  CHECK(table.entries[0].value == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(table.entries[1].value == doctest::Approx(2.0).epsilon(1e-12));
  for (std::size_t k = 2; k < pairs.size(); ++k)
    CHECK(std::fabs(table.entries[k].value) < 1e-12);
}

TEST_CASE("EPR limit at large pixel and window") {
  OpaParams p;  // sigma 3, delta0 0, pump pi
  const double c = diag_value(p, 50.0, 50.0);
  CHECK(c == doctest::Approx(2.0 * std::exp(-6.0)).epsilon(0.10));
}

TEST_CASE("small pixels and windows return the classical value") {
  OpaParams p;
  CHECK(diag_value(p, 0.02, 0.02) == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("sigma -> 0 limit matches the classical covariance") {
  OpaParams p;
  p.sigma = 1e-8;
  CHECK(diag_value(p, 4.0, 4.0) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("table symmetry, translation invariance, fingerprints") {
  OpaParams p;
  GridSpec g;
  g.delta = 4.0;
  g.t_window = 4.0;
  g.nx = 3;
  g.nt = 2;
  std::vector<CellPair> pairs = {
      {{0, 0, 0}, {1, 0, 0}}, {{1, 0, 0}, {0, 0, 0}},  // swapped
      {{1, 0, 1}, {2, 0, 1}},                          // same offset
      {{0, 0, 0}, {0, 0, 1}}, {{1, 0, 0}, {1, 0, 1}},  // same time offset
  };
  const auto table = added_noise_covariance(p, g, pairs);
  CHECK(table.entries[0].value == table.entries[1].value);
  CHECK(table.entries[0].value == table.entries[2].value);
  CHECK(table.entries[3].value == table.entries[4].value);
  CHECK(table.method == CovarianceTable::Method::kQuadrature);

  OpaParams p2 = p;
  p2.sigma = 2.5;
  const auto table2 = added_noise_covariance(p2, g, pairs);
  CHECK(table.fingerprint != table2.fingerprint);
}

TEST_CASE("diagonal stays within the squeezing bounds") {
  OpaParams p;
  const double lo = 2.0 * std::exp(-6.0), hi = 2.0 * std::exp(6.0);
  for (double d : {0.5, 2.0, 8.0, 30.0}) {
    const double c = diag_value(p, d, 10.0);
    CHECK(c >= lo * (1.0 - 1e-9));
    CHECK(c <= hi);
  }
}

TEST_CASE("outer-axis acceleration agrees with direct nesting") {
  OpaParams p;
  QuadratureOptions direct;
  direct.outer = QuadratureOptions::Outer::kDirect;
  QuadratureOptions cheb;
  for (double d : {2.0, 5.0}) {
    const double a = diag_value(p, d, 3.0, cheb);
    const double b = diag_value(p, d, 3.0, direct);
    CHECK(a == doctest::Approx(b).epsilon(5e-4));
  }
}

TEST_CASE("omega-independent mismatch uses the analytic temporal integral") {
  OpaParams p;
  p.gvm = 0.0;
  p.gvd = 0.0;
  GridSpec g;
  g.delta = 5.0;
  g.t_window = 5.0;
  g.nt = 2;
  std::vector<CellPair> pairs = {{{0, 0, 0}, {0, 0, 0}},
                                 {{0, 0, 0}, {0, 0, 1}}};
  const auto table = added_noise_covariance(p, g, pairs);
  // Adjacent bins: triangle factor vanishes at |dt| = T, so only the
  // classical part (also zero there) remains.
  CHECK(std::fabs(table.entries[1].value) < 1e-10);
  CHECK(table.entries[0].value > 0.0);
  CHECK(table.entries[0].value < 2.0);
}

TEST_CASE("non-convergence is reported, not silently accepted") {
  OpaParams p;
  QuadratureOptions opts;
  opts.rel_tol = 1e-13;
  opts.max_subdiv = 2;
  GridSpec g;
  g.delta = 5.0;
  g.t_window = 5.0;
  CHECK_THROWS_AS(
      added_noise_covariance(p, g, std::span(&kDiag, 1), nullptr, opts),
      QuadratureNotConverged);
}

TEST_CASE("invalid pairs and tolerances are rejected") {
  OpaParams p;
  GridSpec g;
  const CellPair bad{CellIndex{5, 0, 0}, CellIndex{}};
  CHECK_THROWS_AS(added_noise_covariance(p, g, std::span(&bad, 1)),
                  ConfigError);
  QuadratureOptions opts;
  opts.rel_tol = 0.0;
  CHECK_THROWS_AS(
      added_noise_covariance(p, g, std::span(&kDiag, 1), nullptr, opts),
      ConfigError);
}

TEST_CASE("diagonal scan ordering across observation times") {
  OpaParams p;
  const double deltas[] = {1.0, 5.0, 20.0};
  const double ts[] = {10.0, 1.0, 0.1};
  const auto rows = diagonal_scan(p, deltas, ts);
  REQUIRE(rows.size() == 9);
  auto value = [&](double d, double t) {
    for (const auto& r : rows)
      if (r.delta == d && r.t == t) return r.c_diag;
    REQUIRE(false);
    return 0.0;
  };
  for (double d : deltas) {
    CHECK(value(d, 0.1) > value(d, 1.0));
    CHECK(value(d, 1.0) > value(d, 10.0));
  }
  // T = 10 T_c decreases from ~2 toward the EPR limit as pixels grow.
  CHECK(value(1.0, 10.0) > value(5.0, 10.0));
  CHECK(value(5.0, 10.0) > value(20.0, 10.0));
  // Short observation time stays near the classical level.
  CHECK(value(20.0, 0.1) > 1.5);
}

TEST_CASE("scan csv format") {
  std::vector<ScanRow> rows = {{1.0, 10.0, 1.9}, {2.0, 10.0, 1.5}};
  std::ostringstream os;
  write_scan_csv(os, rows);
  CHECK(os.str().rfind("delta,t,c_diag\n", 0) == 0);
  CHECK(os.str().find("\r") == std::string::npos);
}

#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "holotel/compensation.hpp"
#include "holotel/monte_carlo.hpp"
#include "holotel/noise_kernel.hpp"
#include "holotel/opa_model.hpp"
#include "holotel/teleport.hpp"

namespace py = pybind11;
using namespace holotel;

namespace {

CovarianceTable py_added_noise_covariance(
    const OpaParams& params, const GridSpec& grid,
    const std::vector<CellPair>& pairs, const CompensationProfile* comp,
    double tol) {
  QuadratureOptions opts;
  opts.rel_tol = tol;
  return added_noise_covariance(params, grid, pairs, comp, opts);
}

CovarianceTable py_estimate_covariance(const OpaParams& params,
                                       const GridSpec& grid,
                                       const std::vector<CellPair>& pairs,
                                       double phi, std::int64_t n_samples,
                                       std::uint64_t seed) {
  return estimate_covariance(params, grid, pairs, phi, n_samples, seed);
}

}  // namespace

PYBIND11_MODULE(_holotel, m) {
  m.doc() = "holographic teleportation with frequency conversion: "
            "OPA model, added-noise covariance, Monte Carlo oracle";

  py::class_<OpaParams>(m, "OpaParams")
      .def(py::init<>())
      .def_readwrite("sigma", &OpaParams::sigma)
      .def_readwrite("delta0", &OpaParams::delta0)
      .def_readwrite("gvm", &OpaParams::gvm)
      .def_readwrite("gvd", &OpaParams::gvd)
      .def_readwrite("diffraction", &OpaParams::diffraction)
      .def_readwrite("pump_phase", &OpaParams::pump_phase)
      .def_readwrite("omega1", &OpaParams::omega1)
      .def_readwrite("omega2", &OpaParams::omega2)
      .def_readwrite("omega_p", &OpaParams::omega_p)
      .def("validate", &OpaParams::validate);

  py::class_<SpectralPoint>(m, "SpectralPoint")
      .def(py::init([](double qx, double qy, double omega) {
             return SpectralPoint{qx, qy, omega};
           }),
           py::arg("qx") = 0.0, py::arg("qy") = 0.0, py::arg("omega") = 0.0)
      .def_readwrite("qx", &SpectralPoint::qx)
      .def_readwrite("qy", &SpectralPoint::qy)
      .def_readwrite("omega", &SpectralPoint::omega);

  py::class_<PairCoeffs>(m, "PairCoeffs")
      .def_readonly("u1", &PairCoeffs::u1)
      .def_readonly("v1", &PairCoeffs::v1)
      .def_readonly("u2m", &PairCoeffs::u2m)
      .def_readonly("v2m", &PairCoeffs::v2m);

  py::class_<EllipseParams>(m, "EllipseParams")
      .def(py::init([](double psi, double r) {
             return EllipseParams{psi, r};
           }),
           py::arg("psi") = 0.0, py::arg("r") = 0.0)
      .def_readwrite("psi", &EllipseParams::psi)
      .def_readwrite("r", &EllipseParams::r);

  py::class_<GridSpec>(m, "GridSpec")
      .def(py::init<>())
      .def_readwrite("delta", &GridSpec::delta)
      .def_readwrite("t_window", &GridSpec::t_window)
      .def_readwrite("nx", &GridSpec::nx)
      .def_readwrite("ny", &GridSpec::ny)
      .def_readwrite("nt", &GridSpec::nt)
      .def_readwrite("x0", &GridSpec::x0)
      .def_readwrite("y0", &GridSpec::y0)
      .def_readwrite("t0", &GridSpec::t0);

  py::class_<CellIndex>(m, "CellIndex")
      .def(py::init([](int jx, int jy, int it) {
             return CellIndex{jx, jy, it};
           }),
           py::arg("jx") = 0, py::arg("jy") = 0, py::arg("it") = 0)
      .def_readwrite("jx", &CellIndex::jx)
      .def_readwrite("jy", &CellIndex::jy)
      .def_readwrite("it", &CellIndex::it);

  py::class_<CovEntry>(m, "CovEntry")
      .def_readonly("a", &CovEntry::a)
      .def_readonly("b", &CovEntry::b)
      .def_readonly("value", &CovEntry::value)
      .def_readonly("stderr", &CovEntry::stderr_);

  py::class_<CovarianceTable>(m, "CovarianceTable")
      .def_readonly("entries", &CovarianceTable::entries)
      .def_readonly("fingerprint", &CovarianceTable::fingerprint)
      .def_property_readonly("method", [](const CovarianceTable& t) {
        return t.method == CovarianceTable::Method::kQuadrature
                   ? "quadrature"
                   : "monte-carlo";
      });

  py::class_<CompensationProfile>(m, "CompensationProfile")
      .def(py::init([](std::vector<double> coeffs) {
             CompensationProfile p{std::move(coeffs)};
             p.validate();
             return p;
           }),
           py::arg("coeffs") = std::vector<double>{})
      .def_readwrite("coeffs", &CompensationProfile::coeffs)
      .def("phase", &CompensationProfile::phase)
      .def("to_json", &CompensationProfile::to_json)
      .def_static("from_json", &CompensationProfile::from_json);

  py::class_<PairSqueezingResult>(m, "PairSqueezingResult")
      .def_readonly("minor_var", &PairSqueezingResult::minor_var)
      .def_readonly("major_var", &PairSqueezingResult::major_var)
      .def_readonly("vac_minor", &PairSqueezingResult::vac_minor)
      .def_readonly("vac_major", &PairSqueezingResult::vac_major)
      .def_readonly("minor_ratio", &PairSqueezingResult::minor_ratio)
      .def_readonly("major_ratio", &PairSqueezingResult::major_ratio)
      .def_readonly("minor_ratio_stderr",
                    &PairSqueezingResult::minor_ratio_stderr)
      .def_readonly("major_ratio_stderr",
                    &PairSqueezingResult::major_ratio_stderr);

  m.def("pair_mismatch", &pair_mismatch, py::arg("params"), py::arg("pt"));
  m.def("bogoliubov", &bogoliubov, py::arg("params"), py::arg("pt"));
  m.def("ellipse", &ellipse, py::arg("params"), py::arg("n"), py::arg("pt"));
  m.def("green_function", &green_function, py::arg("ellipse"));
  m.def("window_spatial", &window_spatial, py::arg("delta"), py::arg("qx"),
        py::arg("qy"));
  m.def("window_temporal", &window_temporal, py::arg("t_window"),
        py::arg("omega"));
  m.def("classical_covariance", &classical_covariance, py::arg("grid"),
        py::arg("dx"), py::arg("dy"), py::arg("dt"));
  m.def("added_noise_covariance", &py_added_noise_covariance,
        py::arg("params"), py::arg("grid"), py::arg("pairs"),
        py::arg("comp") = nullptr, py::arg("tol") = 1e-4);
  m.def("apply_compensation", &apply_compensation, py::arg("ellipse"),
        py::arg("profile"), py::arg("omega"));
  m.def("estimate_covariance", &py_estimate_covariance, py::arg("params"),
        py::arg("grid"), py::arg("pairs"), py::arg("phi"),
        py::arg("n_samples"), py::arg("seed"));
  m.def("pair_squeezing_check", &pair_squeezing_check, py::arg("params"),
        py::arg("pt"), py::arg("n_samples"), py::arg("seed"));
  m.def("fidelity_from_covariance", &fidelity_from_covariance,
        py::arg("c_diag"));
  m.def(
      "ellipse_dispersion_scan",
      [](const OpaParams& p, double lo, double hi, int count) {
        std::vector<std::tuple<double, double, double, double, double>> rows;
        for (const auto& r : ellipse_dispersion_scan(p, lo, hi, count))
          rows.emplace_back(r.omega, r.psi, r.r, r.major, r.minor);
        return rows;
      },
      py::arg("params"), py::arg("omega_min"), py::arg("omega_max"),
      py::arg("count"));
  m.def(
      "diagonal_scan",
      [](const OpaParams& p, std::vector<double> deltas,
         std::vector<double> ts, double tol) {
        QuadratureOptions opts;
        opts.rel_tol = tol;
        std::vector<std::tuple<double, double, double>> rows;
        for (const auto& r : diagonal_scan(p, deltas, ts, nullptr, opts))
          rows.emplace_back(r.delta, r.t, r.c_diag);
        return rows;
      },
      py::arg("params"), py::arg("deltas"), py::arg("t_windows"),
      py::arg("tol") = 1e-4);
  m.def(
      "optimize_compensation",
      [](const OpaParams& p, const GridSpec& g, int degree, int budget) {
        QuadratureOptions opts;
        const auto r = optimize_compensation(p, g, degree, budget, opts);
        return py::make_tuple(r.profile, r.achieved, r.uncompensated,
                              r.evaluations, r.budget_exhausted);
      },
      py::arg("params"), py::arg("grid"), py::arg("degree"),
      py::arg("budget"));
}

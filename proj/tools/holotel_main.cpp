#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "holotel/compensation.hpp"
#include "holotel/csv.hpp"
#include "holotel/errors.hpp"
#include "holotel/monte_carlo.hpp"
#include "holotel/noise_kernel.hpp"
#include "holotel/opa_model.hpp"
#include "holotel/teleport.hpp"

namespace {

using holotel::ConfigError;
using nlohmann::json;

struct RunConfig {
  holotel::OpaParams opa;
  holotel::GridSpec grid{.delta = 5.0, .t_window = 5.0};
  // mc
  std::int64_t n_samples = 10000;
  std::optional<std::uint64_t> seed;
  holotel::McOptions mc;
  std::string backend = "lattice";
  // quadrature
  holotel::QuadratureOptions quad;
  // compensation
  int degree = 2;
  int budget = 200;
  // scan / ellipse / teleport inputs
  std::vector<double> scan_deltas = {1.0, 2.0, 5.0, 10.0, 20.0, 50.0};
  std::vector<double> scan_ts = {10.0, 1.0, 0.1};
  double ellipse_min = -8.0, ellipse_max = 8.0;
  int ellipse_count = 161;
  std::string image_path;
  double image_scale = 4.0;
  std::string out_dir = ".";
  int threads = 1;
};

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(path.empty() ? key : path + "." + key,
                               "unknown key");
  }
}

template <typename T>
void read_to(const json& j, const char* key, const std::string& path, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + "." + key, "wrong type");
  }
}

void load_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config", std::string("parse error: ") + e.what());
  }
  check_keys(j, "",
             {"opa", "grid", "mc", "quadrature", "compensation", "scan",
              "ellipse", "teleport", "out", "threads"});
  if (j.contains("opa")) {
    const json& o = j["opa"];
    check_keys(o, "opa",
               {"sigma", "delta0", "gvm", "gvd", "diffraction", "pump_phase",
                "omega1", "omega2", "omega_p"});
    read_to(o, "sigma", "opa", cfg.opa.sigma);
    read_to(o, "delta0", "opa", cfg.opa.delta0);
    read_to(o, "gvm", "opa", cfg.opa.gvm);
    read_to(o, "gvd", "opa", cfg.opa.gvd);
    read_to(o, "diffraction", "opa", cfg.opa.diffraction);
    read_to(o, "pump_phase", "opa", cfg.opa.pump_phase);
    read_to(o, "omega1", "opa", cfg.opa.omega1);
    read_to(o, "omega2", "opa", cfg.opa.omega2);
    read_to(o, "omega_p", "opa", cfg.opa.omega_p);
  }
  if (j.contains("grid")) {
    const json& g = j["grid"];
    check_keys(g, "grid",
               {"delta", "t_window", "nx", "ny", "nt", "x0", "y0", "t0"});
    read_to(g, "delta", "grid", cfg.grid.delta);
    read_to(g, "t_window", "grid", cfg.grid.t_window);
    read_to(g, "nx", "grid", cfg.grid.nx);
    read_to(g, "ny", "grid", cfg.grid.ny);
    read_to(g, "nt", "grid", cfg.grid.nt);
    read_to(g, "x0", "grid", cfg.grid.x0);
    read_to(g, "y0", "grid", cfg.grid.y0);
    read_to(g, "t0", "grid", cfg.grid.t0);
  }
  if (j.contains("mc")) {
    const json& m = j["mc"];
    check_keys(m, "mc",
               {"n_samples", "seed", "dq", "dw", "q_extent", "w_extent",
                "vacuum_completion", "mask_budget", "backend"});
    read_to(m, "n_samples", "mc", cfg.n_samples);
    if (m.contains("seed")) {
      std::uint64_t s = 0;
      read_to(m, "seed", "mc", s);
      cfg.seed = s;
    }
    read_to(m, "dq", "mc", cfg.mc.dq);
    read_to(m, "dw", "mc", cfg.mc.dw);
    read_to(m, "q_extent", "mc", cfg.mc.q_extent);
    read_to(m, "w_extent", "mc", cfg.mc.w_extent);
    read_to(m, "vacuum_completion", "mc", cfg.mc.vacuum_completion);
    read_to(m, "mask_budget", "mc", cfg.mc.mask_budget);
    read_to(m, "backend", "mc", cfg.backend);
  }
  if (j.contains("quadrature")) {
    const json& q = j["quadrature"];
    check_keys(q, "quadrature", {"tol", "max_subdiv", "outer"});
    read_to(q, "tol", "quadrature", cfg.quad.rel_tol);
    read_to(q, "max_subdiv", "quadrature", cfg.quad.max_subdiv);
    std::string outer = "cheb";
    read_to(q, "outer", "quadrature", outer);
    if (outer == "cheb")
      cfg.quad.outer = holotel::QuadratureOptions::Outer::kCheb;
    else if (outer == "direct")
      cfg.quad.outer = holotel::QuadratureOptions::Outer::kDirect;
    else
      throw ConfigError("quadrature.outer", "must be 'cheb' or 'direct'");
  }
  if (j.contains("compensation")) {
    const json& c = j["compensation"];
    check_keys(c, "compensation", {"degree", "budget"});
    read_to(c, "degree", "compensation", cfg.degree);
    read_to(c, "budget", "compensation", cfg.budget);
  }
  if (j.contains("scan")) {
    const json& s = j["scan"];
    check_keys(s, "scan", {"deltas", "t_windows"});
    read_to(s, "deltas", "scan", cfg.scan_deltas);
    read_to(s, "t_windows", "scan", cfg.scan_ts);
  }
  if (j.contains("ellipse")) {
    const json& e = j["ellipse"];
    check_keys(e, "ellipse", {"omega_min", "omega_max", "count"});
    read_to(e, "omega_min", "ellipse", cfg.ellipse_min);
    read_to(e, "omega_max", "ellipse", cfg.ellipse_max);
    read_to(e, "count", "ellipse", cfg.ellipse_count);
  }
  if (j.contains("teleport")) {
    const json& t = j["teleport"];
    check_keys(t, "teleport", {"image", "scale"});
    read_to(t, "image", "teleport", cfg.image_path);
    read_to(t, "scale", "teleport", cfg.image_scale);
  }
  read_to(j, "out", "", cfg.out_dir);
  read_to(j, "threads", "", cfg.threads);
}

std::uint64_t require_seed(const RunConfig& cfg) {
  if (!cfg.seed)
    throw ConfigError("mc.seed",
                      "stochastic subcommands need an explicit seed");
  return *cfg.seed;
}

std::ofstream open_out(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  const auto path = std::filesystem::path(cfg.out_dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("out", "cannot write " + path.string());
  std::cerr << "writing " << path.string() << '\n';
  return out;
}

std::vector<holotel::CellPair> all_pairs(const holotel::GridSpec& grid) {
  std::vector<holotel::CellIndex> cells;
  for (int it = 0; it < grid.nt; ++it)
    for (int jy = 0; jy < grid.ny; ++jy)
      for (int jx = 0; jx < grid.nx; ++jx) cells.push_back({jx, jy, it});
  std::vector<holotel::CellPair> pairs;
  for (std::size_t a = 0; a < cells.size(); ++a)
    for (std::size_t b = a; b < cells.size(); ++b)
      pairs.push_back({cells[a], cells[b]});
  return pairs;
}

int run_ellipse(const RunConfig& cfg) {
  const auto rows = holotel::ellipse_dispersion_scan(
      cfg.opa, cfg.ellipse_min, cfg.ellipse_max, cfg.ellipse_count);
  auto out = open_out(cfg, "ellipse.csv");
  holotel::write_ellipse_csv(out, rows);
  return 0;
}

int run_scan(const RunConfig& cfg) {
  const auto rows = holotel::diagonal_scan(cfg.opa, cfg.scan_deltas,
                                           cfg.scan_ts, nullptr, cfg.quad);
  auto out = open_out(cfg, "scan.csv");
  holotel::write_scan_csv(out, rows);
  return 0;
}

int run_covariance(const RunConfig& cfg) {
  const auto pairs = all_pairs(cfg.grid);
  const auto table = holotel::added_noise_covariance(cfg.opa, cfg.grid, pairs,
                                                     nullptr, cfg.quad);
  auto out = open_out(cfg, "covariance.csv");
  holotel::write_covariance_csv(out, table, cfg.grid);
  return 0;
}

int run_mc_validate(const RunConfig& cfg) {
  const std::uint64_t seed = require_seed(cfg);
  const auto pairs = all_pairs(cfg.grid);
  const auto quad = holotel::added_noise_covariance(cfg.opa, cfg.grid, pairs,
                                                    nullptr, cfg.quad);
  std::vector<holotel::CellIndex> cells;
  for (const auto& pr : pairs) {
    for (const auto& c : {pr.first, pr.second})
      if (std::find(cells.begin(), cells.end(), c) == cells.end())
        cells.push_back(c);
  }
  holotel::McOptions mc = cfg.mc;
  mc.threads = cfg.threads;
  const holotel::NoiseEnsemble ens(cfg.opa, cfg.grid, cells, cfg.n_samples,
                                   seed, mc);
  auto out = open_out(cfg, "mc_validate.csv");
  out << "j,i,jp,ip,phi,c_quad,c_mc,stderr,z,pass\n";
  bool all_pass = true;
  for (const double phi : {0.0, M_PI / 3.0}) {
    const auto mc_table = ens.covariance(pairs, phi);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& q = quad.entries[k];
      const auto& m = mc_table.entries[k];
      const double quad_err =
          cfg.quad.rel_tol * std::max(std::fabs(q.value), 0.02);
      const double combined =
          std::sqrt(m.stderr_ * m.stderr_ + quad_err * quad_err);
      const double z = (m.value - q.value) / std::max(combined, 1e-300);
      const bool pass = std::fabs(z) <= 3.0;
      all_pass = all_pass && pass;
      const int j = q.a.jy * cfg.grid.nx + q.a.jx;
      const int jp = q.b.jy * cfg.grid.nx + q.b.jx;
      out << j << ',' << q.a.it << ',' << jp << ',' << q.b.it << ','
          << holotel::csv::num(phi) << ',' << holotel::csv::num(q.value)
          << ',' << holotel::csv::num(m.value) << ','
          << holotel::csv::num(m.stderr_) << ',' << holotel::csv::num(z)
          << ',' << (pass ? 1 : 0) << '\n';
    }
  }
  if (!all_pass) {
    std::cerr << "mc-validate: quadrature/Monte-Carlo mismatch beyond 3 "
                 "standard errors\n";
    return 1;
  }
  return 0;
}

int run_compensate(const RunConfig& cfg) {
  holotel::QuadratureOptions q = cfg.quad;
  const auto res = holotel::optimize_compensation(cfg.opa, cfg.grid,
                                                  cfg.degree, cfg.budget, q);
  if (res.budget_exhausted)
    std::cerr << "compensate: evaluation budget exhausted; reporting "
                 "best-so-far\n";
  {
    auto out = open_out(cfg, "profile.json");
    out << res.profile.to_json() << '\n';
  }
  auto out = open_out(cfg, "compensation.csv");
  out << "delta,t,c_uncompensated,c_compensated\n";
  out << holotel::csv::num(cfg.grid.delta) << ','
      << holotel::csv::num(cfg.grid.t_window) << ','
      << holotel::csv::num(res.uncompensated) << ','
      << holotel::csv::num(res.achieved) << '\n';
  return 0;
}

int run_teleport(const RunConfig& cfg) {
  const std::uint64_t seed = require_seed(cfg);
  if (cfg.image_path.empty())
    throw ConfigError("teleport.image", "input PGM path required");
  const auto image = holotel::load_image(cfg.image_path, cfg.image_scale);
  const auto grid =
      holotel::grid_for_image(image, cfg.grid.delta, cfg.grid.t_window);
  holotel::TeleportOptions opts;
  opts.n_samples = cfg.n_samples;
  opts.seed = seed;
  opts.mc = cfg.mc;
  opts.mc.threads = cfg.threads;
  opts.backend = cfg.backend == "spectral"
                     ? holotel::TeleportOptions::Backend::kSpectral
                     : holotel::TeleportOptions::Backend::kLattice;
  const auto result = holotel::teleport(image, cfg.opa, grid, opts);
  std::filesystem::create_directories(cfg.out_dir);
  const auto dir = std::filesystem::path(cfg.out_dir);
  write_pgm((dir / "mean.pgm").string(),
            holotel::render_image(result.mean, 0));
  write_pgm((dir / "sample.pgm").string(),
            holotel::render_image(result.noisy_sample, 0));
  std::cerr << "writing " << (dir / "mean.pgm").string() << ", "
            << (dir / "sample.pgm").string() << '\n';
  auto out = open_out(cfg, "fidelity.csv");
  holotel::write_fidelity_csv(out, result, grid);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continuous-variable holographic teleportation analysis"};
  app.require_subcommand(1);

  std::string config_path;
  RunConfig flags_only;  // collects flag values; merged after file load
  std::optional<double> f_sigma, f_delta0, f_gvm, f_gvd, f_pump, f_delta,
      f_twin, f_tol;
  std::optional<std::int64_t> f_samples;
  std::optional<std::uint64_t> f_seed;
  std::optional<int> f_threads;
  std::optional<std::string> f_out, f_image;

  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--out", f_out, "output directory");
  app.add_option("--seed", f_seed, "random seed (stochastic subcommands)");
  app.add_option("--threads", f_threads, "worker threads (wall time only)");
  app.add_option("--sigma", f_sigma, "pump gain");
  app.add_option("--delta0", f_delta0, "collinear mismatch");
  app.add_option("--gvm", f_gvm, "group-velocity mismatch coefficient");
  app.add_option("--gvd", f_gvd, "quadratic dispersion coefficient");
  app.add_option("--pump-phase", f_pump, "pump phase (radians)");
  app.add_option("--pixel-size", f_delta, "pixel edge (units of l_c)");
  app.add_option("--t-window", f_twin, "time bin (units of T_c)");
  app.add_option("--samples", f_samples, "Monte Carlo samples");
  app.add_option("--tol", f_tol, "quadrature relative tolerance");
  app.add_option("--image", f_image, "input PGM (teleport)");

  auto* sub_ellipse = app.add_subcommand("ellipse", "squeezing-ellipse dispersion CSV");
  auto* sub_scan = app.add_subcommand("scan", "diagonal covariance vs pixel size CSV");
  auto* sub_cov = app.add_subcommand("covariance", "added-noise covariance table CSV");
  auto* sub_val = app.add_subcommand("mc-validate", "quadrature vs Monte Carlo with 3-sigma gate");
  auto* sub_comp = app.add_subcommand("compensate", "optimize a dispersive phase profile");
  auto* sub_tel = app.add_subcommand("teleport", "teleport a PGM image");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << e.what() << '\n';
    return 2;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) load_config_file(config_path, cfg);
    if (f_out) cfg.out_dir = *f_out;
    if (f_seed) cfg.seed = *f_seed;
    if (f_threads) cfg.threads = *f_threads;
    if (f_sigma) cfg.opa.sigma = *f_sigma;
    if (f_delta0) cfg.opa.delta0 = *f_delta0;
    if (f_gvm) cfg.opa.gvm = *f_gvm;
    if (f_gvd) cfg.opa.gvd = *f_gvd;
    if (f_pump) cfg.opa.pump_phase = *f_pump;
    if (f_delta) cfg.grid.delta = *f_delta;
    if (f_twin) cfg.grid.t_window = *f_twin;
    if (f_samples) cfg.n_samples = *f_samples;
    if (f_tol) cfg.quad.rel_tol = *f_tol;
    if (f_image) cfg.image_path = *f_image;
    cfg.opa.validate();
    cfg.grid.validate();
    cfg.quad.threads = cfg.threads;

    if (sub_ellipse->parsed()) return run_ellipse(cfg);
    if (sub_scan->parsed()) return run_scan(cfg);
    if (sub_cov->parsed()) return run_covariance(cfg);
    if (sub_val->parsed()) return run_mc_validate(cfg);
    if (sub_comp->parsed()) return run_compensate(cfg);
    if (sub_tel->parsed()) return run_teleport(cfg);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const holotel::BadImageFormat& e) {
    std::cerr << "image error: " << e.what() << '\n';
    return 2;
  } catch (const holotel::QuadratureNotConverged& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

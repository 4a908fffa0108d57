#include "holotel/compensation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <nlohmann/json.hpp>

#include "holotel/errors.hpp"
#include "holotel/noise_kernel.hpp"

namespace holotel {

double CompensationProfile::phase(double omega) const {
  // Horner over c_k..c_1, then one final multiply by omega (no constant term).
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
    acc = acc * omega + *it;
  return acc * omega;
}

void CompensationProfile::validate() const {
  if (coeffs.size() > 4)
    throw ConfigError("compensation.coeffs", "degree must be <= 4");
  for (double c : coeffs)
    if (!std::isfinite(c))
      throw ConfigError("compensation.coeffs", "must be finite");
}

std::string CompensationProfile::to_json() const {
  nlohmann::json j;
  j["coeffs"] = coeffs;
  return j.dump();
}

CompensationProfile CompensationProfile::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  CompensationProfile p;
  p.coeffs = j.at("coeffs").get<std::vector<double>>();
  p.validate();
  return p;
}

EllipseParams apply_compensation(const EllipseParams& e,
                                 const CompensationProfile& profile,
                                 double omega) {
  double psi = e.psi + 0.5 * profile.phase(omega);
  psi = std::fmod(psi, M_PI);
  if (psi < 0.0) psi += M_PI;
  if (psi >= M_PI) psi -= M_PI;
  return {psi, e.r};
}

namespace {

struct Simplex {
  std::vector<std::vector<double>> x;
  std::vector<double> f;
};

double diameter(const Simplex& s) {
  double d = 0.0;
  for (std::size_t i = 1; i < s.x.size(); ++i)
    for (std::size_t j = 0; j < s.x[i].size(); ++j)
      d = std::max(d, std::fabs(s.x[i][j] - s.x[0][j]));
  return d;
}

/// Nelder-Mead with standard coefficients; deterministic for a fixed initial
/// simplex. `evals` counts objective calls against `budget`.
void nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                 Simplex& s, int budget, int& evals, bool& exhausted) {
  const std::size_t n = s.x[0].size();
  auto order = [&] {
    std::vector<std::size_t> idx(s.x.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return s.f[a] < s.f[b]; });
    Simplex t;
    for (std::size_t i : idx) {
      t.x.push_back(s.x[i]);
      t.f.push_back(s.f[i]);
    }
    s = std::move(t);
  };
  auto eval = [&](const std::vector<double>& x) {
    ++evals;
    return f(x);
  };

  order();
  while (diameter(s) >= 1e-6) {
    if (evals >= budget) {
      exhausted = true;
      return;
    }
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) centroid[j] += s.x[i][j] / double(n);

    auto along = [&](double t) {
      std::vector<double> p(n);
      for (std::size_t j = 0; j < n; ++j)
        p[j] = centroid[j] + t * (centroid[j] - s.x[n][j]);
      return p;
    };

    const auto xr = along(1.0);
    const double fr = eval(xr);
    if (fr < s.f[0]) {
      if (evals < budget) {
        const auto xe = along(2.0);
        const double fe = eval(xe);
        if (fe < fr) {
          s.x[n] = xe;
          s.f[n] = fe;
        } else {
          s.x[n] = xr;
          s.f[n] = fr;
        }
      } else {
        s.x[n] = xr;
        s.f[n] = fr;
      }
    } else if (fr < s.f[n - 1]) {
      s.x[n] = xr;
      s.f[n] = fr;
    } else {
      const bool outside = fr < s.f[n];
      if (evals >= budget) {
        exhausted = true;
        return;
      }
      const auto xc = along(outside ? 0.5 : -0.5);
      const double fc = eval(xc);
      if (fc < (outside ? fr : s.f[n])) {
        s.x[n] = xc;
        s.f[n] = fc;
      } else {
        // Shrink toward the best vertex.
        for (std::size_t i = 1; i <= n; ++i) {
          for (std::size_t j = 0; j < n; ++j)
            s.x[i][j] = s.x[0][j] + 0.5 * (s.x[i][j] - s.x[0][j]);
          if (evals >= budget) {
            exhausted = true;
            // Re-evaluate what we can; remaining vertices keep stale values
            // which only delays ordering, never loses the best vertex.
            return;
          }
          s.f[i] = eval(s.x[i]);
        }
      }
    }
    order();
  }
}

}  // namespace

CompensationResult optimize_compensation(const OpaParams& params,
                                         const GridSpec& grid, int degree,
                                         int budget,
                                         const QuadratureOptions& opts) {
  if (degree < 1 || degree > 4)
    throw ConfigError("compensation.degree", "must be in [1,4]");
  if (budget < 1) throw ConfigError("compensation.budget", "must be >= 1");

  QuadratureOptions qopts = opts;
  qopts.rel_tol = std::min(opts.rel_tol, 1e-5);

  CompensationResult result;
  auto objective = [&](const std::vector<double>& coeffs) {
    CompensationProfile prof{coeffs};
    const CellPair diag{CellIndex{}, CellIndex{}};
    return added_noise_covariance(params, grid, std::span(&diag, 1), &prof,
                                  qopts)
        .entries.front()
        .value;
  };

  result.uncompensated = objective(std::vector<double>(degree, 0.0));
  result.evaluations = 1;

  auto run_from = [&](const std::vector<double>& start) {
    Simplex s;
    s.x.push_back(start);
    for (int k = 0; k < degree; ++k) {
      auto v = start;
      v[k] += 0.1;
      s.x.push_back(v);
    }
    for (auto& v : s.x) {
      if (result.evaluations >= budget) {
        result.budget_exhausted = true;
        break;
      }
      s.f.push_back(objective(v));
      ++result.evaluations;
    }
    if (s.f.size() < s.x.size()) {
      // Budget died during seeding; return the best vertex seen so far.
      std::size_t best = 0;
      for (std::size_t i = 1; i < s.f.size(); ++i)
        if (s.f[i] < s.f[best]) best = i;
      if (s.f.empty())
        return std::pair{start, std::numeric_limits<double>::infinity()};
      return std::pair{s.x[best], s.f[best]};
    }
    bool exhausted = false;
    nelder_mead(objective, s, budget, result.evaluations, exhausted);
    result.budget_exhausted = result.budget_exhausted || exhausted;
    return std::pair{s.x[0], s.f[0]};
  };

  auto [best_x, best_f] = run_from(std::vector<double>(degree, 0.0));

  // Lower-degree results embed into the feasible set; polish from the
  // embedded optimum when it wins so objectives are monotone in the degree.
  if (degree > 1 && !result.budget_exhausted) {
    const auto sub = optimize_compensation(params, grid, degree - 1,
                                           std::max(1, budget / 2), opts);
    result.evaluations += sub.evaluations;
    if (sub.achieved < best_f) {
      auto seed = sub.profile.coeffs;
      seed.resize(degree, 0.0);
      const auto [px, pf] = run_from(seed);
      if (pf < best_f) {
        best_x = px;
        best_f = pf;
      }
    }
  }

  if (best_f > result.uncompensated) {
    // The zero profile is always a sampled vertex; never return worse.
    best_x.assign(degree, 0.0);
    best_f = result.uncompensated;
  }
  result.profile.coeffs = best_x;
  result.achieved = best_f;
  return result;
}

}  // namespace holotel

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "prf/types.hpp"

namespace prf::inference {

/// Poisson log-likelihood of observed cells against expected cells:
/// Σ_a [ -m_a + Z_a log m_a - log(Z_a!) ].  Layouts must match.
double poisson_loglik_cells(const CountTable& means, const CountTable& observed);

/// Expected cells from (beta_s, beta_r) with nu = equilibrium per class.
double poisson_loglik(const ScaledParams& beta_s, const ScaledParams& beta_r,
                      const CountTable& observed, const Grid& grid);

struct ParamBounds {
  double t_lo = 1e-4, t_hi = 20.0;
  double theta_lo = 1e-6, theta_hi = 1e3;
  double gamma_abs = 50.0;
};

struct FitConfig {
  ParamBounds bounds;
  double t0 = 0.5, theta_s0 = 1.0, theta_r0 = 1.0, gamma0 = 0.0;
  int starts = 5;             // multi-start count (first start = the point above)
  std::uint64_t seed = 0;     // start-point randomization
  double tol = 1e-7;          // simplex spread tolerance on the log-likelihood
  int max_iter = 300;         // Nelder-Mead iterations per start
  bool per_locus = false;     // t shared; theta_s, theta_r, gamma per locus
  bool dprs_double_count_shared = false;
  int grid_intervals = 400;   // solver nodes for expected means
  double dt_floor = 2e-3;     // solver dt; long horizons relax to t/150
};

/// Unit-θ expected DOHRS row for one class; means scale linearly in θ.
struct MeansCache {
  struct Row {
    double K = 0, O = 0, H = 0;
  };
  Row row(double t, double gamma, int m, int n, const FitConfig& cfg);

 private:
  std::map<std::tuple<double, double, int, int>, Row> map_;
};

struct FitResult {
  double t = 0, theta_s = 0, theta_r = 0, gamma = 0;
  double loglik = 0;
  std::array<double, 4> se{};  // (t, theta_s, theta_r, gamma); NaN if unavailable
  bool converged = false;
  int evals = 0;
  std::vector<double> trace;  // best log-likelihood per accepted NM iteration
  // per-locus mode estimates (empty in shared mode)
  std::vector<double> theta_s_loci, theta_r_loci, gamma_loci;
};

FitResult fit_mle(const std::vector<CountTable>& tables, const FitConfig& cfg);

struct ProfileInterval {
  double lo = 0, hi = 0;
  bool lo_at_bound = false, hi_at_bound = false;
  double level = 0.95;
};

/// Likelihood-ratio interval by bisection on 2(ll_max - ll_prof(v)) = χ²₁(level).
/// parameter is one of "t", "theta_s", "theta_r", "gamma" (shared mode only).
ProfileInterval profile_ci(const std::vector<CountTable>& tables, const FitConfig& cfg,
                           const std::string& parameter, double level = 0.95);

/// Inverse standard normal CDF (Acklam's rational approximation + polish).
double normal_quantile(double p);
/// χ²(1) quantile via the normal quantile.
double chi2_quantile_1df(double level);

}  // namespace prf::inference

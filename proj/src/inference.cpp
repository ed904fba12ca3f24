#include "prf/inference.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "prf/rng.hpp"
#include "prf/sampling.hpp"

namespace prf::inference {

namespace {

constexpr double kNegInfCap = -1e90;  // finite stand-in inside the simplex

double poisson_term(double mean, double z) {
  if (mean <= 0.0)
    return z == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return -mean + z * std::log(mean) - std::lgamma(z + 1.0);
}

}  // namespace

double poisson_loglik_cells(const CountTable& means, const CountTable& observed) {
  if (means.layout != observed.layout)
    throw std::invalid_argument("poisson_loglik: table layouts must match");
  const auto m = means.cells();
  const auto z = observed.cells();
  double acc = 0.0;
  for (size_t a = 0; a < m.size(); ++a) acc += poisson_term(m[a], z[a]);
  return acc;
}

double poisson_loglik(const ScaledParams& beta_s, const ScaledParams& beta_r,
                      const CountTable& observed, const Grid& grid) {
  auto expected = sampling::table_means(
      observed.m, observed.n, beta_s, beta_r,
      InitialMeasure::equilibrium(beta_s.theta, beta_s.gamma),
      InitialMeasure::equilibrium(beta_r.theta, beta_r.gamma), grid);
  CountTable means = expected.means;
  if (observed.layout == TableLayout::DPRS) means = means.to_dprs();
  return poisson_loglik_cells(means, observed);
}

MeansCache::Row MeansCache::row(double t, double gamma, int m, int n,
                                const FitConfig& cfg) {
  const auto key = std::make_tuple(t, gamma, m, n);
  auto it = map_.find(key);
  if (it != map_.end()) return it->second;

  const double dt = std::max(cfg.dt_floor, t / 150.0);
  const Grid grid = Grid::uniform(cfg.grid_intervals, dt);
  const ScaledParams beta{t, 1.0, gamma};
  const auto nu = InitialMeasure::equilibrium(1.0, gamma);
  sampling::FateContext ctx(beta, {m, n}, grid);
  const auto legacy = sampling::legacy_means(ctx, m, n, nu);
  const auto sm = sampling::new_spectrum(ctx, m);
  const auto sn = (n == m) ? sm : sampling::new_spectrum(ctx, n);
  Row row{legacy.C1 + sm.D_N + sn.D_N, legacy.C2 + sm.E_N + sn.E_N, legacy.C3};
  map_.emplace(key, row);
  return row;
}

namespace {

// Per-class contribution of one table at candidate (t, gamma_class):
// numerator/denominator of the profiled theta and the cell pairs.
struct ClassCells {
  double zsum = 0.0;   // Σ Z over the class cells
  double msum = 0.0;   // Σ unit-θ means over the class cells
  std::vector<std::pair<double, double>> cells;  // (unit mean, observed)
};

void collect_class(const CountTable& tab, const MeansCache::Row& row, bool silent,
                   bool dprs_double, ClassCells& out) {
  const double K = silent ? tab.K_s : tab.K_r;
  const double O = silent ? tab.O_s : tab.O_r;
  const double H = silent ? tab.H_s : tab.H_r;
  if (tab.layout == TableLayout::DPRS) {
    const double Vbar = row.O + (dprs_double ? 2.0 : 1.0) * row.H;
    out.cells.push_back({row.K, K});
    out.cells.push_back({Vbar, O + H});  // DPRS stores V in the O slot
    out.zsum += K + O + H;
    out.msum += row.K + Vbar;
  } else {
    out.cells.push_back({row.K, K});
    out.cells.push_back({row.O, O});
    out.cells.push_back({row.H, H});
    out.zsum += K + O + H;
    out.msum += row.K + row.O + row.H;
  }
}

double cells_loglik(const ClassCells& cc, double theta) {
  double acc = 0.0;
  for (const auto& [mean, z] : cc.cells) acc += poisson_term(theta * mean, z);
  return acc;
}

struct SharedObjective {
  const std::vector<CountTable>* tables;
  const FitConfig* cfg;
  MeansCache* cache;
  std::optional<double> fix_theta_s, fix_theta_r;

  // Profiled log-likelihood at (t, gamma); outputs the theta estimates.
  double eval(double t, double gamma, double& theta_s, double& theta_r) const {
    ClassCells silent, repl;
    for (const auto& tab : *tables) {
      const auto srow = cache->row(t, 0.0, tab.m, tab.n, *cfg);
      const auto rrow = cache->row(t, gamma, tab.m, tab.n, *cfg);
      collect_class(tab, srow, true, cfg->dprs_double_count_shared, silent);
      collect_class(tab, rrow, false, cfg->dprs_double_count_shared, repl);
    }
    const auto& b = cfg->bounds;
    auto profile = [&](const ClassCells& cc, std::optional<double> fixed) {
      if (fixed) return *fixed;
      if (cc.msum <= 0.0) return b.theta_lo;
      return std::clamp(cc.zsum / cc.msum, b.theta_lo, b.theta_hi);
    };
    theta_s = profile(silent, fix_theta_s);
    theta_r = profile(repl, fix_theta_r);
    return cells_loglik(silent, theta_s) + cells_loglik(repl, theta_r);
  }
};

struct NmResult {
  std::vector<double> x;
  double f = 0.0;
  int evals = 0;
  bool converged = false;
  std::vector<double> trace;  // best value after each iteration
};

// Standard Nelder-Mead (reflect/expand/contract/shrink) minimization.
NmResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                     const std::vector<double>& x0, const std::vector<double>& step,
                     double tol, int max_iter) {
  const size_t d = x0.size();
  NmResult res;
  std::vector<std::pair<double, std::vector<double>>> simplex;
  auto eval = [&](const std::vector<double>& x) {
    ++res.evals;
    return f(x);
  };
  simplex.push_back({eval(x0), x0});
  for (size_t i = 0; i < d; ++i) {
    auto xi = x0;
    xi[i] += step[i];
    simplex.push_back({eval(xi), xi});
  }
  auto by_value = [](const auto& a, const auto& b) { return a.first < b.first; };
  std::sort(simplex.begin(), simplex.end(), by_value);

  for (int iter = 0; iter < max_iter; ++iter) {
    const double spread = simplex.back().first - simplex.front().first;
    if (spread < tol) {
      res.converged = true;
      break;
    }
    std::vector<double> centroid(d, 0.0);
    for (size_t v = 0; v < d; ++v)
      for (size_t i = 0; i < d; ++i) centroid[i] += simplex[v].second[i] / d;
    auto blend = [&](double c) {
      std::vector<double> x(d);
      for (size_t i = 0; i < d; ++i)
        x[i] = centroid[i] + c * (centroid[i] - simplex.back().second[i]);
      return x;
    };
    auto xr = blend(1.0);
    const double fr = eval(xr);
    if (fr < simplex.front().first) {
      auto xe = blend(2.0);
      const double fe = eval(xe);
      simplex.back() = fe < fr ? std::make_pair(fe, xe) : std::make_pair(fr, xr);
    } else if (fr < simplex[d - 1].first) {
      simplex.back() = {fr, xr};
    } else {
      auto xc = blend(fr < simplex.back().first ? 0.5 : -0.5);
      const double fc = eval(xc);
      if (fc < std::min(fr, simplex.back().first)) {
        simplex.back() = {fc, xc};
      } else {
        for (size_t v = 1; v <= d; ++v) {
          for (size_t i = 0; i < d; ++i)
            simplex[v].second[i] =
                0.5 * (simplex[v].second[i] + simplex.front().second[i]);
          simplex[v].first = eval(simplex[v].second);
        }
      }
    }
    std::sort(simplex.begin(), simplex.end(), by_value);
    res.trace.push_back(simplex.front().first);
  }
  res.x = simplex.front().second;
  res.f = simplex.front().first;
  return res;
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("normal_quantile: p must lie in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  } else if (p <= phigh) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  }
  // one Halley polish step
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

double chi2_quantile_1df(double level) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("chi2_quantile_1df: level must lie in (0,1)");
  const double z = normal_quantile(0.5 + level / 2.0);
  return z * z;
}

namespace {

struct SharedFit {
  double t, gamma, theta_s, theta_r, loglik;
  NmResult nm;
};

// Multi-start NM over the free subset of (log t, gamma).
SharedFit run_shared(const SharedObjective& obj, const FitConfig& cfg,
                     std::optional<double> fix_t, std::optional<double> fix_gamma,
                     double warm_t, double warm_gamma) {
  const auto& b = cfg.bounds;
  const bool free_t = !fix_t.has_value();
  const bool free_g = !fix_gamma.has_value();

  auto unpack = [&](const std::vector<double>& x) {
    double t = fix_t.value_or(0.0), g = fix_gamma.value_or(0.0);
    size_t i = 0;
    if (free_t) t = std::exp(x[i++]);
    if (free_g) g = x[i++];
    return std::make_pair(t, g);
  };
  auto in_box = [&](double t, double g) {
    return t >= b.t_lo && t <= b.t_hi && std::abs(g) <= b.gamma_abs;
  };
  auto objective = [&](const std::vector<double>& x) {
    auto [t, g] = unpack(x);
    if (!in_box(t, g)) return -kNegInfCap;  // large positive penalty
    double ts, tr;
    const double ll = obj.eval(t, g, ts, tr);
    return std::isfinite(ll) ? -ll : -kNegInfCap;
  };

  std::vector<std::vector<double>> starts;
  {
    std::vector<double> x0;
    if (free_t) x0.push_back(std::log(std::clamp(warm_t, b.t_lo, b.t_hi)));
    if (free_g) x0.push_back(std::clamp(warm_gamma, -b.gamma_abs, b.gamma_abs));
    starts.push_back(x0);
    auto rng = make_rng(cfg.seed, 0xf17);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int s = 1; s < std::max(1, cfg.starts); ++s) {
      std::vector<double> x;
      if (free_t) {
        const double lo = std::log(b.t_lo), hi = std::log(b.t_hi);
        x.push_back(lo + (hi - lo) * u01(rng));
      }
      if (free_g) x.push_back(-b.gamma_abs + 2.0 * b.gamma_abs * u01(rng));
      starts.push_back(x);
    }
  }

  SharedFit best;
  best.loglik = -std::numeric_limits<double>::infinity();
  int total_evals = 0;
  for (const auto& x0 : starts) {
    std::vector<double> step;
    if (free_t) step.push_back(0.4);
    if (free_g) step.push_back(0.5);
    auto nm = nelder_mead(objective, x0, step, cfg.tol, cfg.max_iter);
    total_evals += nm.evals;
    if (-nm.f > best.loglik) {
      auto [t, g] = unpack(nm.x);
      best.t = t;
      best.gamma = g;
      best.loglik = -nm.f;
      best.nm = nm;
    }
  }
  best.nm.evals = total_evals;
  double ts, tr;
  obj.eval(best.t, best.gamma, ts, tr);
  best.theta_s = ts;
  best.theta_r = tr;
  return best;
}

// Observed-information standard errors for the shared 4-parameter model.
std::array<double, 4> shared_se(const std::vector<CountTable>& tables,
                                const FitConfig& cfg, MeansCache& cache, double t,
                                double ts, double tr, double g) {
  auto ll = [&](double t_, double ts_, double tr_, double g_) {
    double acc = 0.0;
    for (const auto& tab : tables) {
      ClassCells silent, repl;
      const auto srow = cache.row(t_, 0.0, tab.m, tab.n, cfg);
      const auto rrow = cache.row(t_, g_, tab.m, tab.n, cfg);
      collect_class(tab, srow, true, cfg.dprs_double_count_shared, silent);
      collect_class(tab, rrow, false, cfg.dprs_double_count_shared, repl);
      acc += cells_loglik(silent, ts_) + cells_loglik(repl, tr_);
    }
    return acc;
  };
  std::array<double, 4> p{t, ts, tr, g};
  std::array<double, 4> h{1e-3 * std::max(t, 1e-2), 1e-3 * std::max(ts, 1e-2),
                          1e-3 * std::max(tr, 1e-2), 1e-3 * std::max(std::abs(g), 0.1)};
  auto at = [&](int i, double di, int j, double dj) {
    auto q = p;
    q[i] += di;
    q[j] += dj;
    return ll(q[0], q[1], q[2], q[3]);
  };
  double H[4][4];
  const double f0 = ll(p[0], p[1], p[2], p[3]);
  for (int i = 0; i < 4; ++i)
    H[i][i] = (at(i, h[i], i, 0.0) - 2.0 * f0 + at(i, -h[i], i, 0.0)) / (h[i] * h[i]);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      H[i][j] = H[j][i] = (at(i, h[i], j, h[j]) - at(i, h[i], j, -h[j]) -
                           at(i, -h[i], j, h[j]) + at(i, -h[i], j, -h[j])) /
                          (4.0 * h[i] * h[j]);

  // invert -H (Gauss-Jordan); failures yield NaN standard errors
  double A[4][8];
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) A[i][j] = -H[i][j];
    for (int j = 0; j < 4; ++j) A[i][4 + j] = (i == j) ? 1.0 : 0.0;
  }
  std::array<double, 4> se;
  se.fill(std::numeric_limits<double>::quiet_NaN());
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    if (std::abs(A[piv][col]) < 1e-12) return se;
    std::swap_ranges(A[col], A[col] + 8, A[piv]);
    const double d = A[col][col];
    for (int j = 0; j < 8; ++j) A[col][j] /= d;
    for (int r = 0; r < 4; ++r) {
      if (r == col) continue;
      const double factor = A[r][col];
      for (int j = 0; j < 8; ++j) A[r][j] -= factor * A[col][j];
    }
  }
  for (int i = 0; i < 4; ++i)
    if (A[i][4 + i] > 0.0) se[i] = std::sqrt(A[i][4 + i]);
  return se;
}

}  // namespace

FitResult fit_mle(const std::vector<CountTable>& tables, const FitConfig& cfg) {
  if (tables.empty()) throw std::invalid_argument("fit_mle: no tables");
  for (const auto& t : tables) t.validate();
  MeansCache cache;
  FitResult out;

  if (!cfg.per_locus) {
    SharedObjective obj{&tables, &cfg, &cache, {}, {}};
    auto fit = run_shared(obj, cfg, {}, {}, cfg.t0, cfg.gamma0);
    out.t = fit.t;
    out.gamma = fit.gamma;
    out.theta_s = fit.theta_s;
    out.theta_r = fit.theta_r;
    out.loglik = fit.loglik;
    out.converged = fit.nm.converged;
    out.evals = fit.nm.evals;
    out.trace.reserve(fit.nm.trace.size());
    for (double f : fit.nm.trace) out.trace.push_back(-f);
    out.se = shared_se(tables, cfg, cache, out.t, out.theta_s, out.theta_r, out.gamma);
    return out;
  }

  // per-locus mode: outer 1-D search on shared log t, inner per-locus gamma
  const auto& b = cfg.bounds;
  const size_t L = tables.size();
  auto locus_best = [&](double t, size_t l, double& ts, double& tr, double& g) {
    const std::vector<CountTable> one{tables[l]};
    SharedObjective obj{&one, &cfg, &cache, {}, {}};
    auto fit = run_shared(obj, cfg, t, {}, t, cfg.gamma0);
    ts = fit.theta_s;
    tr = fit.theta_r;
    g = fit.gamma;
    return fit.loglik;
  };
  int evals = 0;
  auto outer = [&](const std::vector<double>& x) {
    const double t = std::exp(x[0]);
    if (t < b.t_lo || t > b.t_hi) return -kNegInfCap;
    ++evals;
    double acc = 0.0, ts, tr, g;
    for (size_t l = 0; l < L; ++l) acc += locus_best(t, l, ts, tr, g);
    return -acc;
  };
  auto nm = nelder_mead(outer, {std::log(std::clamp(cfg.t0, b.t_lo, b.t_hi))}, {0.4},
                        cfg.tol, cfg.max_iter);
  out.t = std::exp(nm.x[0]);
  out.converged = nm.converged;
  out.evals = evals;
  out.trace.reserve(nm.trace.size());
  for (double f : nm.trace) out.trace.push_back(-f);
  out.theta_s_loci.resize(L);
  out.theta_r_loci.resize(L);
  out.gamma_loci.resize(L);
  out.loglik = 0.0;
  for (size_t l = 0; l < L; ++l)
    out.loglik += locus_best(out.t, l, out.theta_s_loci[l], out.theta_r_loci[l],
                             out.gamma_loci[l]);
  out.theta_s = out.theta_s_loci.front();
  out.theta_r = out.theta_r_loci.front();
  out.gamma = out.gamma_loci.front();
  out.se.fill(std::numeric_limits<double>::quiet_NaN());
  return out;
}

ProfileInterval profile_ci(const std::vector<CountTable>& tables,
                           const FitConfig& cfg, const std::string& parameter,
                           double level) {
  if (cfg.per_locus)
    throw std::invalid_argument("profile_ci: shared mode only");
  int which;  // 0: t, 1: theta_s, 2: theta_r, 3: gamma
  if (parameter == "t") which = 0;
  else if (parameter == "theta_s") which = 1;
  else if (parameter == "theta_r") which = 2;
  else if (parameter == "gamma") which = 3;
  else throw std::invalid_argument("profile_ci: unknown parameter " + parameter);

  MeansCache cache;
  SharedObjective base{&tables, &cfg, &cache, {}, {}};
  auto fit = run_shared(base, cfg, {}, {}, cfg.t0, cfg.gamma0);
  const double target = fit.loglik - chi2_quantile_1df(level) / 2.0;
  const std::array<double, 4> hat{fit.t, fit.theta_s, fit.theta_r, fit.gamma};

  auto prof = [&](double v) {
    SharedObjective obj{&tables, &cfg, &cache, {}, {}};
    std::optional<double> fix_t, fix_g;
    if (which == 0) fix_t = v;
    if (which == 1) obj.fix_theta_s = v;
    if (which == 2) obj.fix_theta_r = v;
    if (which == 3) fix_g = v;
    FitConfig quick = cfg;
    quick.starts = 1;  // warm start from the MLE
    auto r = run_shared(obj, quick, fix_t, fix_g, fit.t, fit.gamma);
    return r.loglik;
  };

  const auto& b = cfg.bounds;
  const double lo_bound = which == 0   ? b.t_lo
                          : which == 3 ? -b.gamma_abs
                                       : b.theta_lo;
  const double hi_bound = which == 0   ? b.t_hi
                          : which == 3 ? b.gamma_abs
                                       : b.theta_hi;

  auto edge = [&](int dir, bool& at_bound) {
    at_bound = false;
    double inner = hat[which];  // highest point known to satisfy prof >= target
    double outer = inner;       // first point found below target
    double add = 0.25, mul = 1.3;
    bool crossed = false;
    double cur = inner;
    for (int i = 0; i < 60; ++i) {
      double cand = (which == 3) ? cur + dir * add
                                 : (dir > 0 ? cur * mul : cur / mul);
      add *= 1.5;
      const bool clipped = cand <= lo_bound || cand >= hi_bound;
      cand = std::clamp(cand, lo_bound, hi_bound);
      if (prof(cand) < target) {
        inner = cur;
        outer = cand;
        crossed = true;
        break;
      }
      cur = cand;
      if (clipped) {  // the whole range up to the bound stays above target
        at_bound = true;
        return cand;
      }
    }
    if (!crossed) {
      at_bound = true;
      return cur;
    }
    for (int i = 0; i < 40; ++i) {
      const double mid = 0.5 * (inner + outer);
      if (prof(mid) >= target) inner = mid;
      else outer = mid;
      if (std::abs(outer - inner) < 1e-4 * std::max(1.0, std::abs(hat[which])))
        break;
    }
    return 0.5 * (inner + outer);
  };

  ProfileInterval out;
  out.level = level;
  out.lo = edge(-1, out.lo_at_bound);
  out.hi = edge(+1, out.hi_at_bound);
  return out;
}

}  // namespace prf::inference

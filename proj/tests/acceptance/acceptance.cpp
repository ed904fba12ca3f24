// Acceptance gate: eleven desk-scale criteria covering conservation,
// spectral agreement, finite-population convergence, equilibrium behavior,
// sampling identities, Monte Carlo end-to-end means, synthetic-data
// parameter recovery, and alignment ingest.  One verdict line per
// criterion; the process exits nonzero if any line fails.  Every tolerance
// is pinned here, in code.
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "prf/diffusion.hpp"
#include "prf/inference.hpp"
#include "prf/moran.hpp"
#include "prf/prf_model.hpp"
#include "prf/rng.hpp"
#include "prf/sampling.hpp"
#include "prf/spectral.hpp"
#include "prf/types.hpp"

namespace fs = std::filesystem;
using namespace prf;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const auto t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double u01(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

// Knuth multiplication method; exact for the desk-scale means used here.
int draw_poisson(std::mt19937_64& rng, double lambda) {
  const double L = std::exp(-lambda);
  int k = -1;
  double p = 1.0;
  do {
    ++k;
    p *= u01(rng);
  } while (p > L);
  return k;
}

// --- 1: absorption probabilities conserve mass --------------------------
// P0 is rebuilt from its own payoff (the complement scale function) rather
// than taken as the library's complement, so the sum rule has content.
Verdict absorption_conservation() {
  const double tol = 1e-6, budget = 60.0;
  const double start = now_seconds();
  const Grid grid = Grid::uniform(400, 1e-3);
  double worst = 0.0;
  for (double gamma : {-2.0, 0.0, 1.0, 5.0}) {
    const double s1 = diffusion::scale_fn(1.0, gamma);
    for (double t : {0.05, 0.5, 2.0}) {
      const auto cdf = diffusion::absorption_cdf(t, gamma, grid);
      const auto surv = diffusion::heat_apply([](double) { return 1.0; }, t, gamma, grid);
      const auto comp = diffusion::heat_apply(
          [&](double y) { return diffusion::scale_fn_complement(y, gamma); }, t, gamma,
          grid);
      for (size_t j = 0; j < grid.nodes.size(); ++j) {
        const double p0 =
            (diffusion::scale_fn_complement(grid.nodes[j], gamma) - comp.values[j]) / s1;
        worst = std::max(worst, std::abs(p0 + surv.values[j] + cdf.p1[j] - 1.0));
      }
    }
  }
  const double elapsed = now_seconds() - start;
  return {worst <= tol && elapsed <= budget,
          "max |P0+survive+P1-1| = " + fmt(worst) + " (tol " + fmt(tol) + "), " +
              fmt(elapsed) + "s (budget " + fmt(budget) + "s)"};
}

// --- 2: Crank-Nicolson vs eigenfunction series, neutral case ------------
Verdict spectral_crosscheck() {
  const double tol = 1e-4;
  const int nmax = 60;
  const Grid grid = Grid::uniform(800, 2.5e-4);
  const std::vector<std::function<double(double)>> payoffs = {
      [](double y) { return y * (1.0 - y); },
      [](double y) { return y * y * (1.0 - y); }};
  double worst = 0.0;
  for (const auto& f : payoffs) {
    for (double t : {0.05, 0.2, 1.0}) {
      const auto surf = diffusion::heat_apply(f, t, 0.0, grid);
      for (size_t j = 1; j + 1 < grid.nodes.size(); ++j) {
        const double series = spectral::heat(f, t, grid.nodes[j], nmax);
        worst = std::max(worst, std::abs(surf.values[j] - series));
      }
    }
  }
  return {worst <= tol,
          "sup |CN - series| = " + fmt(worst) + " over 2 payoffs x 3 horizons (tol " +
              fmt(tol) + ")"};
}

// --- 3: decay rate of the surviving mass equals the principal eigenvalue
Verdict eigen_decay() {
  const double lo = 1.9, hi = 2.1;
  const Grid grid = Grid::uniform(400, 1e-3);
  diffusion::HeatOptions opt;
  opt.snapshot_times = {0.5, 1.0, 1.5};
  const auto surf = diffusion::heat_apply([](double y) { return y * (1.0 - y); }, 2.0,
                                          0.0, grid, opt);
  std::vector<double> ts, lns;
  auto supnorm = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
  };
  for (size_t i = 0; i < surf.snapshots.size(); ++i) {
    ts.push_back(surf.snapshot_times[i]);
    lns.push_back(std::log(supnorm(surf.snapshots[i])));
  }
  ts.push_back(surf.t);
  lns.push_back(std::log(supnorm(surf.values)));
  double tbar = 0.0, lbar = 0.0;
  for (size_t i = 0; i < ts.size(); ++i) tbar += ts[i], lbar += lns[i];
  tbar /= ts.size(), lbar /= lns.size();
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < ts.size(); ++i) {
    num += (ts[i] - tbar) * (lns[i] - lbar);
    den += (ts[i] - tbar) * (ts[i] - tbar);
  }
  const double rate = -num / den;
  return {rate >= lo && rate <= hi,
          "fitted decay rate " + fmt(rate) + " over t in [0.5,2] (band [" + fmt(lo) +
              "," + fmt(hi) + "])"};
}

// --- 4: finite-population field vs diffusion mean measure ---------------
// Equilibrium regime: the chain evolves its discretized equilibrium for
// t N^2 steps (a wrong kernel would drift off), binned against the
// analytic bin integrals.  State j covers ((j-1/2)/N, (j+1/2)/N).
Verdict finite_N_convergence() {
  const double tol = 0.05, budget = 300.0;
  const double start = now_seconds();
  const int N = 200;
  const double t = 0.2, theta = 1.0, gamma = 1.0;
  const FiniteParams fp{N, gamma / N, theta / N, static_cast<std::int64_t>(t * N * N)};
  const auto field =
      moran::expected_site_counts(fp, moran::equilibrium_omega(N, theta, gamma));

  const ScaledParams beta{t, theta, gamma};
  const Grid grid = Grid::uniform(800, 1e-3);
  const auto dens =
      model::prf_density(beta, InitialMeasure::equilibrium(theta, gamma), grid);

  double worst_bin = 0.0;
  for (int b = 0; b < 18; ++b) {
    const double a = 0.05 + 0.05 * b;
    double chain = 0.0;
    for (int j = static_cast<int>(std::lround(a * N));
         j < static_cast<int>(std::lround((a + 0.05) * N)); ++j)
      chain += field.expected[j - 1];
    const double integral =
        model::density_mass(dens, (a * N - 0.5) / N, ((a + 0.05) * N - 0.5) / N);
    worst_bin = std::max(worst_bin, std::abs(chain / integral - 1.0));
  }

  const auto fix =
      model::fixation_mean(beta, InitialMeasure::equilibrium(theta, gamma), grid);
  const double fix_rel = std::abs(field.fixed_mean / fix.total - 1.0);
  const double elapsed = now_seconds() - start;
  return {worst_bin <= tol && fix_rel <= tol && elapsed <= budget,
          "worst bin " + fmt(worst_bin) + ", fixations " + fmt(fix_rel) + " (tol " +
              fmt(tol) + "), " + fmt(elapsed) + "s (budget " + fmt(budget) + "s)"};
}

// --- 5: equilibrium is a fixed point; relaxation rate is the spectral gap
Verdict equilibrium_fixed_point() {
  const double tol_fp = 1e-3, rate_lo = 1.8, rate_hi = 2.2;
  const Grid grid = Grid::uniform(800, 1e-3);

  // fixed point through the generic solver path: tabulate w = x nu'(x)
  const double theta = 1.0, gamma = 1.0;
  const double s1 = diffusion::scale_fn(1.0, gamma);
  std::vector<double> w(grid.nodes.size());
  for (size_t j = 0; j < w.size(); ++j)
    w[j] = theta * std::exp(gamma * grid.nodes[j]) *
           diffusion::scale_fn_complement_over_1mx(grid.nodes[j], gamma) / s1;
  const auto dens = model::prf_density({0.5, theta, gamma},
                                       InitialMeasure::tabulated(w), grid);
  double worst = 0.0;
  for (size_t j = 40; j <= 760; ++j)
    worst = std::max(worst, std::abs(dens.total[j] / model::equilibrium_density_m(
                                         grid.nodes[j], theta, gamma) -
                                     1.0));

  // relaxation from an empty field, neutral case, midpoint deficit
  auto deficit = [&](double t) {
    const auto d = model::prf_density({t, 1.0, 0.0}, InitialMeasure::zero(), grid);
    return model::equilibrium_density_m(0.5, 1.0, 0.0) - d.total[400];
  };
  const double rate = std::log(deficit(0.5) / deficit(1.0)) / 0.5;
  return {worst <= tol_fp && rate >= rate_lo && rate <= rate_hi,
          "fixed-point rel err " + fmt(worst) + " (tol " + fmt(tol_fp) +
              "), relaxation rate " + fmt(rate) + " (band [" + fmt(rate_lo) + "," +
              fmt(rate_hi) + "])"};
}

// --- 6: stationary sampled spectrum is theta/k -------------------------
Verdict watterson_spectrum() {
  const double tol = 0.01;
  const int n = 10;
  const double theta = 1.0, t = 5.0;
  const ScaledParams beta{t, theta, 0.0};
  const Grid grid = Grid::uniform(800, 1e-3);
  const auto legacy =
      sampling::legacy_spectrum(n, beta, InitialMeasure::equilibrium(theta, 0.0), grid);
  const auto fresh = sampling::new_spectrum(n, beta, grid);
  double worst = 0.0;
  for (int k = 1; k <= n - 1; ++k) {
    const double total = legacy[k - 1] + fresh.F[k - 1];
    worst = std::max(worst, std::abs(total * k / theta - 1.0));
  }
  return {worst <= tol,
          "max_k |spectrum_k/(theta/k) - 1| = " + fmt(worst) + " for k=1..9 (tol " +
              fmt(tol) + ")"};
}

// --- 7: long-run fixation flux ------------------------------------------
Verdict fixation_flux() {
  const double tol = 0.02;
  double worst = 0.0;
  std::string parts;
  for (double gamma : {0.0, 2.0}) {
    const ScaledParams beta{5.0, 1.0, gamma};
    const Grid grid = Grid::uniform(800, 1e-3);
    const auto series = model::fresh_fixation_series(beta, grid);
    const double slope = (series.values[5000] - series.values[3000]) /
                         (series.times[5000] - series.times[3000]);
    const double target = beta.theta / diffusion::scale_fn(1.0, gamma);
    const double rel = std::abs(slope / target - 1.0);
    worst = std::max(worst, rel);
    parts += (parts.empty() ? "" : ", ") + std::string("gamma=") + fmt(gamma) + ": " +
             fmt(rel);
  }
  return {worst <= tol, "dG/dt rel err {" + parts + "} (tol " + fmt(tol) + ")"};
}

// --- 8: randomized fate partition and polymorphism-mean consistency -----
Verdict randomized_identities() {
  const double tol = 1e-6;
  auto rng = make_rng(2024, 0);
  const Grid grid = Grid::uniform(200, 2e-3);
  double worst_sum = 0.0, worst_c2 = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const double t = 0.05 + 1.45 * u01(rng);
    const double gamma = -3.0 + 6.0 * u01(rng);
    const int n = 2 + static_cast<int>(9.0 * u01(rng));
    const double x = 0.02 + 0.96 * u01(rng);
    const auto fate = sampling::sample_fate(x, n, {t, 1.0, gamma}, grid);
    worst_sum = std::max(worst_sum, std::abs(fate.I + fate.J + fate.K - 1.0));

    const int m2 = 2 + static_cast<int>(7.0 * u01(rng));
    const int n2 = 2 + static_cast<int>(7.0 * u01(rng));
    const double theta = 0.2 + 2.8 * u01(rng);
    const auto lm = sampling::legacy_means(m2, n2, {t, theta, gamma},
                                           InitialMeasure::equilibrium(theta, gamma),
                                           grid);
    worst_c2 = std::max(worst_c2, std::abs(lm.C2 - lm.C2_alt) /
                                      std::max(1.0, std::abs(lm.C2)));
  }
  return {worst_sum <= tol && worst_c2 <= tol,
          "100 draws: max |I+J+K-1| = " + fmt(worst_sum) + ", max C2 form gap = " +
              fmt(worst_c2) + " (tol " + fmt(tol) + ")"};
}

// --- 9: two diverging populations, sampled tables vs expected means -----
Verdict pair_simulation_means() {
  const double tol = 0.05, floor = 0.5, budget = 600.0;
  const double start = now_seconds();
  moran::PairSimConfig cfg;
  cfg.N = 100;
  cfg.t = 0.3;
  cfg.theta_s = 8.0;
  cfg.theta_r = 6.0;
  cfg.gamma = 1.0;
  cfg.m = 5;
  cfg.n = 5;
  cfg.loci = 2000;
  cfg.seed = 0;
  cfg.threads = 1;
  const auto tabs = moran::simulate_pair_tables(cfg);

  const Grid grid = Grid::uniform(800, 1e-3);
  const auto expect = sampling::table_means(
      cfg.m, cfg.n, {cfg.t, cfg.theta_s, 0.0}, {cfg.t, cfg.theta_r, cfg.gamma},
      InitialMeasure::equilibrium(cfg.theta_s, 0.0),
      InitialMeasure::equilibrium(cfg.theta_r, cfg.gamma), grid);

  const auto cell = [](const CountTable& t, int c) {
    switch (c) {
      case 0: return t.K_s;
      case 1: return t.O_s;
      case 2: return t.H_s;
      case 3: return t.K_r;
      case 4: return t.O_r;
      default: return t.H_r;
    }
  };
  static const char* names[] = {"K_s", "O_s", "H_s", "K_r", "O_r", "H_r"};
  double worst = 0.0;
  std::string worst_name = "-";
  for (int c = 0; c < 6; ++c) {
    const double target = cell(expect.means, c);
    if (target < floor) continue;
    double emp = 0.0;
    for (const auto& t : tabs) emp += cell(t, c);
    emp /= tabs.size();
    const double rel = std::abs(emp / target - 1.0);
    if (rel > worst) worst = rel, worst_name = names[c];
  }
  const double elapsed = now_seconds() - start;
  return {worst <= tol && elapsed <= budget,
          "2000 loci, worst cell " + std::string(worst_name) + " rel err " + fmt(worst) +
              " (tol " + fmt(tol) + "), " + fmt(elapsed) + "s (budget " + fmt(budget) +
              "s)"};
}

// --- 10: synthetic-data recovery of (t, theta_s, theta_r, gamma) --------
// Fixed protocol, run once: truth (0.3, 4, 2, 1), m=n=5, 50 loci per seed,
// per-cell Poisson draws from the fine-grid means on streams 9000+cell,
// default fit configuration with fit seed = data seed, seeds 0..19.
Verdict inference_recovery() {
  const double band_t = 0.05, band_theta = 0.10, band_gamma = 0.3;
  const ScaledParams truth_s{0.3, 4.0, 0.0}, truth_r{0.3, 2.0, 1.0};
  const int m = 5, n = 5, loci = 50, seeds = 20;

  const Grid grid = Grid::uniform(800, 1e-3);
  const auto expect = sampling::table_means(
      m, n, truth_s, truth_r, InitialMeasure::equilibrium(truth_s.theta, 0.0),
      InitialMeasure::equilibrium(truth_r.theta, truth_r.gamma), grid);
  const double mu[6] = {expect.means.K_s, expect.means.O_s, expect.means.H_s,
                        expect.means.K_r, expect.means.O_r, expect.means.H_r};

  double sum_t = 0.0, sum_ths = 0.0, sum_thr = 0.0, sum_g = 0.0;
  int converged = 0;
  for (int seed = 0; seed < seeds; ++seed) {
    std::vector<CountTable> tables(loci);
    for (auto& t : tables) {
      t.layout = TableLayout::DOHRS;
      t.m = m;
      t.n = n;
    }
    for (int c = 0; c < 6; ++c) {
      auto rng = make_rng(static_cast<std::uint64_t>(seed), 9000 + c);
      for (int l = 0; l < loci; ++l) {
        const double v = draw_poisson(rng, mu[c]);
        switch (c) {
          case 0: tables[l].K_s = v; break;
          case 1: tables[l].O_s = v; break;
          case 2: tables[l].H_s = v; break;
          case 3: tables[l].K_r = v; break;
          case 4: tables[l].O_r = v; break;
          default: tables[l].H_r = v; break;
        }
      }
    }
    inference::FitConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(seed);
    const auto fit = inference::fit_mle(tables, cfg);
    converged += fit.converged ? 1 : 0;
    sum_t += fit.t;
    sum_ths += fit.theta_s;
    sum_thr += fit.theta_r;
    sum_g += fit.gamma;
  }
  const double avg_t = sum_t / seeds, avg_ths = sum_ths / seeds,
               avg_thr = sum_thr / seeds, avg_g = sum_g / seeds;
  const bool ok = std::abs(avg_t - truth_s.t) <= band_t &&
                  std::abs(avg_ths - truth_s.theta) <= band_theta * truth_s.theta &&
                  std::abs(avg_thr - truth_r.theta) <= band_theta * truth_r.theta &&
                  std::abs(avg_g - truth_r.gamma) <= band_gamma && converged == seeds;
  return {ok, "20-seed averages: t " + fmt(avg_t) + " (true 0.3 +- 0.05), theta_s " +
                  fmt(avg_ths) + " (4 +- 10%), theta_r " + fmt(avg_thr) +
                  " (2 +- 10%), gamma " + fmt(avg_g) + " (1 +- 0.3), converged " +
                  std::to_string(converged) + "/20"};
}

// --- 11: golden FASTA corpora through the installed binary --------------
Verdict ingest_goldens() {
  struct Golden {
    const char* fasta;
    const char* expect;
    const char* sp1;
    const char* sp2;
    int offset;
  };
  const Golden goldens[] = {
      {"g1.fasta", "g1.dohrs.tsv", "a1,a2", "b1,b2", 0},
      {"g2.fasta", "g2.dohrs.tsv", "a1,a2", "b1,b2", 0},
      {"g3.fasta", "g3.dohrs.tsv", "a1,a2", "b1,b2", 0},
      {"g4.fasta", "g4.dohrs.tsv", "a1,a2", "b1,b2", 1},
      {"g5.fasta", "g5.dohrs.tsv", "a1,a2,a3", "b1,b2", 0},
      {"g6.fasta", "g6.dohrs.tsv", "a1,a2", "b1,b2", 0},
  };
  const fs::path dir =
      fs::temp_directory_path() / ("prf_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  int matched = 0, total = 0;
  for (const auto& g : goldens) {
    ++total;
    const fs::path out = dir / g.fasta;
    std::string cmd = std::string(CLI_PATH) + " --out " + out.string() +
                      " tables --count --in " +
                      (fs::path(DATA_DIR) / g.fasta).string() + " --species1 " + g.sp1 +
                      " --species2 " + g.sp2;
    if (g.offset) cmd += " --offset " + std::to_string(g.offset);
    cmd += " >/dev/null 2>/dev/null";
    const int status = std::system(cmd.c_str());
    if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) continue;
    if (slurp(out / "observed_dohrs.tsv") == slurp(fs::path(DATA_DIR) / g.expect))
      ++matched;
  }
  return {matched == total, std::to_string(matched) + "/" + std::to_string(total) +
                                " corpora byte-identical to hand counts"};
}

int report(int idx, const char* name, const std::function<Verdict()>& run) {
  Verdict v;
  try {
    v = run();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  std::printf("[%2d] %-36s %s  %s\n", idx, name, v.pass ? "PASS" : "FAIL",
              v.detail.c_str());
  std::fflush(stdout);
  return v.pass ? 0 : 1;
}

}  // namespace

int main() {
  int failures = 0;
  failures += report(1, "absorption conservation", absorption_conservation);
  failures += report(2, "neutral spectral cross-check", spectral_crosscheck);
  failures += report(3, "principal eigenvalue decay", eigen_decay);
  failures += report(4, "finite-N field convergence", finite_N_convergence);
  failures += report(5, "equilibrium fixed point/relaxation", equilibrium_fixed_point);
  failures += report(6, "stationary sampled spectrum", watterson_spectrum);
  failures += report(7, "fixation flux rate", fixation_flux);
  failures += report(8, "randomized sampling identities", randomized_identities);
  failures += report(9, "two-population end-to-end means", pair_simulation_means);
  failures += report(10, "synthetic-data parameter recovery", inference_recovery);
  failures += report(11, "alignment ingest golden corpora", ingest_goldens);
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}

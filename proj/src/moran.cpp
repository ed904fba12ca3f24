#include "prf/moran.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include "prf/parallel.hpp"
#include "prf/rng.hpp"

namespace prf::moran {

namespace {
constexpr double kSigmaNeutral = 1e-12;  // |σ| below this uses neutral formulas
}

MoranMatrix step_matrix(const FiniteParams& fp) {
  fp.validate();
  const int N = fp.N;
  MoranMatrix pm;
  pm.N = N;
  pm.up.assign(N + 1, 0.0);
  pm.down.assign(N + 1, 0.0);
  pm.stay.assign(N + 1, 1.0);  // traps at 0 and N
  for (int i = 1; i < N; ++i) {
    const double x = double(i) / N;
    const double base = x * (1.0 - x) / (1.0 + fp.sigma * x);
    pm.up[i] = (1.0 + fp.sigma) * base;
    pm.down[i] = base;
    pm.stay[i] = 1.0 - pm.up[i] - pm.down[i];
  }
  return pm;
}

double MoranMatrix::row_sum_error() const {
  double err = 0.0;
  for (int i = 0; i <= N; ++i)
    err = std::max(err, std::abs(up[i] + down[i] + stay[i] - 1.0));
  return err;
}

double absorption_profile(const FiniteParams& fp, int i, int m) {
  fp.validate();
  if (!(0 <= i && i <= m && m <= fp.N && m >= 1))
    throw std::invalid_argument("absorption_profile: need 0 <= i <= m <= N");
  if (std::abs(fp.sigma) < kSigmaNeutral) return double(i) / m;
  // (1-(1+σ)^{-i}) / (1-(1+σ)^{-m}), cancellation-free
  const double l = std::log1p(fp.sigma);
  return std::expm1(-i * l) / std::expm1(-m * l);
}

ChainGreen chain_green(const FiniteParams& fp) {
  fp.validate();
  const auto pm = step_matrix(fp);
  const int N = fp.N;
  ChainGreen cg;
  cg.N = N;
  cg.alpha.assign(N, 0.0);
  cg.A.assign(N + 1, 0.0);
  cg.h.assign(N + 1, 0.0);
  cg.alpha[0] = 1.0;
  for (int j = 1; j < N; ++j) cg.alpha[j] = cg.alpha[j - 1] * pm.down[j] / pm.up[j];
  for (int i = 1; i <= N; ++i) cg.A[i] = cg.A[i - 1] + cg.alpha[i - 1];
  for (int i = 0; i <= N; ++i) cg.h[i] = cg.A[i] / cg.A[N];
  cg.g.assign(size_t(N - 1) * (N - 1), 0.0);
  for (int i = 1; i < N; ++i)
    for (int j = 1; j < N; ++j) {
      const int lo = std::min(i, j), hi = std::max(i, j);
      cg.g[size_t(i - 1) * (N - 1) + (j - 1)] =
          cg.A[N] * cg.h[lo] * (1.0 - cg.h[hi]) / (cg.alpha[j] * pm.up[j]);
    }
  return cg;
}

double ChainGreen::green(int i, int j) const {
  if (!(1 <= i && i < N && 1 <= j && j < N))
    throw std::invalid_argument("ChainGreen: states must be interior");
  return g[size_t(i - 1) * (N - 1) + (j - 1)];
}

double ChainGreen::dual_green(int i, int j) const {
  return green(i, j) * h[j] / h[i];
}

double ChainGreen::dual_expected_steps(int i) const {
  double acc = 0.0;
  for (int j = 1; j < N; ++j) acc += dual_green(i, j);
  return acc;
}

namespace {

// w <- w P for tridiagonal P with traps; w has N+1 entries.
void row_mult(const MoranMatrix& pm, const std::vector<double>& w,
              std::vector<double>& out) {
  const int N = pm.N;
  for (int j = 0; j <= N; ++j) {
    double acc = w[j] * pm.stay[j];
    if (j >= 1) acc += w[j - 1] * pm.up[j - 1];
    if (j <= N - 1) acc += w[j + 1] * pm.down[j + 1];
    out[j] = acc;
  }
}

}  // namespace

SiteCountField expected_site_counts(const FiniteParams& fp,
                                    const std::vector<double>& omega0) {
  fp.validate();
  const int N = fp.N;
  if (omega0.size() != size_t(N - 1))
    throw std::invalid_argument("expected_site_counts: omega0 must have N-1 entries");
  const auto pm = step_matrix(fp);

  std::vector<double> legacy(N + 1, 0.0);
  for (int i = 1; i < N; ++i) legacy[i] = omega0[i - 1];
  std::vector<double> born(N + 1, 0.0);  // e_1 P^r
  born[1] = 1.0;
  std::vector<double> immig(N + 1, 0.0), scratch(N + 1, 0.0);

  for (std::int64_t r = 0; r < fp.k; ++r) {
    for (int j = 0; j <= N; ++j) immig[j] += born[j];  // age-r cohort
    row_mult(pm, born, scratch);
    born.swap(scratch);
    row_mult(pm, legacy, scratch);
    legacy.swap(scratch);
  }

  SiteCountField field;
  field.N = N;
  field.omega0 = omega0;
  field.expected.resize(N);
  for (int j = 1; j <= N; ++j)
    field.expected[j - 1] = legacy[j] + fp.mu * immig[j];
  field.fixed_mean = field.expected[N - 1];
  return field;
}

namespace {

// Evolve one chain for at most `steps` steps, skipping hold states with
// geometric jumps; returns the final state.
int evolve_chain(const MoranMatrix& pm, int state, std::int64_t steps,
                 std::mt19937_64& rng) {
  while (steps > 0 && state > 0 && state < pm.N) {
    const double active = pm.up[state] + pm.down[state];
    std::geometric_distribution<std::int64_t> holds(active);
    const std::int64_t consumed = holds(rng) + 1;
    if (consumed > steps) break;
    steps -= consumed;
    std::bernoulli_distribution up(pm.up[state] / active);
    state += up(rng) ? 1 : -1;
  }
  return state;
}

}  // namespace

std::vector<double> equilibrium_omega(int N, double theta, double gamma) {
  const auto nu = InitialMeasure::equilibrium(theta, gamma);
  std::vector<double> omega(N - 1);
  for (int i = 1; i < N; ++i) omega[i - 1] = nu.weight(double(i) / N) / i;
  return omega;
}

EmpiricalField simulate_field(const FiniteParams& fp, const std::vector<double>& omega0,
                              std::uint64_t seed, int reps, int threads) {
  fp.validate();
  const int N = fp.N;
  if (omega0.size() != size_t(N - 1))
    throw std::invalid_argument("simulate_field: omega0 must have N-1 entries");
  if (reps < 1) throw std::invalid_argument("simulate_field: reps must be >= 1");
  const auto pm = step_matrix(fp);
  const double legacy_total = [&] {
    double acc = 0.0;
    for (double w : omega0) acc += w;
    return acc;
  }();

  const int workers = std::max(1, std::min(resolve_threads(threads), reps));
  // integer accumulators keep the merge exact and order-independent
  std::vector<std::vector<std::int64_t>> sums(workers), sqs(workers);
  for (int w = 0; w < workers; ++w) {
    sums[w].assign(N + 1, 0);
    sqs[w].assign(N + 1, 0);
  }

  parallel_for(reps, workers, [&](int rep) {
    auto rng = make_rng(seed, std::uint64_t(rep));
    std::vector<std::int64_t> counts(N + 1, 0);
    // legacy sites
    std::poisson_distribution<int> legacy_count(legacy_total);
    std::discrete_distribution<int> start(omega0.begin(), omega0.end());
    const int L = legacy_total > 0.0 ? legacy_count(rng) : 0;
    for (int sNum = 0; sNum < L; ++sNum) {
      const int i0 = 1 + start(rng);
      counts[evolve_chain(pm, i0, fp.k, rng)]++;
    }
    // new mutations: Poisson(μk) chains, ages uniform on 0..k-1
    if (fp.mu > 0.0 && fp.k > 0) {
      std::poisson_distribution<int> fresh_count(fp.mu * double(fp.k));
      std::uniform_int_distribution<std::int64_t> age(0, fp.k - 1);
      const int M = fresh_count(rng);
      for (int sNum = 0; sNum < M; ++sNum)
        counts[evolve_chain(pm, 1, age(rng), rng)]++;
    }
    const int w = rep % workers;
    for (int j = 1; j <= N; ++j) {
      sums[w][j] += counts[j];
      sqs[w][j] += counts[j] * counts[j];
    }
  });

  EmpiricalField out;
  out.N = N;
  out.reps = reps;
  out.mean.assign(N, 0.0);
  out.variance.assign(N, 0.0);
  for (int j = 1; j <= N; ++j) {
    std::int64_t s = 0, q = 0;
    for (int w = 0; w < workers; ++w) {
      s += sums[w][j];
      q += sqs[w][j];
    }
    const double mean = double(s) / reps;
    out.mean[j - 1] = mean;
    out.variance[j - 1] =
        reps > 1 ? (double(q) - reps * mean * mean) / (reps - 1) : 0.0;
  }
  out.fixed_mean = out.mean[N - 1];
  return out;
}

double dual_entrance_cdf_mc(const FiniteParams& fp, double t, std::uint64_t seed,
                            int reps, int threads) {
  fp.validate();
  const int N = fp.N;
  const auto pm = step_matrix(fp);
  const auto cg = chain_green(fp);
  const std::int64_t horizon = std::llround(t * double(N) * double(N));

  // h-transformed transitions; absorbing only at N
  std::vector<double> up(N, 0.0), down(N, 0.0);
  for (int i = 1; i < N; ++i) {
    up[i] = pm.up[i] * cg.h[i + 1] / cg.h[i];
    down[i] = (i > 1) ? pm.down[i] * cg.h[i - 1] / cg.h[i] : 0.0;
  }

  const int workers = std::max(1, std::min(resolve_threads(threads), reps));
  std::vector<std::int64_t> hits(workers, 0);
  parallel_for(reps, workers, [&](int rep) {
    auto rng = make_rng(seed, std::uint64_t(rep));
    int state = 1;
    std::int64_t steps = horizon;
    while (steps > 0 && state < N) {
      const double active = up[state] + down[state];
      std::geometric_distribution<std::int64_t> holds(active);
      const std::int64_t consumed = holds(rng) + 1;
      if (consumed > steps) break;
      steps -= consumed;
      std::bernoulli_distribution move_up(up[state] / active);
      state += move_up(rng) ? 1 : -1;
    }
    if (state == N) hits[rep % workers]++;
  });
  std::int64_t total = 0;
  for (auto hcount : hits) total += hcount;
  return double(total) / reps;
}

std::vector<CountTable> simulate_pair_tables(const PairSimConfig& cfg) {
  if (cfg.N < 2 || cfg.loci < 1 || cfg.m < 1 || cfg.n < 1)
    throw std::invalid_argument("simulate_pair_tables: bad configuration");
  const int N = cfg.N;
  const std::int64_t k = std::llround(cfg.t * double(N) * double(N));

  struct ClassSetup {
    MoranMatrix pm;
    std::vector<double> omega;
    double omega_total;
    double mu;
  };
  auto make_class = [&](double theta, double gamma) {
    FiniteParams fp{N, gamma / N, theta / N, k};
    ClassSetup cs{step_matrix(fp), equilibrium_omega(N, theta, gamma), 0.0, fp.mu};
    for (double w : cs.omega) cs.omega_total += w;
    return cs;
  };
  const ClassSetup silent = make_class(cfg.theta_s, 0.0);
  const ClassSetup repl = make_class(cfg.theta_r, cfg.gamma);

  std::vector<CountTable> tables(cfg.loci);
  const int workers = std::max(1, std::min(resolve_threads(cfg.threads), cfg.loci));
  parallel_for(cfg.loci, workers, [&](int locus) {
    auto rng = make_rng(cfg.seed, std::uint64_t(locus));
    CountTable tab;
    tab.layout = TableLayout::DOHRS;
    tab.m = cfg.m;
    tab.n = cfg.n;

    auto run_class = [&](const ClassSetup& cs, double& K, double& O, double& H) {
      auto sample_pair = [&](int i1, int i2) {
        std::binomial_distribution<int> b1(cfg.m, double(i1) / N);
        std::binomial_distribution<int> b2(cfg.n, double(i2) / N);
        const int a1 = i1 == 0 ? 0 : (i1 == N ? cfg.m : b1(rng));
        const int a2 = i2 == 0 ? 0 : (i2 == N ? cfg.n : b2(rng));
        const bool poly1 = a1 > 0 && a1 < cfg.m;
        const bool poly2 = a2 > 0 && a2 < cfg.n;
        if (poly1 && poly2) H += 1.0;
        else if (poly1 || poly2) O += 1.0;
        else if ((a1 == cfg.m) != (a2 == cfg.n)) K += 1.0;
      };
      // shared ancestral sites diverge independently in the two species
      std::poisson_distribution<int> legacy_count(cs.omega_total);
      std::discrete_distribution<int> start(cs.omega.begin(), cs.omega.end());
      const int L = legacy_count(rng);
      for (int sNum = 0; sNum < L; ++sNum) {
        const int i0 = 1 + start(rng);
        const int i1 = evolve_chain(cs.pm, i0, k, rng);
        const int i2 = evolve_chain(cs.pm, i0, k, rng);
        sample_pair(i1, i2);
      }
      // species-private new mutations
      if (cs.mu > 0.0 && k > 0) {
        std::poisson_distribution<int> fresh_count(cs.mu * double(k));
        std::uniform_int_distribution<std::int64_t> age(0, k - 1);
        for (int species = 0; species < 2; ++species) {
          const int M = fresh_count(rng);
          for (int sNum = 0; sNum < M; ++sNum) {
            const int i = evolve_chain(cs.pm, 1, age(rng), rng);
            if (species == 0) sample_pair(i, 0);
            else sample_pair(0, i);
          }
        }
      }
    };
    run_class(silent, tab.K_s, tab.O_s, tab.H_s);
    run_class(repl, tab.K_r, tab.O_r, tab.H_r);
    tables[locus] = tab;
  });
  return tables;
}

}  // namespace prf::moran

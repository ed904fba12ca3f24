#pragma once

#include <cstdint>
#include <vector>

#include "prf/types.hpp"

namespace prf::moran {

/// One-step transition probabilities of the Moran chain on {0..N} with
/// absorbing traps at 0 and N:
///   p(i,i+1) = (1+σ)(i/N)(1-i/N) / (1+σ i/N)
///   p(i,i-1) =       (i/N)(1-i/N) / (1+σ i/N)
struct MoranMatrix {
  int N = 0;
  std::vector<double> up, down, stay;  // indexed by state 0..N

  double row_sum_error() const;  // max_i |up+down+stay-1|
};
MoranMatrix step_matrix(const FiniteParams& fp);

/// Gambler's-ruin profile P_i(T_m < T_0) for 0 <= i <= m <= N.
double absorption_profile(const FiniteParams& fp, int i, int m);

/// Potential theory of the chain killed at {0, N}:
///   h_i = P_i(T_N < T_0),  g(i,j) = expected visits to j from i,
///   dual_green is the h-transform kernel, dual_step the h-transformed chain.
struct ChainGreen {
  int N = 0;
  std::vector<double> h;      // 0..N
  std::vector<double> alpha;  // α_j = Π_{k<=j} p(k,k-1)/p(k,k+1), j = 0..N-1
  std::vector<double> A;      // A_i = Σ_{j<i} α_j, i = 0..N
  std::vector<double> g;      // row-major (N-1)², interior states 1..N-1

  double green(int i, int j) const;
  double dual_green(int i, int j) const;  // g̃(i,j) = g(i,j) h_j / h_i
  /// Row sum Σ_j g̃(i,j): expected steps to fixation for the dual chain.
  double dual_expected_steps(int i) const;
};
ChainGreen chain_green(const FiniteParams& fp);

/// Expected site counts after k steps when sites start at intensity
/// omega0 (interior states 1..N-1) and one new mutant enters per step
/// with intensity mu (immigration ages r = 0..k-1):
///   expected[j-1] = E(N_k(j)) = Σ_i ω_i p^k(i,j) + μ Σ_{r<k} p^r(1,j).
struct SiteCountField {
  int N = 0;
  std::vector<double> expected;  // j = 1..N
  double fixed_mean = 0.0;       // = expected[N-1]
  std::vector<double> omega0;
};
SiteCountField expected_site_counts(const FiniteParams& fp,
                                    const std::vector<double>& omega0);

/// Monte Carlo version of the field; wait states are skipped geometrically.
struct EmpiricalField {
  int N = 0;
  int reps = 0;
  std::vector<double> mean, variance;  // per state j = 1..N
  double fixed_mean = 0.0;
};
EmpiricalField simulate_field(const FiniteParams& fp, const std::vector<double>& omega0,
                              std::uint64_t seed, int reps, int threads = 1);

/// Fraction of h-transformed (dual) chains started at state 1 that reach N
/// within t*N² steps; compares against the diffusion entrance CDF.
double dual_entrance_cdf_mc(const FiniteParams& fp, double t, std::uint64_t seed,
                            int reps, int threads = 1);

/// Discretized equilibrium intensity: ω_i = ν'_{θ,γ}(i/N)/N, i = 1..N-1.
std::vector<double> equilibrium_omega(int N, double theta, double gamma);

/// Two daughter Moran populations diverging from a common equilibrium
/// ancestor for k = t N² steps, binomially sampled (m, n); one DOHRS table
/// per locus.  Silent sites use (theta_s, γ=0), replacement (theta_r, γ).
struct PairSimConfig {
  int N = 100;
  double t = 0.2;
  double theta_s = 1.0, theta_r = 1.0, gamma = 0.0;
  int m = 5, n = 5;
  int loci = 100;
  std::uint64_t seed = 0;
  int threads = 1;
};
std::vector<CountTable> simulate_pair_tables(const PairSimConfig& cfg);

}  // namespace prf::moran

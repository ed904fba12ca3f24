#pragma once

#include <map>
#include <vector>

#include "prf/diffusion.hpp"
#include "prf/types.hpp"

namespace prf::sampling {

/// Fate of a site at frequency x after time t under a size-n sample:
///   I: lost or sampled all-wild;  J: sampled polymorphic;
///   K: fixed or sampled all-mutant.  I + J + K = 1.
struct SampleFate {
  double I = 0.0, J = 0.0, K = 0.0;
};

/// Killed-semigroup surfaces for one (beta, {sizes}, grid), shared by all
/// sampling-mean integrals.  Nine tridiagonal solves for two sizes.
class FateContext {
 public:
  FateContext(const ScaledParams& beta, const std::vector<int>& sizes,
              const Grid& grid);

  const ScaledParams& beta() const { return beta_; }
  const Grid& grid() const { return grid_; }

  SampleFate fate(double x, int size) const;
  double I(double x, int size) const;
  double K(double x, int size) const;
  double J(double x, int size) const;
  /// Bounded ratios K(x)/x and J(x)/x (both vanish linearly at 0).
  double K_over_x(double x, int size) const;
  double J_over_x(double x, int size) const;

  /// Density of new-mutation sites w.r.t. m: f_N(y) = θ P_y(T_0 <= t).
  double f_N(double y) const;
  /// f_N(y)/(1-y), bounded up to y = 1.
  double f_N_over_1my(double y) const;

  /// ∫_0^t P̃_0(T_1 <= u) du on the solver's time lattice.
  double entrance_integral() const { return entrance_integral_; }
  /// G_N = (θ/s(1)) entrance_integral().
  double G_N() const;

 private:
  struct SizeSurfaces {
    std::vector<double> I_vals, K_vals, J_vals;
    std::vector<double> K_over, J_over;  // node ratios over x
  };
  const SizeSurfaces& size_surf(int size) const;

  ScaledParams beta_;
  Grid grid_;
  double s1_;
  std::vector<double> fN_vals_;
  std::vector<double> fN_over_;  // node ratios over (1-y)
  std::map<int, SizeSurfaces> sizes_;
  double entrance_integral_ = 0.0;
};

/// One-off fate evaluation (builds a single-size context).
SampleFate sample_fate(double x, int n, const ScaledParams& beta, const Grid& grid);

/// Expected counts from legacy (shared ancestral) sites:
///   C1: fixed differences, C2: one-species polymorphisms, C3: shared
///   polymorphisms.  C2_alt evaluates the equivalent complement form.
struct LegacyMeans {
  double C1 = 0.0, C2 = 0.0, C3 = 0.0;
  double C2_alt = 0.0;
};
LegacyMeans legacy_means(int m, int n, const ScaledParams& beta,
                         const InitialMeasure& nu, const Grid& grid);
LegacyMeans legacy_means(const FateContext& ctx, int m, int n,
                         const InitialMeasure& nu);

/// Expected counts from new mutations in one species:
///   F[k-1] = F_N(beta, n, k) for k = 1..n (mutant sample count k),
///   E_N = Σ_{k<n} F[k-1] (polymorphic), D_N = G_N + F[n-1] (difference).
struct NewSpectrum {
  std::vector<double> F;
  double E_N = 0.0;
  double E_N_direct = 0.0;  // single-integral form of E_N
  double D_N = 0.0;
  double G_N = 0.0;
};
NewSpectrum new_spectrum(int n, const ScaledParams& beta, const Grid& grid);
NewSpectrum new_spectrum(const FateContext& ctx, int n);

/// Sampled spectrum of the legacy density: ∫ f_L(y) C(n,k) y^k (1-y)^{n-k} m(dy).
std::vector<double> legacy_spectrum(int n, const ScaledParams& beta,
                                    const InitialMeasure& nu, const Grid& grid);

/// Expected DOHRS table: per class, E(K) = C1 + D_N(m) + D_N(n),
/// E(O) = C2 + E_N(m) + E_N(n), E(H) = C3.
struct ExpectedTable {
  CountTable means;  // layout DOHRS, real-valued cells
  struct Components {
    LegacyMeans legacy;
    NewSpectrum spectrum_m, spectrum_n;
  };
  Components silent, replacement;
};
ExpectedTable table_means(int m, int n, const ScaledParams& beta_s,
                          const ScaledParams& beta_r, const InitialMeasure& nu_s,
                          const InitialMeasure& nu_r, const Grid& grid);

void to_json(nlohmann::json& j, const LegacyMeans& v);
void to_json(nlohmann::json& j, const NewSpectrum& v);
void to_json(nlohmann::json& j, const ExpectedTable& v);

}  // namespace prf::sampling

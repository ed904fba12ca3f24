#pragma once

#include <vector>

#include "prf/types.hpp"

namespace prf::model {

/// Equilibrium intensity θ(s(1)-s(y))/s(1) as a density w.r.t. the speed
/// measure m; the Lebesgue version multiplies by m'(y) and carries the
/// 1/y singularity.
double equilibrium_density_m(double y, double theta, double gamma);
double equilibrium_density_lebesgue(double y, double theta, double gamma);

/// Site-frequency intensity at horizon t, split into sites inherited from
/// nu ("legacy") and sites from mutation inflow ("fresh"); all three arrays
/// are densities w.r.t. m at the grid nodes.
struct PrfDensity {
  ScaledParams beta;
  std::vector<double> nodes;
  std::vector<double> legacy, fresh, total;
};
PrfDensity prf_density(const ScaledParams& beta, const InitialMeasure& nu,
                       const Grid& grid);

/// ∫_a^b total(y) m(dy), for frequency-bin comparisons (a, b interior).
double density_mass(const PrfDensity& d, double a, double b);

/// Expected fixations in (0, t]: legacy = G_L = ∫ P_x(T_1<=t) nu(dx),
/// fresh = G_N = (θ/s(1)) ∫_0^t P̃_0(T_1<=u) du.
struct FixationMean {
  double legacy = 0.0;
  double fresh = 0.0;
  double total = 0.0;
};
FixationMean fixation_mean(const ScaledParams& beta, const InitialMeasure& nu,
                           const Grid& grid);

/// Same quantity evaluated through the alternative grouping
///   (1/s(1)) [ ∫s dnu - ∫N(t,s) dnu + θt - θ∫_0^t (1 - P̃_0(T_1<=u)) du ],
/// which exercises different quadratures; used as a consistency check.
FixationMean fixation_mean_alt(const ScaledParams& beta, const InitialMeasure& nu,
                               const Grid& grid);

/// G_N as a function of u on the solver's time lattice, for flux estimates.
struct FixationSeries {
  std::vector<double> times, values;
};
FixationSeries fresh_fixation_series(const ScaledParams& beta, const Grid& grid);

}  // namespace prf::model

#pragma once

#include <functional>
#include <vector>

#include "prf/types.hpp"

namespace prf::diffusion {

// Natural scale and speed of the generator L = x(1-x) d²/dx² + γ x(1-x) d/dx:
//   s(x)  = (1 - e^{-γx})/γ       (= x when γ = 0),
//   m(dx) = e^{γx} / (x(1-x)) dx.

double scale_fn(double x, double gamma);
/// s(1) - s(x) without cancellation.
double scale_fn_complement(double x, double gamma);
/// (s(1) - s(x)) / (1 - x), continuous up to x = 1.
double scale_fn_complement_over_1mx(double x, double gamma);
/// s(x) / x, continuous down to x = 0.
double scale_fn_over_x(double x, double gamma);
/// Speed density e^{γx}/(x(1-x)); throws std::domain_error at x in {0,1}.
double speed_density(double x, double gamma);
/// P_x(T_1 < T_0) = s(x)/s(1).
double ultimate_fixation(double x, double gamma);
/// Green kernel g(x,y) = (s(1)-s(x∨y)) s(x∧y) / s(1) on (0,1)².
double green_kernel(double x, double y, double gamma);

struct HeatOptions {
  /// Store every `store_every`-th time level (0 = final level only).
  int store_every = 0;
  /// Record the entrance ratio r(u) = lim_{x->0} v(u,x)/s(x) at every level.
  bool record_entrance = false;
  /// Capture full surfaces at these times (snapped to the step lattice).
  std::vector<double> snapshot_times;
};

/// Solution surface of dv/du = x(1-x) v'' + γ x(1-x) v' with zero Dirichlet
/// data.  v(t, x) equals N(t,f)(x) = ∫ p(t,x,y) f(y) m(dy): the killed
/// semigroup applied to f (boundary values of f never enter).
struct HeatSurface {
  double t = 0.0;
  double gamma = 0.0;
  std::vector<double> nodes;
  std::vector<double> values;  // v(t, x_j); values at j=0 and j=J are 0

  std::vector<double> level_times;            // stored intermediate levels
  std::vector<std::vector<double>> levels;
  std::vector<double> snapshot_times;
  std::vector<std::vector<double>> snapshots;
  std::vector<double> entrance_times;         // r(u) series when recorded
  std::vector<double> entrance_ratios;

  /// Cubic (4-point Lagrange) interpolation of the final level.
  double value_at(double x) const;
};

HeatSurface heat_apply(const std::vector<double>& payoff_at_nodes, double t,
                       double gamma, const Grid& grid, const HeatOptions& opts = {});
HeatSurface heat_apply(const std::function<double(double)>& payoff, double t,
                       double gamma, const Grid& grid, const HeatOptions& opts = {});

/// Absorption probabilities by time t at every grid node:
///   p1[j] = P_{x_j}(T_1 <= t) = (s(x_j) - N(t,s)(x_j)) / s(1)
///   p0[j] = P_{x_j}(T_0 <= t) = 1 - N(t,1)(x_j) - p1[j]
struct AbsorptionCdf {
  std::vector<double> nodes, p0, p1;
};
AbsorptionCdf absorption_cdf(double t, double gamma, const Grid& grid);

/// Dual-process entrance law: values[i] = P̃_0(T_1 <= times[i]), computed as
/// 1 - r(u) with r the Richardson-extrapolated ratio N(u,s)(x)/s(x) at the
/// first interior nodes.  `monotone` is false when the series decreases by
/// more than a small slack anywhere (grid too coarse for this horizon).
struct EntranceCdf {
  std::vector<double> times, values;
  bool monotone = true;
};
EntranceCdf dual_entrance_cdf(double t, double gamma, const Grid& grid);

/// Bounded ratio field v(x)/d(x) built from node values, where d vanishes
/// linearly at one boundary; the ratio is Richardson-extrapolated into the
/// boundary and interpolated as its own smooth function.
class SurfaceRatio {
 public:
  enum class Denominator { X, Scale, OneMinusX, ScaleComplement };
  SurfaceRatio(const std::vector<double>& nodes, const std::vector<double>& values,
               Denominator denom, double gamma);
  double operator()(double x) const;
  const std::vector<double>& node_ratios() const { return ratios_; }

 private:
  std::vector<double> nodes_, ratios_;
};

/// 4-point Lagrange interpolation on a uniform grid.
double interp_uniform(const std::vector<double>& nodes,
                      const std::vector<double>& values, double x);

}  // namespace prf::diffusion

#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace prf::quad {

/// Gauss-Legendre nodes and weights on [-1,1], by Newton iteration.
struct GaussLegendre {
  explicit GaussLegendre(int npoints);
  std::vector<double> x, w;
};

using Panels = std::vector<std::pair<double, double>>;

/// Evenly split [a,b] into `count` panels.
Panels split_panels(double a, double b, int count);

/// Panels over [0,1] geometrically refined toward both endpoints:
/// widths halve toward 0 and toward 1 down to ~2^{-levels}.  Optional
/// interior breakpoints (e.g. a kink location) are inserted exactly.
Panels refined_panels01(int levels = 24, const std::vector<double>& breaks = {});

double integrate(const std::function<double(double)>& f, const Panels& panels,
                 const GaussLegendre& gl);

/// ∫_0^1 f with endpoint-refined panels (order-16 rule, 24 levels).
double integrate01(const std::function<double(double)>& f,
                   const std::vector<double>& breaks = {});

}  // namespace prf::quad

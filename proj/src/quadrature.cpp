#include "prf/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace prf::quad {

GaussLegendre::GaussLegendre(int npoints) {
  if (npoints < 1) throw std::invalid_argument("GaussLegendre: npoints must be >= 1");
  const int n = npoints;
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int mid = (n + 1) / 2;
  for (int i = 0; i < mid; ++i) {
    // Chebyshev-like initial guess, then Newton on P_n
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
}

Panels split_panels(double a, double b, int count) {
  Panels p;
  p.reserve(count);
  for (int i = 0; i < count; ++i)
    p.emplace_back(a + (b - a) * i / count, a + (b - a) * (i + 1) / count);
  return p;
}

Panels refined_panels01(int levels, const std::vector<double>& breaks) {
  std::vector<double> pts = {0.0, 1.0};
  for (int k = 1; k <= levels; ++k) {
    pts.push_back(std::ldexp(1.0, -k));         // 2^-k
    pts.push_back(1.0 - std::ldexp(1.0, -k));
  }
  for (double b : breaks)
    if (b > 0.0 && b < 1.0) pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](double u, double v) { return std::abs(u - v) < 1e-300; }),
            pts.end());
  Panels p;
  for (size_t i = 0; i + 1 < pts.size(); ++i)
    if (pts[i + 1] > pts[i]) p.emplace_back(pts[i], pts[i + 1]);
  return p;
}

double integrate(const std::function<double(double)>& f, const Panels& panels,
                 const GaussLegendre& gl) {
  double acc = 0.0;
  for (const auto& [a, b] : panels) {
    const double c = 0.5 * (a + b), r = 0.5 * (b - a);
    double panel = 0.0;
    for (size_t i = 0; i < gl.x.size(); ++i) panel += gl.w[i] * f(c + r * gl.x[i]);
    acc += r * panel;
  }
  return acc;
}

double integrate01(const std::function<double(double)>& f,
                   const std::vector<double>& breaks) {
  static const GaussLegendre gl(16);
  return integrate(f, refined_panels01(24, breaks), gl);
}

}  // namespace prf::quad

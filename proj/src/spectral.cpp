#include "prf/spectral.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "prf/quadrature.hpp"

namespace prf::spectral {

double eigenvalue(int n) {
  if (n < 1) throw std::invalid_argument("eigenvalue: n must be >= 1");
  return double(n) * (n + 1);
}

double gegenbauer32(int k, double u) {
  // C_0 = 1, C_1 = 3u, m C_m = 2u(m + 1/2) C_{m-1} - (m + 1) C_{m-2}
  if (k == 0) return 1.0;
  double prev = 1.0, cur = 3.0 * u;
  for (int m = 2; m <= k; ++m) {
    double next = (2.0 * u * (m + 0.5) * cur - (m + 1.0) * prev) / m;
    prev = cur;
    cur = next;
  }
  return cur;
}

double eigenfunction(int n, double x) {
  if (n < 1) throw std::invalid_argument("eigenfunction: n must be >= 1");
  const double c = 2.0 * std::sqrt((2.0 * n + 1.0) / (double(n) * (n + 1.0)));
  return c * x * (1.0 - x) * gegenbauer32(n - 1, 1.0 - 2.0 * x);
}

double transition_density(double t, double x, double y, int nmax) {
  double acc = 0.0;
  for (int n = 1; n <= nmax; ++n) {
    const double e = std::exp(-eigenvalue(n) * t);
    if (e == 0.0) break;
    acc += e * eigenfunction(n, x) * eigenfunction(n, y);
  }
  return acc;
}

double heat(const std::function<double(double)>& f, double t, double x, int nmax) {
  // ∫ f α_n dm = ∫ f(y) c_n C_{n-1}(1-2y) dy: the m-weight cancels the
  // x(1-x) prefactor, leaving a bounded integrand.
  const quad::GaussLegendre gl(32);
  const auto panels = quad::split_panels(0.0, 1.0, 16);
  double acc = 0.0;
  for (int n = 1; n <= nmax; ++n) {
    const double e = std::exp(-eigenvalue(n) * t);
    if (e == 0.0) break;
    const double c = 2.0 * std::sqrt((2.0 * n + 1.0) / (double(n) * (n + 1.0)));
    const double coef = quad::integrate(
        [&](double y) { return f(y) * c * gegenbauer32(n - 1, 1.0 - 2.0 * y); },
        panels, gl);
    acc += e * coef * eigenfunction(n, x);
  }
  return acc;
}

}  // namespace prf::spectral

#include "prf/prf_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "prf/diffusion.hpp"
#include "prf/quadrature.hpp"

namespace prf::model {

using namespace prf::diffusion;

double equilibrium_density_m(double y, double theta, double gamma) {
  return theta * scale_fn_complement(y, gamma) / scale_fn(1.0, gamma);
}

double equilibrium_density_lebesgue(double y, double theta, double gamma) {
  return equilibrium_density_m(y, theta, gamma) * speed_density(y, gamma);
}

namespace {

// payoff ψ(x) = x ν'(x) (1-x) e^{-γx}, the bounded function with
// ∫ p(t,x,y) ν(dx) = N(t,ψ)(y) by symmetry of p w.r.t. m.
std::vector<double> legacy_payoff(const InitialMeasure& nu, const ScaledParams& beta,
                                  const Grid& grid) {
  std::vector<double> f(grid.nodes.size(), 0.0);
  for (size_t j = 0; j < f.size(); ++j) {
    const double x = grid.nodes[j];
    f[j] = nu.weight(x, grid) * (1.0 - x) * std::exp(-beta.gamma * x);
  }
  return f;
}

// ∫ F(x) ν(dx) computed as ∫ (F/x)(x) w(x) dx with w = x ν' bounded.
double integrate_nu(const std::function<double(double)>& F_over_x,
                    const InitialMeasure& nu, const Grid& grid) {
  if (nu.is_zero()) return 0.0;
  return quad::integrate01(
      [&](double x) { return F_over_x(x) * nu.weight(x, grid); });
}

double trapezoid(const std::vector<double>& t, const std::vector<double>& v) {
  double acc = 0.0;
  for (size_t i = 1; i < t.size(); ++i)
    acc += 0.5 * (v[i] + v[i - 1]) * (t[i] - t[i - 1]);
  return acc;
}

}  // namespace

PrfDensity prf_density(const ScaledParams& beta, const InitialMeasure& nu,
                       const Grid& grid) {
  beta.validate();
  nu.validate(grid);
  const double s1 = scale_fn(1.0, beta.gamma);

  // fresh part from one killed solve with payoff s(1)-s(x)
  auto comp = heat_apply(
      [&](double x) { return scale_fn_complement(x, beta.gamma); }, beta.t,
      beta.gamma, grid);

  PrfDensity out;
  out.beta = beta;
  out.nodes = grid.nodes;
  const size_t n = grid.nodes.size();
  out.fresh.resize(n);
  for (size_t j = 0; j < n; ++j)
    out.fresh[j] = beta.theta / s1 *
                   (scale_fn_complement(grid.nodes[j], beta.gamma) - comp.values[j]);

  if (nu.is_zero()) {
    out.legacy.assign(n, 0.0);
  } else if (nu.kind == MeasureKind::Equilibrium && nu.gamma == beta.gamma) {
    // ψ is (ν.θ/s(1)) (s(1)-s): reuse the fresh solve
    out.legacy.resize(n);
    for (size_t j = 0; j < n; ++j) out.legacy[j] = nu.theta / s1 * comp.values[j];
  } else {
    auto leg = heat_apply(legacy_payoff(nu, beta, grid), beta.t, beta.gamma, grid);
    out.legacy = std::move(leg.values);
  }

  out.total.resize(n);
  for (size_t j = 0; j < n; ++j) out.total[j] = out.legacy[j] + out.fresh[j];
  return out;
}

double density_mass(const PrfDensity& d, double a, double b) {
  if (!(0.0 < a && a < b && b < 1.0))
    throw std::invalid_argument("density_mass: need 0 < a < b < 1");
  static const quad::GaussLegendre gl(16);
  const auto panels = quad::split_panels(a, b, 8);
  return quad::integrate(
      [&](double y) {
        return interp_uniform(d.nodes, d.total, y) * speed_density(y, d.beta.gamma);
      },
      panels, gl);
}

FixationMean fixation_mean(const ScaledParams& beta, const InitialMeasure& nu,
                           const Grid& grid) {
  beta.validate();
  nu.validate(grid);
  const double s1 = scale_fn(1.0, beta.gamma);

  HeatOptions opts;
  opts.record_entrance = true;
  auto ns = heat_apply([&](double x) { return scale_fn(x, beta.gamma); }, beta.t,
                       beta.gamma, grid, opts);

  FixationMean out;
  if (!nu.is_zero()) {
    std::vector<double> p1(grid.nodes.size());
    for (size_t j = 0; j < p1.size(); ++j)
      p1[j] = (scale_fn(grid.nodes[j], beta.gamma) - ns.values[j]) / s1;
    SurfaceRatio p1_over_x(grid.nodes, p1, SurfaceRatio::Denominator::X, beta.gamma);
    out.legacy = integrate_nu([&](double x) { return p1_over_x(x); }, nu, grid);
  }

  std::vector<double> cdf(ns.entrance_ratios.size());
  for (size_t i = 0; i < cdf.size(); ++i)
    cdf[i] = std::clamp(1.0 - ns.entrance_ratios[i], 0.0, 1.0);
  if (!cdf.empty()) cdf.front() = 0.0;
  out.fresh = beta.theta / s1 * trapezoid(ns.entrance_times, cdf);
  out.total = out.legacy + out.fresh;
  return out;
}

FixationMean fixation_mean_alt(const ScaledParams& beta, const InitialMeasure& nu,
                               const Grid& grid) {
  beta.validate();
  nu.validate(grid);
  const double s1 = scale_fn(1.0, beta.gamma);

  HeatOptions opts;
  opts.record_entrance = true;
  auto ns = heat_apply([&](double x) { return scale_fn(x, beta.gamma); }, beta.t,
                       beta.gamma, grid, opts);

  FixationMean out;
  if (!nu.is_zero()) {
    const double snu = integrate_nu(
        [&](double x) { return scale_fn_over_x(x, beta.gamma); }, nu, grid);
    SurfaceRatio ns_over_x(grid.nodes, ns.values, SurfaceRatio::Denominator::X,
                           beta.gamma);
    const double nsnu = integrate_nu([&](double x) { return ns_over_x(x); }, nu, grid);
    out.legacy = (snu - nsnu) / s1;
  }

  std::vector<double> survival(ns.entrance_ratios.size());
  for (size_t i = 0; i < survival.size(); ++i)
    survival[i] = std::clamp(ns.entrance_ratios[i], 0.0, 1.0);
  if (!survival.empty()) survival.front() = 1.0;
  out.fresh = beta.theta / s1 * (beta.t - trapezoid(ns.entrance_times, survival));
  out.total = out.legacy + out.fresh;
  return out;
}

FixationSeries fresh_fixation_series(const ScaledParams& beta, const Grid& grid) {
  beta.validate();
  const double s1 = scale_fn(1.0, beta.gamma);
  HeatOptions opts;
  opts.record_entrance = true;
  auto ns = heat_apply([&](double x) { return scale_fn(x, beta.gamma); }, beta.t,
                       beta.gamma, grid, opts);
  FixationSeries out;
  out.times = ns.entrance_times;
  out.values.assign(out.times.size(), 0.0);
  double acc = 0.0, prev_cdf = 0.0;
  for (size_t i = 0; i < out.times.size(); ++i) {
    const double cdf =
        (i == 0) ? 0.0 : std::clamp(1.0 - ns.entrance_ratios[i], 0.0, 1.0);
    if (i > 0)
      acc += 0.5 * (cdf + prev_cdf) * (out.times[i] - out.times[i - 1]);
    out.values[i] = beta.theta / s1 * acc;
    prev_cdf = cdf;
  }
  return out;
}

}  // namespace prf::model

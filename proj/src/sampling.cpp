#include "prf/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "prf/quadrature.hpp"

namespace prf::sampling {

using namespace prf::diffusion;

namespace {

double binom_coef(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c *= double(n - k + i) / i;
  return c;
}

// 1 - y^n - (1-y)^n without cancellation at the ends
double poly_payoff(double y, int n) {
  return -std::expm1(n * std::log1p(-y)) - std::pow(y, n);
}

double trapezoid(const std::vector<double>& t, const std::vector<double>& v) {
  double acc = 0.0;
  for (size_t i = 1; i < t.size(); ++i)
    acc += 0.5 * (v[i] + v[i - 1]) * (t[i] - t[i - 1]);
  return acc;
}

}  // namespace

FateContext::FateContext(const ScaledParams& beta, const std::vector<int>& sizes,
                         const Grid& grid)
    : beta_(beta), grid_(grid) {
  beta.validate();
  grid.validate();
  s1_ = scale_fn(1.0, beta.gamma);
  const auto& x = grid.nodes;
  const size_t nn = x.size();

  HeatOptions eopts;
  eopts.record_entrance = true;
  auto ns = heat_apply([&](double y) { return scale_fn(y, beta.gamma); }, beta.t,
                       beta.gamma, grid, eopts);
  auto n1 = heat_apply([](double) { return 1.0; }, beta.t, beta.gamma, grid);
  auto comp = heat_apply(
      [&](double y) { return scale_fn_complement(y, beta.gamma); }, beta.t,
      beta.gamma, grid);

  {
    std::vector<double> cdf(ns.entrance_ratios.size());
    for (size_t i = 0; i < cdf.size(); ++i)
      cdf[i] = std::clamp(1.0 - ns.entrance_ratios[i], 0.0, 1.0);
    if (!cdf.empty()) cdf.front() = 0.0;
    entrance_integral_ = trapezoid(ns.entrance_times, cdf);
  }

  // f_N(y) = (θ/s1)(s(1)-s(y) - N(t, s(1)-s)(y))
  fN_vals_.resize(nn);
  for (size_t j = 0; j < nn; ++j)
    fN_vals_[j] = beta.theta / s1_ *
                  (scale_fn_complement(x[j], beta.gamma) - comp.values[j]);
  fN_over_ = SurfaceRatio(x, fN_vals_, SurfaceRatio::Denominator::OneMinusX,
                          beta.gamma)
                 .node_ratios();

  std::vector<double> p1(nn);
  for (size_t j = 0; j < nn; ++j)
    p1[j] = (scale_fn(x[j], beta.gamma) - ns.values[j]) / s1_;

  for (int size : sizes) {
    if (size < 1) throw std::invalid_argument("FateContext: sizes must be >= 1");
    if (sizes_.count(size)) continue;
    auto nk = heat_apply([&](double y) { return std::pow(y, size); }, beta.t,
                         beta.gamma, grid);
    auto nw = heat_apply([&](double y) { return std::pow(1.0 - y, size); }, beta.t,
                         beta.gamma, grid);
    auto nj = heat_apply([&](double y) { return poly_payoff(y, size); }, beta.t,
                         beta.gamma, grid);
    SizeSurfaces ss;
    ss.I_vals.resize(nn);
    ss.K_vals.resize(nn);
    ss.J_vals = nj.values;
    for (size_t j = 0; j < nn; ++j) {
      ss.K_vals[j] = p1[j] + nk.values[j];
      ss.I_vals[j] = 1.0 - n1.values[j] - p1[j] + nw.values[j];
    }
    // boundary limits: I(0)=1, K(1)=1 (payoffs vanish there)
    ss.I_vals.front() = 1.0;
    ss.I_vals.back() = 0.0;
    ss.K_vals.front() = 0.0;
    ss.K_vals.back() = 1.0;
    ss.K_over = SurfaceRatio(x, ss.K_vals, SurfaceRatio::Denominator::X, beta.gamma)
                    .node_ratios();
    ss.J_over = SurfaceRatio(x, ss.J_vals, SurfaceRatio::Denominator::X, beta.gamma)
                    .node_ratios();
    sizes_.emplace(size, std::move(ss));
  }
}

const FateContext::SizeSurfaces& FateContext::size_surf(int size) const {
  auto it = sizes_.find(size);
  if (it == sizes_.end())
    throw std::invalid_argument("FateContext: size was not prepared");
  return it->second;
}

double FateContext::I(double x, int size) const {
  return interp_uniform(grid_.nodes, size_surf(size).I_vals, x);
}
double FateContext::K(double x, int size) const {
  return interp_uniform(grid_.nodes, size_surf(size).K_vals, x);
}
double FateContext::J(double x, int size) const {
  return interp_uniform(grid_.nodes, size_surf(size).J_vals, x);
}
double FateContext::K_over_x(double x, int size) const {
  return interp_uniform(grid_.nodes, size_surf(size).K_over, x);
}
double FateContext::J_over_x(double x, int size) const {
  return interp_uniform(grid_.nodes, size_surf(size).J_over, x);
}

SampleFate FateContext::fate(double x, int size) const {
  if (!(x >= 0.0 && x <= 1.0))
    throw std::invalid_argument("fate: x must lie in [0,1]");
  return {I(x, size), J(x, size), K(x, size)};
}

double FateContext::f_N(double y) const {
  return interp_uniform(grid_.nodes, fN_vals_, y);
}
double FateContext::f_N_over_1my(double y) const {
  return interp_uniform(grid_.nodes, fN_over_, y);
}
double FateContext::G_N() const { return beta_.theta / s1_ * entrance_integral_; }

SampleFate sample_fate(double x, int n, const ScaledParams& beta, const Grid& grid) {
  FateContext ctx(beta, {n}, grid);
  return ctx.fate(x, n);
}

LegacyMeans legacy_means(const FateContext& ctx, int m, int n,
                         const InitialMeasure& nu) {
  LegacyMeans out;
  if (nu.is_zero()) return out;
  const Grid& grid = ctx.grid();
  auto against_nu = [&](const std::function<double(double)>& f_over_x) {
    return quad::integrate01(
        [&](double x) { return f_over_x(x) * nu.weight(x, grid); });
  };
  out.C1 = against_nu([&](double x) {
    return ctx.I(x, m) * ctx.K_over_x(x, n) + ctx.I(x, n) * ctx.K_over_x(x, m);
  });
  out.C2 = against_nu([&](double x) {
    return ctx.J_over_x(x, m) * (ctx.I(x, n) + ctx.K(x, n)) +
           ctx.J_over_x(x, n) * (ctx.I(x, m) + ctx.K(x, m));
  });
  out.C2_alt = against_nu([&](double x) {
    return ctx.J_over_x(x, m) + ctx.J_over_x(x, n) -
           2.0 * ctx.J_over_x(x, m) * ctx.J(x, n);
  });
  out.C3 = against_nu([&](double x) { return ctx.J_over_x(x, m) * ctx.J(x, n); });
  return out;
}

LegacyMeans legacy_means(int m, int n, const ScaledParams& beta,
                         const InitialMeasure& nu, const Grid& grid) {
  FateContext ctx(beta, {m, n}, grid);
  return legacy_means(ctx, m, n, nu);
}

NewSpectrum new_spectrum(const FateContext& ctx, int n) {
  const double gamma = ctx.beta().gamma;
  NewSpectrum out;
  out.F.resize(n);
  for (int k = 1; k <= n; ++k) {
    const double c = binom_coef(n, k);
    if (k < n) {
      out.F[k - 1] = quad::integrate01([&](double y) {
        return ctx.f_N(y) * c * std::pow(y, k - 1) *
               std::pow(1.0 - y, n - k - 1) * std::exp(gamma * y);
      });
    } else {
      out.F[k - 1] = quad::integrate01([&](double y) {
        return ctx.f_N_over_1my(y) * std::pow(y, n - 1) * std::exp(gamma * y);
      });
    }
  }
  for (int k = 1; k < n; ++k) out.E_N += out.F[k - 1];
  out.E_N_direct = quad::integrate01([&](double y) {
    const double weight = poly_payoff(y, n) / (y * (1.0 - y));
    return ctx.f_N(y) * weight * std::exp(gamma * y);
  });
  out.G_N = ctx.G_N();
  out.D_N = out.G_N + out.F[n - 1];
  return out;
}

NewSpectrum new_spectrum(int n, const ScaledParams& beta, const Grid& grid) {
  FateContext ctx(beta, {n}, grid);
  return new_spectrum(ctx, n);
}

std::vector<double> legacy_spectrum(int n, const ScaledParams& beta,
                                    const InitialMeasure& nu, const Grid& grid) {
  // f_L = N(t, ψ) with ψ(x) = x ν'(x) (1-x) e^{-γx}
  std::vector<double> psi(grid.nodes.size());
  for (size_t j = 0; j < psi.size(); ++j) {
    const double x = grid.nodes[j];
    psi[j] = nu.weight(x, grid) * (1.0 - x) * std::exp(-beta.gamma * x);
  }
  auto fl = heat_apply(psi, beta.t, beta.gamma, grid);
  const auto fl_over =
      SurfaceRatio(grid.nodes, fl.values, SurfaceRatio::Denominator::OneMinusX,
                   beta.gamma)
          .node_ratios();
  std::vector<double> F(n);
  for (int k = 1; k <= n; ++k) {
    const double c = binom_coef(n, k);
    if (k < n) {
      F[k - 1] = quad::integrate01([&](double y) {
        return interp_uniform(grid.nodes, fl.values, y) * c * std::pow(y, k - 1) *
               std::pow(1.0 - y, n - k - 1) * std::exp(beta.gamma * y);
      });
    } else {
      F[k - 1] = quad::integrate01([&](double y) {
        return interp_uniform(grid.nodes, fl_over, y) * std::pow(y, n - 1) *
               std::exp(beta.gamma * y);
      });
    }
  }
  return F;
}

ExpectedTable table_means(int m, int n, const ScaledParams& beta_s,
                          const ScaledParams& beta_r, const InitialMeasure& nu_s,
                          const InitialMeasure& nu_r, const Grid& grid) {
  if (m < 1 || n < 1) throw std::invalid_argument("table_means: need m, n >= 1");
  ExpectedTable out;
  out.means.layout = TableLayout::DOHRS;
  out.means.m = m;
  out.means.n = n;

  auto fill = [&](const ScaledParams& beta, const InitialMeasure& nu,
                  ExpectedTable::Components& comp, double& K, double& O, double& H) {
    FateContext ctx(beta, {m, n}, grid);
    comp.legacy = legacy_means(ctx, m, n, nu);
    comp.spectrum_m = new_spectrum(ctx, m);
    comp.spectrum_n = (n == m) ? comp.spectrum_m : new_spectrum(ctx, n);
    K = comp.legacy.C1 + comp.spectrum_m.D_N + comp.spectrum_n.D_N;
    O = comp.legacy.C2 + comp.spectrum_m.E_N + comp.spectrum_n.E_N;
    H = comp.legacy.C3;
  };
  fill(beta_s, nu_s, out.silent, out.means.K_s, out.means.O_s, out.means.H_s);
  fill(beta_r, nu_r, out.replacement, out.means.K_r, out.means.O_r, out.means.H_r);
  return out;
}

void to_json(nlohmann::json& j, const LegacyMeans& v) {
  j = nlohmann::json{{"C1", v.C1}, {"C2", v.C2}, {"C2_alt", v.C2_alt}, {"C3", v.C3}};
}

void to_json(nlohmann::json& j, const NewSpectrum& v) {
  j = nlohmann::json{{"F", v.F},
                     {"E_N", v.E_N},
                     {"E_N_direct", v.E_N_direct},
                     {"D_N", v.D_N},
                     {"G_N", v.G_N}};
}

void to_json(nlohmann::json& j, const ExpectedTable& v) {
  auto comp = [](const ExpectedTable::Components& c) {
    return nlohmann::json{{"legacy", c.legacy},
                          {"spectrum_m", c.spectrum_m},
                          {"spectrum_n", c.spectrum_n}};
  };
  j = nlohmann::json{{"means", v.means},
                     {"silent", comp(v.silent)},
                     {"replacement", comp(v.replacement)}};
}

}  // namespace prf::sampling

#include "prf/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace prf::diffusion {

namespace {

constexpr double kGammaTiny = 1e-8;  // below this, 3-term series for s

// expm1(z)/z, accurate near z = 0.
double expm1_over(double z) {
  if (std::abs(z) < 1e-5) return 1.0 + z / 2.0 + z * z / 6.0;
  return std::expm1(z) / z;
}

}  // namespace

double scale_fn(double x, double gamma) {
  if (std::abs(gamma) < kGammaTiny)
    return x * (1.0 - gamma * x / 2.0 + gamma * gamma * x * x / 6.0);
  return -std::expm1(-gamma * x) / gamma;
}

double scale_fn_complement(double x, double gamma) {
  // (e^{-γx} - e^{-γ})/γ = e^{-γ} (1-x) expm1_over(γ(1-x))
  if (std::abs(gamma) < kGammaTiny) return scale_fn(1.0, gamma) - scale_fn(x, gamma);
  return std::exp(-gamma) * (1.0 - x) * expm1_over(gamma * (1.0 - x));
}

double scale_fn_complement_over_1mx(double x, double gamma) {
  if (std::abs(gamma) < kGammaTiny) {
    // (s(1)-s(x))/(1-x) with the same series used by scale_fn
    const double sum = 1.0 + x;                     // (1-x^2)/(1-x)
    const double cub = 1.0 + x + x * x;             // (1-x^3)/(1-x)
    return 1.0 - gamma * sum / 2.0 + gamma * gamma * cub / 6.0;
  }
  return std::exp(-gamma) * expm1_over(gamma * (1.0 - x));
}

double scale_fn_over_x(double x, double gamma) {
  if (std::abs(gamma) < kGammaTiny)
    return 1.0 - gamma * x / 2.0 + gamma * gamma * x * x / 6.0;
  return expm1_over(-gamma * x);
}

double speed_density(double x, double gamma) {
  if (!(x > 0.0 && x < 1.0))
    throw std::domain_error("speed_density: x must lie in (0,1)");
  return std::exp(gamma * x) / (x * (1.0 - x));
}

double ultimate_fixation(double x, double gamma) {
  if (!(x >= 0.0 && x <= 1.0))
    throw std::domain_error("ultimate_fixation: x must lie in [0,1]");
  return scale_fn(x, gamma) / scale_fn(1.0, gamma);
}

double green_kernel(double x, double y, double gamma) {
  if (!(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0))
    throw std::domain_error("green_kernel: arguments must lie in (0,1)");
  const double lo = std::min(x, y), hi = std::max(x, y);
  return scale_fn_complement(hi, gamma) * scale_fn(lo, gamma) / scale_fn(1.0, gamma);
}

double interp_uniform(const std::vector<double>& nodes,
                      const std::vector<double>& values, double x) {
  const int J = static_cast<int>(nodes.size()) - 1;
  const double h = 1.0 / J;
  if (x <= 0.0) return values.front();
  if (x >= 1.0) return values.back();
  int j = static_cast<int>(x / h);            // x in [x_j, x_{j+1})
  int lo = std::clamp(j - 1, 0, J - 3);       // 4-point stencil lo..lo+3
  const double* xs = nodes.data() + lo;
  const double* vs = values.data() + lo;
  double out = 0.0;
  for (int a = 0; a < 4; ++a) {
    double L = 1.0;
    for (int b = 0; b < 4; ++b)
      if (b != a) L *= (x - xs[b]) / (xs[a] - xs[b]);
    out += L * vs[a];
  }
  return out;
}

double HeatSurface::value_at(double x) const { return interp_uniform(nodes, values, x); }

namespace {

// One factorized tridiagonal system (I - c*A) with A the discrete generator;
// solve() runs the Thomas algorithm in O(J).
struct TridiagOp {
  std::vector<double> lower, diag, upper;   // of (I - c*A), interior j=1..J-1
  std::vector<double> plo, pdi, pup;        // of (I + d*A) for the CN rhs
  std::vector<double> cp;                   // Thomas scratch
  bool has_rhs_op = false;

  // a_j = x_j(1-x_j); (A v)_j = a_j (v_{j-1} - 2 v_j + v_{j+1})/h²
  //                          + γ a_j (v_{j+1} - v_{j-1})/(2h)
  void build(const std::vector<double>& x, double gamma, double c, double d) {
    const int J = static_cast<int>(x.size()) - 1;
    const double h = 1.0 / J;
    const int M = J - 1;
    lower.assign(M, 0.0); diag.assign(M, 0.0); upper.assign(M, 0.0);
    has_rhs_op = d != 0.0;
    if (has_rhs_op) { plo.assign(M, 0.0); pdi.assign(M, 0.0); pup.assign(M, 0.0); }
    for (int j = 1; j <= M; ++j) {
      const double a = x[j] * (1.0 - x[j]);
      const double lo = a * (1.0 / (h * h) - gamma / (2.0 * h));
      const double di = -2.0 * a / (h * h);
      const double up = a * (1.0 / (h * h) + gamma / (2.0 * h));
      lower[j - 1] = -c * lo;
      diag[j - 1] = 1.0 - c * di;
      upper[j - 1] = -c * up;
      if (has_rhs_op) {
        plo[j - 1] = d * lo;
        pdi[j - 1] = 1.0 + d * di;
        pup[j - 1] = d * up;
      }
    }
    cp.assign(M, 0.0);
  }

  // v <- (I - cA)^{-1} (I + dA) v, with w as scratch for the rhs.
  void step(std::vector<double>& v, std::vector<double>& w) {
    const int M = static_cast<int>(diag.size());
    if (has_rhs_op) {
      for (int i = 0; i < M; ++i) {
        double acc = pdi[i] * v[i];
        if (i > 0) acc += plo[i] * v[i - 1];
        if (i + 1 < M) acc += pup[i] * v[i + 1];
        w[i] = acc;
      }
    } else {
      std::copy(v.begin(), v.begin() + M, w.begin());
    }
    // Thomas sweep
    double beta = diag[0];
    v[0] = w[0] / beta;
    for (int i = 1; i < M; ++i) {
      cp[i] = upper[i - 1] / beta;
      beta = diag[i] - lower[i] * cp[i];
      v[i] = (w[i] - lower[i] * v[i - 1]) / beta;
    }
    for (int i = M - 2; i >= 0; --i) v[i] -= cp[i + 1] * v[i + 1];
  }
};

double entrance_ratio(const std::vector<double>& interior, const std::vector<double>& x,
                      double gamma) {
  // Richardson: r(0) ≈ 2 r(x_1) - r(x_2)
  const double r1 = interior[0] / scale_fn(x[1], gamma);
  const double r2 = interior[1] / scale_fn(x[2], gamma);
  return 2.0 * r1 - r2;
}

}  // namespace

HeatSurface heat_apply(const std::vector<double>& payoff_at_nodes, double t,
                       double gamma, const Grid& grid, const HeatOptions& opts) {
  grid.validate();
  grid.spacing();  // solver requires uniform nodes
  if (payoff_at_nodes.size() != grid.nodes.size())
    throw std::invalid_argument("heat_apply: payoff size must match grid nodes");
  if (!(t >= 0.0) || !std::isfinite(t))
    throw std::invalid_argument("heat_apply: t must be >= 0");

  const auto& x = grid.nodes;
  const int J = grid.intervals();
  const int M = J - 1;

  HeatSurface out;
  out.t = t;
  out.gamma = gamma;
  out.nodes = x;

  std::vector<double> v(payoff_at_nodes.begin() + 1, payoff_at_nodes.begin() + J);
  auto emit_full = [&](const std::vector<double>& interior) {
    std::vector<double> full(J + 1, 0.0);
    std::copy(interior.begin(), interior.end(), full.begin() + 1);
    return full;
  };

  if (t == 0.0) {
    out.values = emit_full(v);
    if (opts.record_entrance) {
      out.entrance_times.push_back(0.0);
      out.entrance_ratios.push_back(entrance_ratio(v, x, gamma));
    }
    return out;
  }

  const double dt0 = std::min(grid.dt, t);
  const int nsteps = std::max<int>(1, static_cast<int>(std::ceil(t / dt0 - 1e-9)));
  const double dt = t / nsteps;

  // snap snapshot times to step indices
  std::vector<std::pair<int, double>> snaps;
  for (double ts : opts.snapshot_times) {
    int idx = std::clamp<int>(static_cast<int>(std::llround(ts / dt)), 0, nsteps);
    snaps.emplace_back(idx, ts);
  }
  std::sort(snaps.begin(), snaps.end());

  TridiagOp euler, cn;
  euler.build(x, gamma, dt / 4.0, 0.0);        // implicit-Euler startup substeps
  cn.build(x, gamma, dt / 2.0, dt / 2.0);
  std::vector<double> scratch(M, 0.0);

  auto record_level = [&](int step) {
    const double u = step * dt;
    if (opts.record_entrance) {
      out.entrance_times.push_back(u);
      out.entrance_ratios.push_back(entrance_ratio(v, x, gamma));
    }
    if (opts.store_every > 0 && step % opts.store_every == 0 && step < nsteps) {
      out.level_times.push_back(u);
      out.levels.push_back(emit_full(v));
    }
    for (auto& [idx, ts] : snaps)
      if (idx == step) {
        out.snapshot_times.push_back(ts);
        out.snapshots.push_back(emit_full(v));
      }
  };

  record_level(0);
  for (int step = 1; step <= nsteps; ++step) {
    if (step == 1) {
      // Rannacher smoothing of the initial corner discontinuity
      for (int sub = 0; sub < 4; ++sub) euler.step(v, scratch);
    } else {
      cn.step(v, scratch);
    }
    record_level(step);
  }

  for (double val : v)
    if (!std::isfinite(val)) throw std::runtime_error("heat_apply: solver diverged");
  out.values = emit_full(v);
  return out;
}

HeatSurface heat_apply(const std::function<double(double)>& payoff, double t,
                       double gamma, const Grid& grid, const HeatOptions& opts) {
  std::vector<double> f(grid.nodes.size());
  for (size_t j = 0; j < f.size(); ++j) f[j] = payoff(grid.nodes[j]);
  return heat_apply(f, t, gamma, grid, opts);
}

AbsorptionCdf absorption_cdf(double t, double gamma, const Grid& grid) {
  const double s1 = scale_fn(1.0, gamma);
  auto ns = heat_apply([&](double y) { return scale_fn(y, gamma); }, t, gamma, grid);
  auto n1 = heat_apply([](double) { return 1.0; }, t, gamma, grid);
  AbsorptionCdf out;
  out.nodes = grid.nodes;
  const size_t n = grid.nodes.size();
  out.p0.resize(n);
  out.p1.resize(n);
  for (size_t j = 0; j < n; ++j) {
    out.p1[j] = (scale_fn(grid.nodes[j], gamma) - ns.values[j]) / s1;
    out.p0[j] = 1.0 - n1.values[j] - out.p1[j];
  }
  // endpoints are absorbing from the start
  out.p0.front() = 1.0; out.p1.front() = 0.0;
  out.p0.back() = 0.0;  out.p1.back() = 1.0;
  return out;
}

EntranceCdf dual_entrance_cdf(double t, double gamma, const Grid& grid) {
  HeatOptions opts;
  opts.record_entrance = true;
  auto ns = heat_apply([&](double y) { return scale_fn(y, gamma); }, t, gamma, grid, opts);
  EntranceCdf out;
  out.times = ns.entrance_times;
  out.values.resize(out.times.size());
  for (size_t i = 0; i < out.times.size(); ++i)
    out.values[i] = std::clamp(1.0 - ns.entrance_ratios[i], 0.0, 1.0);
  if (!out.values.empty()) out.values.front() = 0.0;
  out.monotone = true;
  for (size_t i = 1; i < out.values.size(); ++i)
    if (out.values[i] < out.values[i - 1] - 1e-6) out.monotone = false;
  return out;
}

SurfaceRatio::SurfaceRatio(const std::vector<double>& nodes,
                           const std::vector<double>& values, Denominator denom,
                           double gamma)
    : nodes_(nodes) {
  const int J = static_cast<int>(nodes.size()) - 1;
  ratios_.assign(J + 1, 0.0);
  auto den = [&](double x) -> double {
    switch (denom) {
      case Denominator::X: return x;
      case Denominator::Scale: return scale_fn(x, gamma);
      case Denominator::OneMinusX: return 1.0 - x;
      case Denominator::ScaleComplement: return scale_fn_complement(x, gamma);
    }
    return x;
  };
  for (int j = 1; j < J; ++j) ratios_[j] = values[j] / den(nodes[j]);
  const bool left_singular =
      denom == Denominator::X || denom == Denominator::Scale;
  if (left_singular) {
    ratios_[0] = 2.0 * ratios_[1] - ratios_[2];
    ratios_[J] = values[J] / den(nodes[J]);
  } else {
    ratios_[J] = 2.0 * ratios_[J - 1] - ratios_[J - 2];
    ratios_[0] = values[0] / den(nodes[0]);
  }
}

double SurfaceRatio::operator()(double x) const {
  return interp_uniform(nodes_, ratios_, x);
}

}  // namespace prf::diffusion

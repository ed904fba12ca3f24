#include "prf/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "prf/diffusion.hpp"

namespace prf {

static void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

void ScaledParams::validate() const {
  require(std::isfinite(t) && t >= 0.0, "ScaledParams: t must be >= 0");
  require(std::isfinite(theta) && theta >= 0.0, "ScaledParams: theta must be >= 0");
  require(std::isfinite(gamma), "ScaledParams: gamma must be finite");
}

void FiniteParams::validate() const {
  require(N >= 2, "FiniteParams: N must be >= 2");
  require(std::isfinite(sigma) && sigma > -1.0, "FiniteParams: sigma must be > -1");
  require(std::isfinite(mu) && mu >= 0.0, "FiniteParams: mu must be >= 0");
  require(k >= 0, "FiniteParams: k must be >= 0");
}

ScaledParams scale_map(const FiniteParams& fp) {
  fp.validate();
  const double N = fp.N;
  return {static_cast<double>(fp.k) / (N * N), N * fp.mu, N * fp.sigma};
}

FiniteParams descale(const ScaledParams& sp, int N) {
  sp.validate();
  require(N >= 2, "descale: N must be >= 2");
  FiniteParams fp;
  fp.N = N;
  fp.sigma = sp.gamma / N;
  fp.mu = sp.theta / N;
  fp.k = static_cast<std::int64_t>(std::llround(sp.t * double(N) * double(N)));
  return fp;
}

Grid Grid::uniform(int intervals, double dt) {
  require(intervals >= 8, "Grid: need at least 8 intervals");
  require(dt > 0.0, "Grid: dt must be > 0");
  Grid g;
  g.dt = dt;
  g.nodes.resize(intervals + 1);
  for (int j = 0; j <= intervals; ++j) g.nodes[j] = double(j) / intervals;
  g.nodes.front() = 0.0;
  g.nodes.back() = 1.0;
  return g;
}

Grid Grid::for_time(double t, int intervals) {
  const double dt = (t > 0.0) ? std::min(1e-3, t / 200.0) : 1e-3;
  return uniform(intervals, dt);
}

double Grid::spacing() const {
  validate();
  const double h = nodes[1] - nodes[0];
  for (size_t j = 1; j + 1 < nodes.size(); ++j)
    if (std::abs((nodes[j + 1] - nodes[j]) - h) > 1e-12)
      throw std::invalid_argument("Grid: spacing() requires uniform nodes");
  return h;
}

void Grid::validate() const {
  require(nodes.size() >= 9, "Grid: need at least 8 intervals");
  require(nodes.front() == 0.0 && nodes.back() == 1.0, "Grid: nodes must span [0,1]");
  for (size_t j = 0; j + 1 < nodes.size(); ++j)
    require(nodes[j] < nodes[j + 1], "Grid: nodes must be strictly increasing");
  require(dt > 0.0, "Grid: dt must be > 0");
}

InitialMeasure InitialMeasure::zero() { return {}; }

InitialMeasure InitialMeasure::equilibrium(double theta, double gamma) {
  InitialMeasure nu;
  nu.kind = MeasureKind::Equilibrium;
  nu.theta = theta;
  nu.gamma = gamma;
  return nu;
}

InitialMeasure InitialMeasure::tabulated(std::vector<double> w_at_nodes) {
  InitialMeasure nu;
  nu.kind = MeasureKind::Tabulated;
  nu.density_over_x = std::move(w_at_nodes);
  return nu;
}

double InitialMeasure::weight(double x) const {
  switch (kind) {
    case MeasureKind::Zero:
      return 0.0;
    case MeasureKind::Equilibrium:
      // x * nu'(x) = theta e^{gamma x} (s(1)-s(x)) / ((1-x) s(1))
      return theta * std::exp(gamma * x) *
             diffusion::scale_fn_complement_over_1mx(x, gamma) /
             diffusion::scale_fn(1.0, gamma);
    case MeasureKind::Tabulated:
      throw std::logic_error("InitialMeasure: tabulated weight needs a grid");
  }
  return 0.0;
}

double InitialMeasure::weight(double x, const Grid& g) const {
  switch (kind) {
    case MeasureKind::Zero:
    case MeasureKind::Equilibrium:
      return weight(x);
    case MeasureKind::Tabulated: {
      // piecewise-linear in x between grid nodes
      const auto& xs = g.nodes;
      if (x <= xs.front()) return density_over_x.front();
      if (x >= xs.back()) return density_over_x.back();
      auto it = std::upper_bound(xs.begin(), xs.end(), x);
      size_t hi = size_t(it - xs.begin()), lo = hi - 1;
      double u = (x - xs[lo]) / (xs[hi] - xs[lo]);
      return (1.0 - u) * density_over_x[lo] + u * density_over_x[hi];
    }
  }
  return 0.0;
}

void InitialMeasure::validate(const Grid& g) const {
  require(std::isfinite(theta) && theta >= 0.0, "InitialMeasure: theta must be >= 0");
  require(std::isfinite(gamma), "InitialMeasure: gamma must be finite");
  if (kind == MeasureKind::Tabulated) {
    require(density_over_x.size() == g.nodes.size(),
            "InitialMeasure: tabulated density must match grid nodes");
    for (double w : density_over_x)
      require(std::isfinite(w) && w >= 0.0, "InitialMeasure: density must be >= 0");
  }
}

CountTable CountTable::to_dprs(bool double_count_shared) const {
  CountTable d;
  d.layout = TableLayout::DPRS;
  d.m = m;
  d.n = n;
  const double w = double_count_shared ? 2.0 : 1.0;
  d.K_s = K_s;
  d.O_s = O_s + w * H_s;
  d.K_r = K_r;
  d.O_r = O_r + w * H_r;
  return d;
}

std::vector<double> CountTable::cells() const {
  if (layout == TableLayout::DPRS) return {K_s, V_s(), K_r, V_r()};
  return {K_s, O_s, H_s, K_r, O_r, H_r};
}

const std::vector<std::string>& CountTable::cell_names(TableLayout layout) {
  static const std::vector<std::string> dprs = {"K_s", "V_s", "K_r", "V_r"};
  static const std::vector<std::string> dohrs = {"K_s", "O_s", "H_s",
                                                 "K_r", "O_r", "H_r"};
  return layout == TableLayout::DPRS ? dprs : dohrs;
}

void CountTable::validate() const {
  require(m >= 1 && n >= 1, "CountTable: sample sizes must be >= 1");
  for (double c : cells())
    require(std::isfinite(c) && c >= 0.0, "CountTable: cells must be >= 0");
}

using nlohmann::json;

void to_json(json& j, const ScaledParams& p) {
  j = json{{"t", p.t}, {"theta", p.theta}, {"gamma", p.gamma}};
}
void from_json(const json& j, ScaledParams& p) {
  j.at("t").get_to(p.t);
  j.at("theta").get_to(p.theta);
  j.at("gamma").get_to(p.gamma);
}

void to_json(json& j, const FiniteParams& p) {
  j = json{{"N", p.N}, {"sigma", p.sigma}, {"mu", p.mu}, {"k", p.k}};
}
void from_json(const json& j, FiniteParams& p) {
  j.at("N").get_to(p.N);
  j.at("sigma").get_to(p.sigma);
  j.at("mu").get_to(p.mu);
  j.at("k").get_to(p.k);
}

void to_json(json& j, const Grid& g) {
  j = json{{"nodes", g.nodes}, {"dt", g.dt}};
}
void from_json(const json& j, Grid& g) {
  j.at("nodes").get_to(g.nodes);
  j.at("dt").get_to(g.dt);
}

void to_json(json& j, const InitialMeasure& nu) {
  const char* kind = nu.kind == MeasureKind::Zero          ? "zero"
                     : nu.kind == MeasureKind::Equilibrium ? "equilibrium"
                                                           : "tabulated";
  j = json{{"kind", kind}};
  if (nu.kind == MeasureKind::Equilibrium) {
    j["theta"] = nu.theta;
    j["gamma"] = nu.gamma;
  }
  if (nu.kind == MeasureKind::Tabulated) j["density_over_x"] = nu.density_over_x;
}
void from_json(const json& j, InitialMeasure& nu) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "zero") {
    nu = InitialMeasure::zero();
  } else if (kind == "equilibrium") {
    nu = InitialMeasure::equilibrium(j.at("theta").get<double>(),
                                     j.at("gamma").get<double>());
  } else if (kind == "tabulated") {
    nu = InitialMeasure::tabulated(j.at("density_over_x").get<std::vector<double>>());
  } else {
    throw std::invalid_argument("InitialMeasure: unknown kind '" + kind + "'");
  }
}

void to_json(json& j, const CountTable& t) {
  json counts;
  const auto names = CountTable::cell_names(t.layout);
  const auto vals = t.cells();
  for (size_t i = 0; i < names.size(); ++i) counts[names[i]] = vals[i];
  j = json{{"layout", t.layout == TableLayout::DPRS ? "DPRS" : "DOHRS"},
           {"m", t.m},
           {"n", t.n},
           {"counts", counts}};
}
void from_json(const json& j, CountTable& t) {
  const std::string layout = j.at("layout").get<std::string>();
  if (layout == "DPRS")
    t.layout = TableLayout::DPRS;
  else if (layout == "DOHRS")
    t.layout = TableLayout::DOHRS;
  else
    throw std::invalid_argument("CountTable: unknown layout '" + layout + "'");
  j.at("m").get_to(t.m);
  j.at("n").get_to(t.n);
  const auto& counts = j.at("counts");
  t.K_s = counts.at("K_s").get<double>();
  t.K_r = counts.at("K_r").get<double>();
  if (t.layout == TableLayout::DPRS) {
    t.O_s = counts.at("V_s").get<double>();
    t.O_r = counts.at("V_r").get<double>();
    t.H_s = t.H_r = 0.0;
  } else {
    t.O_s = counts.at("O_s").get<double>();
    t.H_s = counts.at("H_s").get<double>();
    t.O_r = counts.at("O_r").get<double>();
    t.H_r = counts.at("H_r").get<double>();
  }
}

}  // namespace prf

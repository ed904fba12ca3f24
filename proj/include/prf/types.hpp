#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace prf {

/// Scaled (diffusion-limit) parameters: time t, mutation rate theta,
/// selection gamma.  theta >= 0, t >= 0; gamma unrestricted.
struct ScaledParams {
  double t = 0.0;
  double theta = 0.0;
  double gamma = 0.0;

  void validate() const;  // throws std::invalid_argument on violation
};

/// Finite-population Moran parameters: size N, per-birth selection sigma,
/// per-step mutation inflow mu, step count k.
struct FiniteParams {
  int N = 2;
  double sigma = 0.0;
  double mu = 0.0;
  std::int64_t k = 0;

  void validate() const;
};

/// (N, sigma, mu, k) -> (t, theta, gamma) = (k/N^2, N*mu, N*sigma).
ScaledParams scale_map(const FiniteParams& fp);

/// Inverse of scale_map at a given N; k is rounded to the nearest step.
FiniteParams descale(const ScaledParams& sp, int N);

/// Spatial grid on [0,1] plus time step for the heat solver.
/// Nodes are strictly increasing with nodes.front()==0, nodes.back()==1.
struct Grid {
  std::vector<double> nodes;
  double dt = 1e-3;

  static Grid uniform(int intervals, double dt);
  /// Default solver grid for a horizon t: J=800, dt=min(1e-3, t/200).
  static Grid for_time(double t, int intervals = 800);

  int intervals() const { return static_cast<int>(nodes.size()) - 1; }
  /// Uniform spacing; throws if the nodes are not equally spaced.
  double spacing() const;
  void validate() const;
};

enum class MeasureKind { Zero, Equilibrium, Tabulated };

/// Initial site-frequency intensity nu on (0,1).  Because nu may carry a
/// 1/x singularity, the stored density is w(x) = x * nu'(x), which stays
/// bounded for every measure this code produces.
struct InitialMeasure {
  MeasureKind kind = MeasureKind::Zero;
  double theta = 0.0;  // equilibrium parameters
  double gamma = 0.0;
  std::vector<double> density_over_x;  // w at grid nodes (Tabulated only)

  static InitialMeasure zero();
  static InitialMeasure equilibrium(double theta, double gamma);
  static InitialMeasure tabulated(std::vector<double> w_at_nodes);

  bool is_zero() const { return kind == MeasureKind::Zero; }
  /// w(x) = x * nu'(x); Tabulated values are interpolated on `g`.
  double weight(double x, const Grid& g) const;
  /// Analytic kinds only (throws for Tabulated).
  double weight(double x) const;
  void validate(const Grid& g) const;
};

enum class TableLayout { DPRS, DOHRS };

/// Observed or expected McDonald-Kreitman style counts for one locus.
/// Cells are stored DOHRS-shaped; a DPRS table keeps V in O_* with H_* = 0.
struct CountTable {
  TableLayout layout = TableLayout::DOHRS;
  int m = 0;  // sample size, species 1
  int n = 0;  // sample size, species 2
  double K_s = 0, O_s = 0, H_s = 0;  // silent: fixed, one-species poly, shared poly
  double K_r = 0, O_r = 0, H_r = 0;  // replacement

  double V_s() const { return O_s + H_s; }
  double V_r() const { return O_r + H_r; }
  /// Collapse to DPRS; with double_count_shared each shared polymorphism
  /// contributes twice (once per species): V = O + 2H.
  CountTable to_dprs(bool double_count_shared = false) const;
  /// Cell values in serialization order (4 for DPRS, 6 for DOHRS).
  std::vector<double> cells() const;
  static const std::vector<std::string>& cell_names(TableLayout layout);
  void validate() const;
};

void to_json(nlohmann::json& j, const ScaledParams& p);
void from_json(const nlohmann::json& j, ScaledParams& p);
void to_json(nlohmann::json& j, const FiniteParams& p);
void from_json(const nlohmann::json& j, FiniteParams& p);
void to_json(nlohmann::json& j, const Grid& g);
void from_json(const nlohmann::json& j, Grid& g);
void to_json(nlohmann::json& j, const InitialMeasure& nu);
void from_json(const nlohmann::json& j, InitialMeasure& nu);
void to_json(nlohmann::json& j, const CountTable& t);
void from_json(const nlohmann::json& j, CountTable& t);

}  // namespace prf

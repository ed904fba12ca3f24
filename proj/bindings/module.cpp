#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "prf/alignment.hpp"
#include "prf/diffusion.hpp"
#include "prf/inference.hpp"
#include "prf/moran.hpp"
#include "prf/prf_model.hpp"
#include "prf/sampling.hpp"
#include "prf/types.hpp"

namespace py = pybind11;

namespace {

prf::CountTable table_from_dict(const py::dict& d) {
  prf::CountTable t;
  t.m = d["m"].cast<int>();
  t.n = d["n"].cast<int>();
  if (d.contains("H_s") || d.contains("H_r")) {
    t.layout = prf::TableLayout::DOHRS;
    t.K_s = d["K_s"].cast<double>();
    t.O_s = d["O_s"].cast<double>();
    t.H_s = d["H_s"].cast<double>();
    t.K_r = d["K_r"].cast<double>();
    t.O_r = d["O_r"].cast<double>();
    t.H_r = d["H_r"].cast<double>();
  } else {
    t.layout = prf::TableLayout::DPRS;
    t.K_s = d["K_s"].cast<double>();
    t.O_s = d["V_s"].cast<double>();
    t.K_r = d["K_r"].cast<double>();
    t.O_r = d["V_r"].cast<double>();
  }
  t.validate();
  return t;
}

py::dict table_to_dict(const prf::CountTable& t) {
  py::dict d;
  d["m"] = t.m;
  d["n"] = t.n;
  if (t.layout == prf::TableLayout::DOHRS) {
    d["K_s"] = t.K_s;
    d["O_s"] = t.O_s;
    d["H_s"] = t.H_s;
    d["K_r"] = t.K_r;
    d["O_r"] = t.O_r;
    d["H_r"] = t.H_r;
  } else {
    d["K_s"] = t.K_s;
    d["V_s"] = t.O_s;
    d["K_r"] = t.K_r;
    d["V_r"] = t.O_r;
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_prfield, mod) {
  mod.doc() = "Poisson random field calculations for two-species site data";
  mod.attr("__version__") = PRFIELD_VERSION;

  mod.def(
      "scale_map",
      [](int N, double sigma, double mu, std::int64_t k) {
        const auto s = prf::scale_map({N, sigma, mu, k});
        return py::make_tuple(s.t, s.theta, s.gamma);
      },
      py::arg("N"), py::arg("sigma"), py::arg("mu"), py::arg("k"),
      "Map (N, sigma, mu, k) to scaled (t, theta, gamma).");

  mod.def(
      "ruin_probability",
      [](int N, double sigma, int i, int top) {
        return prf::moran::absorption_profile({N, sigma, 0.0, 0}, i, top);
      },
      py::arg("N"), py::arg("sigma"), py::arg("i"), py::arg("top"),
      "P_i(hit `top` before 0) for the Moran chain.");

  mod.def(
      "equilibrium_density",
      [](double theta, double gamma, const std::vector<double>& x) {
        std::vector<double> out(x.size());
        for (size_t i = 0; i < x.size(); ++i)
          out[i] = prf::model::equilibrium_density_lebesgue(x[i], theta, gamma);
        return out;
      },
      py::arg("theta"), py::arg("gamma"), py::arg("x"),
      "Stationary mean density f(y) of the random field at the given points.");

  mod.def(
      "density",
      [](double t, double theta, double gamma, int intervals) {
        const auto grid = prf::Grid::for_time(t, intervals);
        const prf::ScaledParams beta{t, theta, gamma};
        const auto nu = prf::InitialMeasure::equilibrium(theta, gamma);
        const auto d = prf::model::prf_density(beta, nu, grid);
        py::dict out;
        out["nodes"] = d.nodes;
        out["legacy"] = d.legacy;
        out["fresh"] = d.fresh;
        out["total"] = d.total;
        return out;
      },
      py::arg("t"), py::arg("theta"), py::arg("gamma"),
      py::arg("intervals") = 800,
      "Time-t mean density split into legacy and fresh contributions, "
      "starting from the stationary field.");

  mod.def(
      "sample_fates",
      [](double t, double gamma, int n, double y, int intervals) {
        const auto grid = prf::Grid::for_time(t, intervals);
        const prf::ScaledParams beta{t, 1.0, gamma};
        prf::sampling::FateContext ctx(beta, {n}, grid);
        const auto f = ctx.fate(y, n);
        return py::make_tuple(f.I, f.J, f.K);
      },
      py::arg("t"), py::arg("gamma"), py::arg("n"), py::arg("y"),
      py::arg("intervals") = 800,
      "(I, J, K): P(sample of n is all-wild, polymorphic, all-mutant) for a "
      "site at frequency y a scaled time t ago.");

  mod.def(
      "expected_table",
      [](int m, int n, double t, double theta_s, double theta_r, double gamma,
         int intervals) {
        const auto grid = prf::Grid::for_time(t, intervals);
        const prf::ScaledParams bs{t, theta_s, 0.0}, br{t, theta_r, gamma};
        const auto r = prf::sampling::table_means(
            m, n, bs, br, prf::InitialMeasure::equilibrium(theta_s, 0.0),
            prf::InitialMeasure::equilibrium(theta_r, gamma), grid);
        return table_to_dict(r.means);
      },
      py::arg("m"), py::arg("n"), py::arg("t"), py::arg("theta_s"),
      py::arg("theta_r"), py::arg("gamma"), py::arg("intervals") = 800,
      "Expected DOHRS cell means for one locus.");

  mod.def(
      "loglik",
      [](const py::dict& observed, double t, double theta_s, double theta_r,
         double gamma, int intervals) {
        const auto tab = table_from_dict(observed);
        const auto grid = prf::Grid::for_time(t, intervals);
        return prf::inference::poisson_loglik({t, theta_s, 0.0},
                                              {t, theta_r, gamma}, tab, grid);
      },
      py::arg("observed"), py::arg("t"), py::arg("theta_s"), py::arg("theta_r"),
      py::arg("gamma"), py::arg("intervals") = 400,
      "Poisson log-likelihood of one observed table.");

  mod.def(
      "fit",
      [](const std::vector<py::dict>& observed, int starts, std::uint64_t seed,
         int intervals, double dt_floor) {
        std::vector<prf::CountTable> tabs;
        tabs.reserve(observed.size());
        for (const auto& d : observed) tabs.push_back(table_from_dict(d));
        prf::inference::FitConfig cfg;
        cfg.starts = starts;
        cfg.seed = seed;
        cfg.grid_intervals = intervals;
        cfg.dt_floor = dt_floor;
        const auto r = prf::inference::fit_mle(tabs, cfg);
        py::dict out;
        out["t"] = r.t;
        out["theta_s"] = r.theta_s;
        out["theta_r"] = r.theta_r;
        out["gamma"] = r.gamma;
        out["loglik"] = r.loglik;
        out["converged"] = r.converged;
        out["evals"] = r.evals;
        out["se"] = std::vector<double>(r.se.begin(), r.se.end());
        return out;
      },
      py::arg("observed"), py::arg("starts") = 5, py::arg("seed") = 0,
      py::arg("intervals") = 400, py::arg("dt_floor") = 2e-3,
      "Maximum-likelihood (t, theta_s, theta_r, gamma) over one or more loci.");

  mod.def(
      "ingest_fasta",
      [](const std::string& fasta, const std::string& species1,
         const std::string& species2, int frame_offset) {
        const auto smap = prf::align::species_map_from_lists(species1, species2);
        const auto a = prf::align::parse_alignment(fasta, smap, frame_offset);
        const auto cls = prf::align::classify_sites(a);
        const auto tabs = prf::align::count_tables(cls);
        py::dict out;
        out["dohrs"] = table_to_dict(tabs.dohrs);
        out["dprs"] = table_to_dict(tabs.dprs);
        py::dict census;
        for (const auto& [reason, count] : cls.exclusion_census)
          census[py::str(reason)] = count;
        out["excluded"] = census;
        out["sites"] = static_cast<int>(cls.sites.size());
        return out;
      },
      py::arg("fasta"), py::arg("species1"), py::arg("species2"),
      py::arg("frame_offset") = 0,
      "Classify an aligned FASTA and return DOHRS/DPRS tables.");
}

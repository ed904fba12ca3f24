// prf: one binary exposing the chain oracle, heat solver, field densities,
// expected/observed count tables, maximum-likelihood fitting, and Monte Carlo
// simulation as subcommands.  Every run drops a manifest.json beside its
// outputs; identical configurations produce byte-identical files apart from
// the manifest timestamp.
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "prf/alignment.hpp"
#include "prf/diffusion.hpp"
#include "prf/inference.hpp"
#include "prf/moran.hpp"
#include "prf/parallel.hpp"
#include "prf/prf_model.hpp"
#include "prf/sampling.hpp"
#include "prf/types.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt_num(double v) {
  if (v == 0.0) return "0";
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0f", v);
    return buf;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// Ingest-format table TSV; DPRS tables carry V in the O column with H = 0.
std::string table_tsv(const prf::CountTable& t) {
  std::ostringstream out;
  out << "# m=" << t.m << "\n# n=" << t.n << "\n# layout="
      << (t.layout == prf::TableLayout::DPRS ? "dprs" : "dohrs") << "\n";
  out << "class\tK\tO\tH\n";
  out << "silent\t" << fmt_num(t.K_s) << '\t' << fmt_num(t.O_s) << '\t'
      << fmt_num(t.H_s) << '\n';
  out << "replacement\t" << fmt_num(t.K_r) << '\t' << fmt_num(t.O_r) << '\t'
      << fmt_num(t.H_r) << '\n';
  return out.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, sep)) out.push_back(tok);
  return out;
}

// Accepts the single-locus ingest format (class/K/O/H) and the wide
// per-locus format written by `simulate --pair` (locus/K_s/../H_r).
std::vector<prf::CountTable> tables_from_tsv(const std::string& text) {
  int m = 0, n = 0;
  prf::TableLayout layout = prf::TableLayout::DOHRS;
  std::vector<std::string> rows;
  std::string header;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      key.erase(key.find_last_not_of(' ') + 1);
      const std::string val = line.substr(eq + 1);
      if (key == "m") m = std::stoi(val);
      else if (key == "n") n = std::stoi(val);
      else if (key == "layout" && val == "dprs") layout = prf::TableLayout::DPRS;
      continue;
    }
    if (header.empty()) header = line;
    else rows.push_back(line);
  }
  if (m <= 0 || n <= 0)
    throw std::runtime_error("table TSV: missing '# m=' / '# n=' sample sizes");
  std::vector<prf::CountTable> out;
  if (header == "class\tK\tO\tH") {
    prf::CountTable t;
    t.layout = layout;
    t.m = m;
    t.n = n;
    for (const auto& row : rows) {
      const auto f = split(row, '\t');
      if (f.size() != 4) throw std::runtime_error("table TSV: bad row: " + row);
      double* K = nullptr;
      double* O = nullptr;
      double* H = nullptr;
      if (f[0] == "silent") K = &t.K_s, O = &t.O_s, H = &t.H_s;
      else if (f[0] == "replacement") K = &t.K_r, O = &t.O_r, H = &t.H_r;
      else throw std::runtime_error("table TSV: unknown class: " + f[0]);
      *K = std::stod(f[1]);
      *O = std::stod(f[2]);
      *H = std::stod(f[3]);
    }
    out.push_back(t);
  } else if (header == "locus\tK_s\tO_s\tH_s\tK_r\tO_r\tH_r") {
    for (const auto& row : rows) {
      const auto f = split(row, '\t');
      if (f.size() != 7) throw std::runtime_error("table TSV: bad row: " + row);
      prf::CountTable t;
      t.layout = prf::TableLayout::DOHRS;
      t.m = m;
      t.n = n;
      t.K_s = std::stod(f[1]);
      t.O_s = std::stod(f[2]);
      t.H_s = std::stod(f[3]);
      t.K_r = std::stod(f[4]);
      t.O_r = std::stod(f[5]);
      t.H_r = std::stod(f[6]);
      out.push_back(t);
    }
  } else {
    throw std::runtime_error("table TSV: unrecognized header: " + header);
  }
  return out;
}

std::vector<prf::CountTable> tables_from_file(const fs::path& p) {
  const std::string text = read_file(p);
  if (p.extension() == ".json") {
    const json j = json::parse(text);
    std::vector<prf::CountTable> out;
    if (j.is_array())
      for (const auto& e : j) out.push_back(e.get<prf::CountTable>());
    else out.push_back(j.get<prf::CountTable>());
    return out;
  }
  return tables_from_tsv(text);
}

struct Emitter {
  fs::path dir;
  json inputs;       // parameter values for the manifest
  json tolerances;   // grid / tolerance metadata
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string command;

  void emit(const std::string& name, const std::string& content) {
    fs::create_directories(dir);
    write_file(dir / name, content);
    outputs.push_back(name);
  }

  void manifest() {
    char stamp[32];
    const std::time_t now = std::time(nullptr);
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    const json j{{"command", command},    {"generated_by", std::string("prf ") + PRFIELD_VERSION},
                 {"inputs", inputs},      {"outputs", outputs},
                 {"seed", seed},          {"threads", threads},
                 {"timestamp", stamp},    {"tolerances", tolerances}};
    fs::create_directories(dir);
    write_file(dir / "manifest.json", dump(j));
  }
};

prf::InitialMeasure parse_nu(const std::string& spec, double theta, double gamma) {
  if (spec == "zero") return prf::InitialMeasure::zero();
  if (spec == "equilibrium") return prf::InitialMeasure::equilibrium(theta, gamma);
  const json j = json::parse(read_file(spec));
  return j.get<prf::InitialMeasure>();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poisson random field calculations for two-species site data"};
  app.require_subcommand(1);
  // let --out / --threads appear after the subcommand name as well
  app.fallthrough();

  std::string out_dir = ".";
  int threads_opt = 0;
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--threads", threads_opt,
                 "Worker cap (default: PRF_THREADS or hardware)");

  // ---- oracle ----------------------------------------------------------
  auto* oracle = app.add_subcommand(
      "oracle", "Exact finite-population site counts and Green matrix");
  int o_N = 100;
  double o_sigma = 0.0, o_mu = 0.0, o_theta = 0.0;
  std::int64_t o_k = 0;
  int o_start = 0, o_green_from = 1;
  oracle->add_option("-N,--size", o_N, "Population size")->check(CLI::Range(2, 100000));
  oracle->add_option("--sigma", o_sigma, "Selection per birth (> -1)");
  oracle->add_option("--mu", o_mu, "New-mutant intensity per step")
      ->check(CLI::NonNegativeNumber);
  oracle->add_option("-k,--steps", o_k, "Step count")->check(CLI::NonNegativeNumber);
  oracle->add_option("--theta", o_theta,
                     "Start from the discretized equilibrium field with this theta")
      ->check(CLI::NonNegativeNumber);
  oracle->add_option("--start", o_start, "Add one site at this state initially");
  oracle->add_option("--green-from", o_green_from, "Row of the Green matrix to emit");

  // ---- density ---------------------------------------------------------
  auto* density = app.add_subcommand(
      "density", "Killed-semigroup surface N(t,f) on the frequency interval");
  double d_t = 1.0, d_gamma = 0.0, d_dt = 0.0;
  int d_J = 800;
  std::string d_payoff = "y1my", d_config;
  std::vector<double> d_snapshots;
  bool d_absorption = false;
  density->add_option("-t,--time", d_t, "Horizon")->check(CLI::PositiveNumber);
  density->add_option("--gamma", d_gamma, "Selection");
  density->add_option("--payoff", d_payoff, "Payoff f")
      ->check(CLI::IsMember({"one", "y", "y1my", "s", "scomp"}));
  density->add_option("--snapshots", d_snapshots, "Intermediate capture times");
  density->add_option("-J,--intervals", d_J, "Grid intervals")
      ->check(CLI::Range(8, 100000));
  density->add_option("--dt", d_dt, "Time step (0 = auto)");
  density->add_option("--config", d_config, "JSON file with intervals/dt")
      ->check(CLI::ExistingFile);
  density->add_flag("--absorption", d_absorption, "Also emit absorption CDFs");

  // ---- prf -------------------------------------------------------------
  auto* prfc = app.add_subcommand(
      "prf", "Mean density of the mutant-frequency field and fixation means");
  double p_t = 1.0, p_theta = 1.0, p_gamma = 0.0, p_dt = 0.0;
  int p_J = 800;
  std::string p_nu = "equilibrium";
  prfc->add_option("-t,--time", p_t, "Horizon")->check(CLI::PositiveNumber);
  prfc->add_option("--theta", p_theta, "Mutation rate")->check(CLI::NonNegativeNumber);
  prfc->add_option("--gamma", p_gamma, "Selection");
  prfc->add_option("--nu", p_nu, "Initial field: zero | equilibrium | JSON file");
  prfc->add_option("-J,--intervals", p_J, "Grid intervals")->check(CLI::Range(8, 100000));
  prfc->add_option("--dt", p_dt, "Time step (0 = auto)");

  // ---- tables ----------------------------------------------------------
  auto* tables = app.add_subcommand(
      "tables", "Expected table means, or observed tables from aligned FASTA");
  bool t_expected = false, t_count = false, t_double = false;
  double t_t = 0.3, t_theta_s = 1.0, t_theta_r = 1.0, t_gamma = 0.0, t_dt = 0.0;
  int t_m = 5, t_n = 5, t_J = 800, t_offset = 0;
  std::string t_in, t_sp1, t_sp2, t_spmap, t_nu = "equilibrium";
  tables->add_flag("--expected", t_expected, "Model means for one locus");
  tables->add_flag("--count", t_count, "Count an aligned FASTA");
  tables->add_option("-t,--time", t_t, "Divergence time")->check(CLI::PositiveNumber);
  tables->add_option("--theta-s", t_theta_s, "Silent mutation rate")
      ->check(CLI::NonNegativeNumber);
  tables->add_option("--theta-r", t_theta_r, "Replacement mutation rate")
      ->check(CLI::NonNegativeNumber);
  tables->add_option("--gamma", t_gamma, "Replacement selection");
  tables->add_option("-m,--sample-m", t_m, "Sample size, species 1")
      ->check(CLI::Range(1, 10000));
  tables->add_option("-n,--sample-n", t_n, "Sample size, species 2")
      ->check(CLI::Range(1, 10000));
  tables->add_option("--nu", t_nu, "Ancestral field: zero | equilibrium | JSON file");
  tables->add_option("-J,--intervals", t_J, "Grid intervals")->check(CLI::Range(8, 100000));
  tables->add_option("--dt", t_dt, "Time step (0 = auto)");
  tables->add_option("--in", t_in, "FASTA file")->check(CLI::ExistingFile);
  tables->add_option("--species1", t_sp1, "Comma-separated record ids, species 1");
  tables->add_option("--species2", t_sp2, "Comma-separated record ids, species 2");
  tables->add_option("--species-map", t_spmap, "Two-column TSV id -> 1|2")
      ->check(CLI::ExistingFile);
  tables->add_option("--offset", t_offset, "Reading-frame offset")
      ->check(CLI::NonNegativeNumber);
  tables->add_flag("--dprs-double-count", t_double,
                   "DPRS V counts shared polymorphisms twice");

  // ---- fit -------------------------------------------------------------
  auto* fit = app.add_subcommand("fit", "Poisson maximum likelihood over tables");
  std::vector<std::string> f_in;
  bool f_per_locus = false, f_double = false;
  int f_starts = 5, f_J = 400;
  std::uint64_t f_seed = 0;
  double f_t0 = 0.5, f_gamma0 = 0.0, f_dt_floor = 2e-3, f_level = 0.95;
  std::string f_profile;
  fit->add_option("--in", f_in, "Table TSV/JSON file(s)")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_flag("--per-locus", f_per_locus, "Free (theta_s, theta_r, gamma) per locus");
  fit->add_option("--starts", f_starts, "Multi-start count")->check(CLI::Range(1, 1000));
  fit->add_option("--seed", f_seed, "Start-point seed");
  fit->add_option("--t0", f_t0, "Initial divergence time")->check(CLI::PositiveNumber);
  fit->add_option("--gamma0", f_gamma0, "Initial selection");
  fit->add_option("-J,--intervals", f_J, "Grid intervals")->check(CLI::Range(8, 100000));
  fit->add_option("--dt-floor", f_dt_floor, "Smallest solver time step")
      ->check(CLI::PositiveNumber);
  fit->add_option("--profile", f_profile, "Profile-likelihood interval for one parameter")
      ->check(CLI::IsMember({"t", "theta_s", "theta_r", "gamma"}));
  fit->add_option("--level", f_level, "Interval coverage level");
  fit->add_flag("--dprs-double-count", f_double,
                "DPRS V means count shared polymorphisms twice");

  // ---- simulate --------------------------------------------------------
  auto* sim = app.add_subcommand(
      "simulate", "Monte Carlo site fields or two-species locus tables");
  bool s_pair = false;
  int s_N = 100, s_m = 5, s_n = 5, s_loci = 100, s_reps = 1000;
  std::int64_t s_k = 0;
  double s_sigma = 0.0, s_mu = 0.0, s_theta = 0.0;
  double s_t = 0.2, s_theta_s = 1.0, s_theta_r = 1.0, s_gamma = 0.0;
  std::uint64_t s_seed = 0;
  sim->add_flag("--pair", s_pair, "Two diverging populations, one table per locus");
  sim->add_option("-N,--size", s_N, "Population size")->check(CLI::Range(2, 100000));
  sim->add_option("--sigma", s_sigma, "Selection per birth (> -1)");
  sim->add_option("--mu", s_mu, "New-mutant intensity per step")
      ->check(CLI::NonNegativeNumber);
  sim->add_option("-k,--steps", s_k, "Step count")->check(CLI::NonNegativeNumber);
  sim->add_option("--theta", s_theta, "Equilibrium start with this theta")
      ->check(CLI::NonNegativeNumber);
  sim->add_option("--reps", s_reps, "Replicates")->check(CLI::Range(1, 100000000));
  sim->add_option("-t,--time", s_t, "Scaled divergence time (pair mode)")
      ->check(CLI::PositiveNumber);
  sim->add_option("--theta-s", s_theta_s, "Silent theta (pair mode)")
      ->check(CLI::NonNegativeNumber);
  sim->add_option("--theta-r", s_theta_r, "Replacement theta (pair mode)")
      ->check(CLI::NonNegativeNumber);
  sim->add_option("--gamma", s_gamma, "Replacement selection (pair mode)");
  sim->add_option("-m,--sample-m", s_m, "Sample size, species 1")->check(CLI::Range(1, 10000));
  sim->add_option("-n,--sample-n", s_n, "Sample size, species 2")->check(CLI::Range(1, 10000));
  sim->add_option("--loci", s_loci, "Locus count (pair mode)")->check(CLI::Range(1, 10000000));
  sim->add_option("--seed", s_seed, "Replicate seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 2;
  }

  Emitter em;
  em.dir = out_dir;
  em.threads = prf::resolve_threads(threads_opt);
  {
    std::ostringstream cmd;
    for (int i = 0; i < argc; ++i) cmd << (i ? " " : "") << argv[i];
    em.command = cmd.str();
  }

  try {
    if (*oracle) {
      const prf::FiniteParams fp{o_N, o_sigma, o_mu, o_k};
      fp.validate();
      std::vector<double> omega0(static_cast<size_t>(o_N) - 1, 0.0);
      if (o_theta > 0.0) omega0 = prf::moran::equilibrium_omega(o_N, o_theta, o_N * o_sigma);
      if (o_start > 0 && o_start < o_N) omega0[o_start - 1] += 1.0;
      const auto field = prf::moran::expected_site_counts(fp, omega0);
      const auto green = prf::moran::chain_green(fp);
      if (o_green_from < 1 || o_green_from >= o_N)
        throw std::invalid_argument("--green-from must be an interior state");

      std::ostringstream counts;
      counts << "state\tvalue\n";
      for (int j = 1; j <= o_N; ++j)
        counts << j << '\t' << fmt_num(field.expected[j - 1]) << '\n';
      em.emit("oracle_counts.tsv", counts.str());

      std::ostringstream gout;
      gout << "state\tvalue\n";
      for (int j = 1; j < o_N; ++j)
        gout << j << '\t' << fmt_num(green.green(o_green_from, j)) << '\n';
      em.emit("oracle_green.tsv", gout.str());

      json j{{"params", fp},
             {"scaled", prf::scale_map(fp)},
             {"fixed_mean", field.fixed_mean},
             {"h", green.h},
             {"green_from", o_green_from},
             {"dual_expected_steps", green.dual_expected_steps(o_green_from)}};
      em.emit("oracle.json", dump(j));
      em.inputs = json{{"N", o_N}, {"sigma", o_sigma}, {"mu", o_mu}, {"k", o_k},
                       {"theta", o_theta}, {"start", o_start}, {"green_from", o_green_from}};
      em.tolerances = json::object();
    } else if (*density) {
      if (!d_config.empty()) {
        const json cfg = json::parse(read_file(d_config));
        if (cfg.contains("intervals")) d_J = cfg["intervals"].get<int>();
        if (cfg.contains("dt")) d_dt = cfg["dt"].get<double>();
      }
      const double dt = d_dt > 0.0 ? d_dt : std::min(1e-3, d_t / 200.0);
      const auto grid = prf::Grid::uniform(d_J, dt);
      const auto payoff = [&](double y) -> double {
        if (d_payoff == "one") return 1.0;
        if (d_payoff == "y") return y;
        if (d_payoff == "s") return prf::diffusion::scale_fn(y, d_gamma);
        if (d_payoff == "scomp") return prf::diffusion::scale_fn_complement(y, d_gamma);
        return y * (1.0 - y);
      };
      prf::diffusion::HeatOptions opt;
      opt.snapshot_times = d_snapshots;
      const auto surf = prf::diffusion::heat_apply(payoff, d_t, d_gamma, grid, opt);

      std::ostringstream tsv;
      tsv << "t\tx\tvalue\n";
      for (size_t s = 0; s < surf.snapshots.size(); ++s)
        for (size_t i = 0; i < surf.nodes.size(); ++i)
          tsv << fmt_num(surf.snapshot_times[s]) << '\t' << fmt_num(surf.nodes[i])
              << '\t' << fmt_num(surf.snapshots[s][i]) << '\n';
      for (size_t i = 0; i < surf.nodes.size(); ++i)
        tsv << fmt_num(surf.t) << '\t' << fmt_num(surf.nodes[i]) << '\t'
            << fmt_num(surf.values[i]) << '\n';
      em.emit("density_surface.tsv", tsv.str());

      if (d_absorption) {
        const auto cdf = prf::diffusion::absorption_cdf(d_t, d_gamma, grid);
        std::ostringstream atsv;
        atsv << "x\tP0\tP1\tsurvive\n";
        for (size_t i = 0; i < surf.nodes.size(); ++i)
          atsv << fmt_num(surf.nodes[i]) << '\t' << fmt_num(cdf.p0[i]) << '\t'
               << fmt_num(cdf.p1[i]) << '\t'
               << fmt_num(1.0 - cdf.p0[i] - cdf.p1[i]) << '\n';
        em.emit("absorption.tsv", atsv.str());
      }
      double sup = 0.0;
      for (double v : surf.values) sup = std::max(sup, std::abs(v));
      json j{{"t", d_t}, {"gamma", d_gamma}, {"payoff", d_payoff},
             {"intervals", d_J}, {"dt", dt}, {"sup_norm", sup}};
      em.emit("density.json", dump(j));
      em.inputs = json{{"t", d_t}, {"gamma", d_gamma}, {"payoff", d_payoff},
                       {"snapshots", d_snapshots}, {"absorption", d_absorption}};
      em.tolerances = json{{"intervals", d_J}, {"dt", dt}};
    } else if (*prfc) {
      const double dt = p_dt > 0.0 ? p_dt : std::min(1e-3, p_t / 200.0);
      const auto grid = prf::Grid::uniform(p_J, dt);
      const prf::ScaledParams beta{p_t, p_theta, p_gamma};
      beta.validate();
      const auto nu = parse_nu(p_nu, p_theta, p_gamma);
      const auto dens = prf::model::prf_density(beta, nu, grid);
      const auto fix = prf::model::fixation_mean(beta, nu, grid);

      std::ostringstream tsv;
      tsv << "y\tf_L\tf_N\ttotal\n";
      for (size_t i = 1; i + 1 < dens.nodes.size(); ++i)
        tsv << fmt_num(dens.nodes[i]) << '\t' << fmt_num(dens.legacy[i]) << '\t'
            << fmt_num(dens.fresh[i]) << '\t' << fmt_num(dens.total[i]) << '\n';
      em.emit("prf_density.tsv", tsv.str());

      json j{{"beta", beta}, {"nu", nu},
             {"fixation", {{"legacy", fix.legacy}, {"fresh", fix.fresh}, {"total", fix.total}}}};
      em.emit("fixation.json", dump(j));
      em.inputs = json{{"t", p_t}, {"theta", p_theta}, {"gamma", p_gamma}, {"nu", p_nu}};
      em.tolerances = json{{"intervals", p_J}, {"dt", dt}};
    } else if (*tables) {
      if (t_expected == t_count)
        throw CLI::ValidationError("tables", "pass exactly one of --expected / --count");
      if (t_expected) {
        const double dt = t_dt > 0.0 ? t_dt : std::min(1e-3, t_t / 200.0);
        const auto grid = prf::Grid::uniform(t_J, dt);
        const prf::ScaledParams bs{t_t, t_theta_s, 0.0}, br{t_t, t_theta_r, t_gamma};
        const auto nu_s = parse_nu(t_nu, t_theta_s, 0.0);
        const auto nu_r = parse_nu(t_nu, t_theta_r, t_gamma);
        const auto r = prf::sampling::table_means(t_m, t_n, bs, br, nu_s, nu_r, grid);
        em.emit("expected_table.json", dump(json(r)));
        em.emit("expected_table.tsv", table_tsv(r.means));
        em.inputs = json{{"t", t_t}, {"theta_s", t_theta_s}, {"theta_r", t_theta_r},
                         {"gamma", t_gamma}, {"m", t_m}, {"n", t_n}, {"nu", t_nu}};
        em.tolerances = json{{"intervals", t_J}, {"dt", dt}};
      } else {
        if (t_in.empty())
          throw CLI::ValidationError("tables", "--count needs --in FASTA");
        std::map<std::string, int> smap;
        if (!t_spmap.empty())
          smap = prf::align::species_map_from_tsv(read_file(t_spmap));
        else if (!t_sp1.empty() && !t_sp2.empty())
          smap = prf::align::species_map_from_lists(t_sp1, t_sp2);
        else
          throw CLI::ValidationError(
              "tables", "--count needs --species1/--species2 or --species-map");
        const auto aln = prf::align::parse_alignment(read_file(t_in), smap, t_offset);
        const auto cls = prf::align::classify_sites(aln);
        const auto pair = prf::align::count_tables(cls, t_double);
        em.emit("observed_dohrs.tsv", table_tsv(pair.dohrs));
        em.emit("observed_dprs.tsv", table_tsv(pair.dprs));
        json j{{"dohrs", pair.dohrs}, {"dprs", pair.dprs},
               {"sites", cls.sites.size()}, {"excluded", cls.exclusion_census},
               {"polarity", "minor-allele-as-mutant"}};
        em.emit("tables.json", dump(j));
        em.inputs = json{{"in", t_in}, {"offset", t_offset},
                         {"dprs_double_count", t_double}};
        em.tolerances = json::object();
      }
    } else if (*fit) {
      std::vector<prf::CountTable> tabs;
      for (const auto& f : f_in)
        for (auto& t : tables_from_file(f)) tabs.push_back(std::move(t));
      prf::inference::FitConfig cfg;
      cfg.t0 = f_t0;
      cfg.gamma0 = f_gamma0;
      cfg.starts = f_starts;
      cfg.seed = f_seed;
      cfg.per_locus = f_per_locus;
      cfg.dprs_double_count_shared = f_double;
      cfg.grid_intervals = f_J;
      cfg.dt_floor = f_dt_floor;
      const auto r = prf::inference::fit_mle(tabs, cfg);
      json j{{"t", r.t}, {"theta_s", r.theta_s}, {"theta_r", r.theta_r},
             {"gamma", r.gamma}, {"loglik", r.loglik}, {"converged", r.converged},
             {"evals", r.evals}, {"loci", tabs.size()}};
      json se = json::array();
      for (double s : r.se) se.push_back(std::isfinite(s) ? json(s) : json());
      j["se"] = se;
      if (f_per_locus) {
        j["theta_s_loci"] = r.theta_s_loci;
        j["theta_r_loci"] = r.theta_r_loci;
        j["gamma_loci"] = r.gamma_loci;
      }
      if (!f_profile.empty()) {
        const auto ci = prf::inference::profile_ci(tabs, cfg, f_profile, f_level);
        j["profile"] = json{{"parameter", f_profile}, {"level", ci.level},
                            {"lo", ci.lo}, {"hi", ci.hi},
                            {"lo_at_bound", ci.lo_at_bound},
                            {"hi_at_bound", ci.hi_at_bound}};
      }
      em.emit("fit.json", dump(j));
      em.seed = f_seed;
      em.inputs = json{{"in", f_in}, {"starts", f_starts}, {"t0", f_t0},
                       {"gamma0", f_gamma0}, {"per_locus", f_per_locus},
                       {"profile", f_profile}, {"level", f_level}};
      em.tolerances = json{{"intervals", f_J}, {"dt_floor", f_dt_floor},
                           {"tol", cfg.tol}, {"max_iter", cfg.max_iter}};
    } else if (*sim) {
      if (s_pair) {
        prf::moran::PairSimConfig cfg;
        cfg.N = s_N;
        cfg.t = s_t;
        cfg.theta_s = s_theta_s;
        cfg.theta_r = s_theta_r;
        cfg.gamma = s_gamma;
        cfg.m = s_m;
        cfg.n = s_n;
        cfg.loci = s_loci;
        cfg.seed = s_seed;
        cfg.threads = em.threads;
        const auto tabs = prf::moran::simulate_pair_tables(cfg);
        std::ostringstream tsv;
        tsv << "# m=" << s_m << "\n# n=" << s_n << "\n";
        tsv << "locus\tK_s\tO_s\tH_s\tK_r\tO_r\tH_r\n";
        for (size_t l = 0; l < tabs.size(); ++l) {
          const auto& t = tabs[l];
          tsv << l << '\t' << fmt_num(t.K_s) << '\t' << fmt_num(t.O_s) << '\t'
              << fmt_num(t.H_s) << '\t' << fmt_num(t.K_r) << '\t'
              << fmt_num(t.O_r) << '\t' << fmt_num(t.H_r) << '\n';
        }
        em.emit("sim_tables.tsv", tsv.str());
        em.emit("sim_tables.json", dump(json(tabs)));
        em.seed = s_seed;
        em.inputs = json{{"N", s_N}, {"t", s_t}, {"theta_s", s_theta_s},
                         {"theta_r", s_theta_r}, {"gamma", s_gamma},
                         {"m", s_m}, {"n", s_n}, {"loci", s_loci}};
      } else {
        const prf::FiniteParams fp{s_N, s_sigma, s_mu, s_k};
        fp.validate();
        std::vector<double> omega0(static_cast<size_t>(s_N) - 1, 0.0);
        if (s_theta > 0.0)
          omega0 = prf::moran::equilibrium_omega(s_N, s_theta, s_N * s_sigma);
        const auto field =
            prf::moran::simulate_field(fp, omega0, s_seed, s_reps, em.threads);
        std::ostringstream tsv;
        tsv << "state\tmean\tvariance\n";
        for (int j = 1; j <= s_N; ++j)
          tsv << j << '\t' << fmt_num(field.mean[j - 1]) << '\t'
              << fmt_num(field.variance[j - 1]) << '\n';
        em.emit("sim_field.tsv", tsv.str());
        json j{{"params", fp}, {"reps", s_reps}, {"fixed_mean", field.fixed_mean}};
        em.emit("sim_field.json", dump(j));
        em.seed = s_seed;
        em.inputs = json{{"N", s_N}, {"sigma", s_sigma}, {"mu", s_mu},
                         {"k", s_k}, {"theta", s_theta}, {"reps", s_reps}};
      }
      em.tolerances = json::object();
    }
    em.manifest();
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

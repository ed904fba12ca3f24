// End-to-end checks of the prf binary: exit codes, artifact layout, rerun
// determinism, and golden alignment corpora.  Numerical content is covered by
// the unit suites; here we only pin values that are exact or cheap to verify.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "prf/prf_model.hpp"
#include "prf/sampling.hpp"
#include "prf/types.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path d =
      fs::temp_directory_path() / ("prf_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Runs the binary through the shell; returns the exit code.
int run_cli(const std::string& args, const std::string& env_prefix = "") {
  const std::string cmd =
      env_prefix + std::string(CLI_PATH) + " " + args + " >/dev/null 2>/dev/null";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(bool(in), "missing file: " << p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::string drop_lines_containing(const std::string& text, const std::string& needle) {
  std::string out;
  for (const auto& line : lines_of(text))
    if (line.find(needle) == std::string::npos) out += line + "\n";
  return out;
}

// Same rendering the binary uses for its TSV artifacts.
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

}  // namespace

TEST_CASE("usage errors exit 2 and leave no artifacts") {
  const fs::path d = fresh_dir("usage");
  CHECK(run_cli("") == 2);
  CHECK(run_cli("--bogus-flag") == 2);
  CHECK(run_cli("nosuchcommand") == 2);
  CHECK(run_cli("--out " + d.string() + " tables") == 2);              // neither mode
  CHECK(run_cli("--out " + d.string() + " tables --expected --count") == 2);
  CHECK(run_cli("fit") == 2);                                          // --in required
  CHECK(run_cli("oracle -N 1") == 2);                                  // below range
  CHECK(!fs::exists(d / "manifest.json"));
}

TEST_CASE("malformed inputs exit 1") {
  const fs::path d = fresh_dir("badinput");
  spit(d / "bad.tsv", "class\tK\tO\tH\nsilent\t1\t0\t0\nreplacement\t0\t0\t0\n");
  CHECK(run_cli("--out " + d.string() + " fit --in " + (d / "bad.tsv").string()) == 1);
  CHECK(run_cli("--out " + d.string() +
                " prf -t 0.1 --nu " + (d / "nosuch.json").string()) == 1);
}

TEST_CASE("oracle emits exact equilibrium counts and the neutral Green row") {
  const fs::path d = fresh_dir("oracle");
  REQUIRE(run_cli("--out " + d.string() + " oracle -N 10 --theta 1 --mu 0 -k 0") == 0);

  // theta/j field, untouched by a zero-step horizon
  const auto counts = lines_of(slurp(d / "oracle_counts.tsv"));
  REQUIRE(counts.size() == 11);
  CHECK(counts[0] == "state\tvalue");
  CHECK(counts[1] == "1\t1");
  CHECK(counts[2] == "2\t0.5");
  CHECK(counts[4] == "4\t0.25");
  CHECK(counts[5] == "5\t0.2");
  CHECK(counts[8] == "8\t0.125");
  CHECK(counts[10] == "10\t0");

  // neutral g(1,j) = N/j
  const auto green = lines_of(slurp(d / "oracle_green.tsv"));
  REQUIRE(green.size() == 10);
  CHECK(green[1] == "1\t10");
  CHECK(green[2] == "2\t5");
  CHECK(green[4] == "4\t2.5");
  CHECK(green[5] == "5\t2");
  CHECK(green[8] == "8\t1.25");

  const json j = json::parse(slurp(d / "oracle.json"));
  CHECK(j["fixed_mean"].get<double>() == 0.0);
  REQUIRE(j["h"].size() == 11);
  CHECK(j["h"][0].get<double>() == 0.0);
  CHECK(j["h"][10].get<double>() == 1.0);
  CHECK(j["h"][1].get<double>() == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(j["dual_expected_steps"].get<double>() > 0.0);

  const json man = json::parse(slurp(d / "manifest.json"));
  CHECK(man["outputs"].size() == 3);
  CHECK(man.contains("timestamp"));
  CHECK(man["seed"].get<std::uint64_t>() == 0);
}

TEST_CASE("threads resolve from --threads or PRF_THREADS") {
  const fs::path d = fresh_dir("threads");
  REQUIRE(run_cli("--out " + d.string() + " --threads 2 oracle -N 6 -k 0") == 0);
  CHECK(json::parse(slurp(d / "manifest.json"))["threads"].get<int>() == 2);
  REQUIRE(run_cli("--out " + d.string() + " oracle -N 6 -k 0", "PRF_THREADS=3 ") == 0);
  CHECK(json::parse(slurp(d / "manifest.json"))["threads"].get<int>() == 3);
}

TEST_CASE("tables --expected matches an in-process computation byte for byte") {
  const fs::path d = fresh_dir("expected");
  const std::string args =
      " tables --expected -t 0.3 --theta-s 1.5 --theta-r 0.7 --gamma 0.8"
      " -m 4 -n 3 -J 200 --dt 0.002";
  REQUIRE(run_cli("--out " + d.string() + args) == 0);

  const auto grid = prf::Grid::uniform(200, 0.002);
  const prf::ScaledParams bs{0.3, 1.5, 0.0}, br{0.3, 0.7, 0.8};
  const auto r = prf::sampling::table_means(
      4, 3, bs, br, prf::InitialMeasure::equilibrium(1.5, 0.0),
      prf::InitialMeasure::equilibrium(0.7, 0.8), grid);

  CHECK(slurp(d / "expected_table.json") == json(r).dump(2) + "\n");
  CHECK(slurp(d / "expected_table.tsv") == table_tsv(r.means));
}

TEST_CASE("reruns are byte-identical apart from the manifest timestamp") {
  const fs::path d = fresh_dir("rerun");
  const std::string cmd = "--out " + d.string() +
      " tables --expected -t 0.2 --theta-s 1 --theta-r 1 --gamma 0.5 -m 3 -n 3"
      " -J 120 --dt 0.002";
  REQUIRE(run_cli(cmd) == 0);
  const std::string table1 = slurp(d / "expected_table.json");
  const std::string man1 = slurp(d / "manifest.json");
  REQUIRE(run_cli(cmd) == 0);
  CHECK(slurp(d / "expected_table.json") == table1);
  CHECK(drop_lines_containing(slurp(d / "manifest.json"), "\"timestamp\"") ==
        drop_lines_containing(man1, "\"timestamp\""));
}

TEST_CASE("golden alignment corpora reproduce hand-counted tables") {
  struct Golden {
    const char* fasta;
    const char* expect;
    const char* sp1;
    const char* sp2;
    int offset;
  };
  const Golden goldens[] = {
      {"g1.fasta", "g1.dohrs.tsv", "a1,a2", "b1,b2", 0},
      {"g2.fasta", "g2.dohrs.tsv", "a1,a2", "b1,b2", 0},
      {"g3.fasta", "g3.dohrs.tsv", "a1,a2", "b1,b2", 0},
      {"g4.fasta", "g4.dohrs.tsv", "a1,a2", "b1,b2", 1},
      {"g5.fasta", "g5.dohrs.tsv", "a1,a2,a3", "b1,b2", 0},
      {"g6.fasta", "g6.dohrs.tsv", "a1,a2", "b1,b2", 0},
  };
  for (const auto& g : goldens) {
    CAPTURE(g.fasta);
    const fs::path d = fresh_dir(std::string("golden_") + g.fasta);
    std::string args = "--out " + d.string() + " tables --count --in " +
                       (fs::path(DATA_DIR) / g.fasta).string() + " --species1 " +
                       g.sp1 + " --species2 " + g.sp2;
    if (g.offset) args += " --offset " + std::to_string(g.offset);
    REQUIRE(run_cli(args) == 0);
    CHECK(slurp(d / "observed_dohrs.tsv") == slurp(fs::path(DATA_DIR) / g.expect));
  }
}

TEST_CASE("shared polymorphisms fold into the merged-layout V column") {
  const fs::path d = fresh_dir("dprs");
  const std::string base = " tables --count --in " +
      (fs::path(DATA_DIR) / "g2.fasta").string() +
      " --species1 a1,a2 --species2 b1,b2";
  // g2 has O_s=1, H_s=1: V_s = O_s + H_s, or + 2 H_s when double-counted.
  REQUIRE(run_cli("--out " + d.string() + base) == 0);
  CHECK(slurp(d / "observed_dprs.tsv") ==
        "# m=2\n# n=2\n# layout=dprs\nclass\tK\tO\tH\n"
        "silent\t0\t2\t0\nreplacement\t1\t0\t0\n");
  REQUIRE(run_cli("--out " + d.string() + base + " --dprs-double-count") == 0);
  CHECK(slurp(d / "observed_dprs.tsv") ==
        "# m=2\n# n=2\n# layout=dprs\nclass\tK\tO\tH\n"
        "silent\t0\t3\t0\nreplacement\t1\t0\t0\n");
}

TEST_CASE("exclusion census and site totals surface in tables.json") {
  const fs::path d = fresh_dir("census");
  REQUIRE(run_cli("--out " + d.string() + " tables --count --in " +
                  (fs::path(DATA_DIR) / "g3.fasta").string() +
                  " --species1 a1,a2 --species2 b1,b2") == 0);
  const json j = json::parse(slurp(d / "tables.json"));
  CHECK(j["sites"].get<int>() == 12);
  const json& ex = j["excluded"];
  CHECK(ex["gap"].get<int>() == 1);
  CHECK(ex["ambiguous_base"].get<int>() == 1);
  CHECK(ex["more_than_two_alleles"].get<int>() == 1);
  CHECK(ex["codon_spans_excluded"].get<int>() == 6);
  CHECK(ex["codon_multiple_polymorphisms"].get<int>() == 3);
  int total = 0;
  for (const auto& [key, v] : ex.items()) total += v.get<int>();
  CHECK(total == 12);  // every site of g3 is excluded

  // frame trimming: offset 1 on length-8 records marks exactly two frame sites
  const fs::path d4 = fresh_dir("census4");
  REQUIRE(run_cli("--out " + d4.string() + " tables --count --in " +
                  (fs::path(DATA_DIR) / "g4.fasta").string() +
                  " --species1 a1,a2 --species2 b1,b2 --offset 1") == 0);
  const json j4 = json::parse(slurp(d4 / "tables.json"));
  CHECK(j4["sites"].get<int>() == 8);
  CHECK(j4["excluded"]["frame"].get<int>() == 2);
}

TEST_CASE("simulate --pair output feeds fit, and fit replays bit-identically") {
  const fs::path sim = fresh_dir("simfit_sim");
  REQUIRE(run_cli("--out " + sim.string() +
                  " simulate --pair -N 60 -t 0.15 --theta-s 1.2 --theta-r 0.8"
                  " --gamma 0.4 -m 5 -n 5 --loci 60 --seed 4") == 0);
  const auto rows = lines_of(slurp(sim / "sim_tables.tsv"));
  REQUIRE(rows.size() == 2 + 1 + 60);  // two headers, column line, one row per locus
  CHECK(rows[2] == "locus\tK_s\tO_s\tH_s\tK_r\tO_r\tH_r");

  const std::string fit_args = " fit --in " + (sim / "sim_tables.tsv").string() +
      " --starts 2 --seed 1 -J 120 --dt-floor 0.005";
  const fs::path f1 = fresh_dir("simfit_a"), f2 = fresh_dir("simfit_b");
  REQUIRE(run_cli("--out " + f1.string() + fit_args) == 0);
  REQUIRE(run_cli("--out " + f2.string() + fit_args) == 0);

  const json fit = json::parse(slurp(f1 / "fit.json"));
  CHECK(fit["converged"].get<bool>());
  CHECK(std::isfinite(fit["loglik"].get<double>()));
  CHECK(fit["t"].get<double>() > 0.0);
  CHECK(fit["theta_s"].get<double>() > 0.0);
  CHECK(fit["loci"].get<int>() == 60);
  CHECK(slurp(f1 / "fit.json") == slurp(f2 / "fit.json"));
}

TEST_CASE("density --absorption reports the exact-eigenfunction sup norm") {
  const fs::path d = fresh_dir("density");
  REQUIRE(run_cli("--out " + d.string() +
                  " density -t 0.5 --gamma 0 --payoff y1my -J 64 --dt 0.005"
                  " --absorption") == 0);
  const json j = json::parse(slurp(d / "density.json"));
  // y(1-y) decays exactly at rate 2; sup over the grid sits at y = 1/2
  CHECK(j["sup_norm"].get<double>() ==
        doctest::Approx(0.25 * std::exp(-1.0)).epsilon(5e-4));
  const auto rows = lines_of(slurp(d / "absorption.tsv"));
  REQUIRE(rows.size() == 66);  // header + 65 nodes
  CHECK(rows[0] == "x\tP0\tP1\tsurvive");
}

TEST_CASE("prf --nu zero leaves no legacy mass") {
  const fs::path d = fresh_dir("prfzero");
  REQUIRE(run_cli("--out " + d.string() +
                  " prf -t 0.4 --theta 2 --gamma 0 --nu zero -J 64 --dt 0.005") == 0);
  const json j = json::parse(slurp(d / "fixation.json"));
  CHECK(j["fixation"]["legacy"].get<double>() == 0.0);
  CHECK(j["fixation"]["fresh"].get<double>() > 0.0);
  CHECK(j["fixation"]["total"].get<double>() ==
        doctest::Approx(j["fixation"]["fresh"].get<double>()).epsilon(1e-12));
  const auto rows = lines_of(slurp(d / "prf_density.tsv"));
  CHECK(rows.size() == 1 + 63);  // header + interior nodes
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dsl/report/csv.hpp"
#include "dsl/report/manifest.hpp"

// End-to-end checks of the command-line tool.  DSL_BIN is injected by
// CMake and points at the built executable.

namespace fs = std::filesystem;

namespace {

std::string bin() { return DSL_BIN; }

int run(const std::string& args) {
  const std::string cmd = bin() + " " + args + " >/dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::string fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "dsl_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

std::string slurp(const std::string& path) { return dsl::report::read_file(path); }

}  // namespace

TEST_CASE("theory command writes a grid CSV and manifest") {
  const std::string out = fresh_dir("theory");
  REQUIRE(run("--out " + out +
              " theory --alpha 1,2 --f 0.6 --strategy keep-hardest,keep-easiest") == 0);
  const std::string csv = slurp(out + "/theory.csv");
  CHECK(csv.rfind("alpha_syn,f,gamma_deg,strategy,R,rho,kappa,epsilon,residual,converged",
                  0) == 0);
  // header + 4 rows
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(fs::exists(out + "/manifest.json"));
}

TEST_CASE("theory command is byte-deterministic") {
  const std::string a = fresh_dir("theory_a");
  const std::string b = fresh_dir("theory_b");
  const std::string args = " theory --alpha 0.5,1 --f 0.6,1.0 --strategy keep-hardest";
  REQUIRE(run("--out " + a + args) == 0);
  REQUIRE(run("--out " + b + args) == 0);
  CHECK(slurp(a + "/theory.csv") == slurp(b + "/theory.csv"));
}

TEST_CASE("simulate command determinism and schema") {
  const std::string a = fresh_dir("sim_a");
  const std::string b = fresh_dir("sim_b");
  const std::string args =
      " simulate --d 30 --trials 3 --alpha 1 --f 0.6 --strategy keep-hardest --seed 9";
  REQUIRE(run("--out " + a + args) == 0);
  REQUIRE(run("--out " + b + args) == 0);
  CHECK(slurp(a + "/sim_trials.csv") == slurp(b + "/sim_trials.csv"));
  CHECK(slurp(a + "/sim_summary.csv") == slurp(b + "/sim_summary.csv"));
  const std::string csv = slurp(a + "/sim_trials.csv");
  CHECK(csv.rfind("trial,d,alpha_tot,f,gamma_deg,strategy,R,kappa,epsilon_analytic,"
                  "epsilon_empirical,seed",
                  0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 trials
}

TEST_CASE("compare joins theory with simulation and gates on 2 SE") {
  const std::string out = fresh_dir("cmp");
  // Theory compared against a hand-built "simulation" summary copied
  // from itself: deltas are zero, everything passes.
  REQUIRE(run("--out " + out + " theory --alpha 1 --f 0.6 --strategy keep-hardest") == 0);
  const std::string theory_csv = out + "/theory.csv";
  std::ifstream f(theory_csv);
  std::string header, row;
  std::getline(f, header);
  std::getline(f, row);
  std::stringstream ss(row);
  std::vector<std::string> cells;
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  const std::string eps = cells[7];

  std::ofstream sim(out + "/sim_summary.csv");
  sim << "alpha_syn,f,gamma_deg,strategy,d,alpha_tot,trials,mean_epsilon,std_error,"
         "mean_epsilon_empirical,std_error_empirical,mean_kappa\n";
  sim << "1,0.6,0,keep-hardest,200,1.6666,100," << eps << ",0.001,0,0,0\n";
  sim.close();
  CHECK(run("--out " + out + " compare --theory-csv " + theory_csv + " --sim-csv " +
            out + "/sim_summary.csv") == 0);

  // Inject an outlier: shifted epsilon fails and flips the exit status.
  std::ofstream sim2(out + "/sim_bad.csv");
  sim2 << "alpha_syn,f,gamma_deg,strategy,d,alpha_tot,trials,mean_epsilon,std_error,"
          "mean_epsilon_empirical,std_error_empirical,mean_kappa\n";
  sim2 << "1,0.6,0,keep-hardest,200,1.6666,100," << std::stod(eps) + 0.2
       << ",0.001,0,0,0\n";
  sim2.close();
  CHECK(run("--out " + out + " compare --theory-csv " + theory_csv + " --sim-csv " +
            out + "/sim_bad.csv") != 0);
  const std::string cmp = slurp(out + "/compare.csv");
  CHECK(cmp.find("FAIL") != std::string::npos);
}

TEST_CASE("distill command: lambda = 0 gives zero paired deltas") {
  const std::string out = fresh_dir("distill0");
  REQUIRE(run("--out " + out +
              " distill --mode gm --lambda 0 --steps 6 --T 2 --n-per-class 64 "
              "--batch-real 16 --seeds 7 --eval-train-steps 80") == 0);
  const std::string agg = slurp(out + "/distill_aggregate.csv");
  // baseline and sdc runs coincide bit for bit at lambda = 0
  std::stringstream ss(agg);
  std::string header, row;
  std::getline(ss, header);
  std::getline(ss, row);
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream rs(row);
  while (std::getline(rs, cell, ',')) cells.push_back(cell);
  CHECK(cells[4] == "0");  // paired_acc_delta
  CHECK(cells[7] == "0");  // grad_norm_delta
}

TEST_CASE("distill command replays identically for a fixed seed list") {
  const std::string a = fresh_dir("distill_a");
  const std::string b = fresh_dir("distill_b");
  const std::string args =
      " distill --mode tm --steps 5 --n-per-class 64 --bank-checkpoints 6 "
      "--seeds 7 --eval-train-steps 60";
  REQUIRE(run("--out " + a + args) == 0);
  REQUIRE(run("--out " + b + args) == 0);
  CHECK(slurp(a + "/trace_seed7_sdc.csv") == slurp(b + "/trace_seed7_sdc.csv"));
  CHECK(slurp(a + "/syn_seed7_sdc.json") == slurp(b + "/syn_seed7_sdc.json"));
}

TEST_CASE("difficulty command emits report and summary") {
  const std::string out = fresh_dir("difficulty");
  REQUIRE(run("--out " + out +
              " difficulty --members 6 --n-per-class 80 --member-steps 30") == 0);
  const std::string csv = slurp(out + "/difficulty.csv");
  CHECK(csv.rfind("index,chi,gradn,mean_loss", 0) == 0);
  const std::string j = slurp(out + "/difficulty_summary.json");
  CHECK(j.find("spearman_chi_gradn") != std::string::npos);
  CHECK(j.find("member_seeds") != std::string::npos);
}

TEST_CASE("config file and print-defaults") {
  const std::string out = fresh_dir("config");
  const std::string cfg_path = out + "/run.ini";
  {
    std::ofstream cfg(cfg_path);
    cfg << "out=\"" << out << "\"\n";
    cfg << "[theory]\n";
    cfg << "alpha=1,2\n";
    cfg << "f=0.6\n";
    cfg << "strategy=keep-hardest\n";
  }
  REQUIRE(run("--config " + cfg_path + " theory") == 0);
  const std::string csv = slurp(out + "/theory.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 rows

  // malformed config -> usage error with nonzero exit
  {
    std::ofstream cfg(cfg_path);
    cfg << "[theory]\nalpha=not-a-number\n";
  }
  CHECK(run("--config " + cfg_path + " theory") != 0);

  CHECK(run("--print-defaults") == 0);
}

TEST_CASE("manifest checksums validate the emitted files") {
  const std::string out = fresh_dir("manifest");
  REQUIRE(run("--out " + out + " theory --alpha 1 --f 1 --strategy keep-random") == 0);
  const std::string manifest = slurp(out + "/manifest.json");
  const std::string csv = slurp(out + "/theory.csv");
  CHECK(manifest.find(dsl::report::checksum_hex(csv)) != std::string::npos);
  CHECK(manifest.find("\"tool_version\"") != std::string::npos);
  CHECK(manifest.find("\"wall_time_seconds\"") != std::string::npos);
}

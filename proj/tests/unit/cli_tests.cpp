// End-to-end checks of the hazmatch binary; the path to the built tool
// arrives as argv[1] from ctest.
#define DOCTEST_CONFIG_IMPLEMENT
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

#include "hazmatch/dataset.hpp"
#include "hazmatch/rng.hpp"
#include "hazmatch/simulation.hpp"

namespace {

std::string g_binary;

int run_tool(const std::string& args) {
  const std::string cmd = g_binary + " " + args + " >/tmp/hazmatch_cli_stdout.txt 2>&1";
  return std::system(cmd.c_str());
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_CASE("estimate on a symmetric toy dataset returns a unit hazard ratio") {
  std::ostringstream csv;
  csv << "x1,w,u,delta\n";
  for (int i = 0; i < 30; ++i) {
    // both arms share the same outcome configurations
    csv << 0.1 * (i / 2) << ',' << i % 2 << ',' << 1.0 + (i / 2) << ',' << (i / 2) % 2 << '\n';
  }
  write_file("/tmp/hazmatch_cli_sym.csv", csv.str());

  const int rc = run_tool(
      "estimate --data /tmp/hazmatch_cli_sym.csv --methods software --seed 5 "
      "--out /tmp/hazmatch_cli_sym.json");
  REQUIRE(rc == 0);
  const auto j = nlohmann::json::parse(slurp("/tmp/hazmatch_cli_sym.json"));
  CHECK(std::abs(j.at("beta_hat").get<double>()) <= 1e-9);
  CHECK(j.at("hr").get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(j.contains("version"));
  CHECK(j.at("config").at("seed").get<int>() == 5);
}

TEST_CASE("identical seed and input give byte-identical reports") {
  const int rc1 = run_tool(
      "estimate --data /tmp/hazmatch_cli_sym.csv --methods software,asymp --B 200 --seed 11 "
      "--out /tmp/hazmatch_cli_a.json");
  const int rc2 = run_tool(
      "estimate --data /tmp/hazmatch_cli_sym.csv --methods software,asymp --B 200 --seed 11 "
      "--out /tmp/hazmatch_cli_b.json");
  REQUIRE(rc1 == 0);
  REQUIRE(rc2 == 0);
  CHECK(slurp("/tmp/hazmatch_cli_a.json") == slurp("/tmp/hazmatch_cli_b.json"));
}

TEST_CASE("estimate recovers a known simulated truth within its own error bars") {
  hazmatch::ScenarioConfig cfg;
  cfg.n = 2000;
  cfg.beta0 = -0.5;
  cfg.seed = 404;
  hazmatch::RngStream master(cfg.seed);
  hazmatch::RngStream pilot = master.child(0);
  cfg.c_max = hazmatch::calibrate_censoring(cfg, pilot);
  hazmatch::RngStream gen = master.child(1);
  const auto sim = hazmatch::generate_replicate(cfg, gen);
  hazmatch::save_csv(sim.ds, "/tmp/hazmatch_cli_sim.csv");

  const int rc = run_tool(
      "estimate --data /tmp/hazmatch_cli_sim.csv --col-w w --col-time u --col-event delta "
      "--covariates x1,x2 --methods asymp --seed 7 --out /tmp/hazmatch_cli_sim.json");
  REQUIRE(rc == 0);
  const auto j = nlohmann::json::parse(slurp("/tmp/hazmatch_cli_sim.json"));
  const double beta = j.at("beta_hat").get<double>();
  const double var = j.at("methods").at("asymptotic").at("variance").get<double>();
  CHECK(std::abs(beta - cfg.beta0) <= 3.0 * std::sqrt(var));
  const double lo = j.at("methods").at("asymptotic").at("ci_low").get<double>();
  const double hi = j.at("methods").at("asymptotic").at("ci_high").get<double>();
  CHECK(lo < hi);
  CHECK(std::exp(lo) < j.at("hr").get<double>());
}

TEST_CASE("dump-matches writes the imputed dataset") {
  const int rc = run_tool(
      "dump-matches --data /tmp/hazmatch_cli_sim.csv --covariates x1,x2 "
      "--out /tmp/hazmatch_cli_matches.csv");
  REQUIRE(rc == 0);
  const std::string csv = slurp("/tmp/hazmatch_cli_matches.csv");
  CHECK(csv.rfind("index,x1,x2,w,matched_index,u0,delta0,u1,delta1,weight,u,delta\n", 0) == 0);
  int lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 2001);  // header + one row per subject
}

TEST_CASE("estimate fails cleanly on a missing column") {
  const int rc = run_tool(
      "estimate --data /tmp/hazmatch_cli_sim.csv --col-event died --out /tmp/hz_x.json");
  CHECK(rc != 0);
  const std::string out = slurp("/tmp/hazmatch_cli_stdout.txt");
  CHECK(out.find("error:") != std::string::npos);
  CHECK(out.find("died") != std::string::npos);
}

TEST_CASE("simulate smoke run emits well-formed outputs and is thread-invariant") {
  write_file("/tmp/hazmatch_cli_scen.cfg",
             "n = 200\nbeta0 = 0\nconfounding = weak\nreps = 6\nB = 200\nseed = 31\n");
  const int rc1 = run_tool(
      "simulate --scenario /tmp/hazmatch_cli_scen.cfg --threads 1 --out /tmp/hazmatch_cli_t1");
  REQUIRE(rc1 == 0);
  const int rc2 = run_tool(
      "simulate --scenario /tmp/hazmatch_cli_scen.cfg --threads 2 --out /tmp/hazmatch_cli_t2");
  REQUIRE(rc2 == 0);

  const std::string csv = slurp("/tmp/hazmatch_cli_t1.csv");
  for (const char* row : {"nai,software", "ipw,software", "reg,software", "psm0,software",
                          "psm,software", "psm,asymp", "psm,naiveboot", "psm,double-rsp"}) {
    CHECK(csv.find(row) != std::string::npos);
  }
  CHECK(slurp("/tmp/hazmatch_cli_t1.csv") == slurp("/tmp/hazmatch_cli_t2.csv"));
  CHECK(slurp("/tmp/hazmatch_cli_t1.json") == slurp("/tmp/hazmatch_cli_t2.json"));

  const auto log = nlohmann::json::parse(slurp("/tmp/hazmatch_cli_t1.json"));
  CHECK(log.at("cells").at(0).at("replicates").size() == 6);
  CHECK(log.at("cells").at(0).at("config").at("seed").get<int>() == 31);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: cli_tests <path-to-hazmatch>\n");
    return 2;
  }
  g_binary = argv[1];
  doctest::Context context;
  context.applyCommandLine(argc - 1, argv + 1);
  return context.run();
}

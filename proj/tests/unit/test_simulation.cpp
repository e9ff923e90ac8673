#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "hazmatch/rng.hpp"
#include "hazmatch/scenario_io.hpp"
#include "hazmatch/simulation.hpp"

using namespace hazmatch;

TEST_CASE("config validation") {
  ScenarioConfig cfg;
  CHECK_NOTHROW(cfg.validate());

  ScenarioConfig bad_eta = cfg;
  bad_eta.eta = {0.5, -1.0};
  CHECK_THROWS_AS(bad_eta.validate(), std::invalid_argument);

  ScenarioConfig too_strong = cfg;
  too_strong.lambda0 = 3.0;  // |eta|/lambda sums to 4 > 3
  CHECK_THROWS_AS(too_strong.validate(), std::invalid_argument);

  ScenarioConfig bad_censor = cfg;
  bad_censor.censor_low = 0.4;
  bad_censor.censor_high = 0.3;
  CHECK_THROWS_AS(bad_censor.validate(), std::invalid_argument);
}

TEST_CASE("solved times satisfy the survival equation") {
  ScenarioConfig cfg;
  cfg.beta0 = 0.0;
  RngStream rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const double x1 = trial == 0 ? 0.0 : rng.exponential(1.0);
    const double x2 = trial == 0 ? 0.0 : rng.exponential(1.0);
    const double u = rng.uniform01_open();
    const double t = solve_treated_time(cfg, x1, x2, u);
    const double residual = treated_survival(cfg, x1, x2, t) - (1.0 - u);
    CHECK(std::abs(residual) <= 1e-10);
  }
}

TEST_CASE("conditional survival is a valid distribution on the scenario grid") {
  RngStream rng(19);
  for (const char* level : {"weak", "medium", "strong"}) {
    for (double beta0 : {-0.5, 0.0, 0.5}) {
      ScenarioConfig cfg;
      cfg.theta = confounding_theta(level);
      cfg.beta0 = beta0;
      cfg.validate();
      for (int draw = 0; draw < 40; ++draw) {
        const double x1 = rng.exponential(1.0);
        const double x2 = rng.exponential(1.0);
        for (int omega = 0; omega <= 1; ++omega) {
          double prev = 1.0;
          CHECK(potential_survival(cfg, x1, x2, omega, 0.0) == doctest::Approx(1.0));
          for (double t = 0.01; t <= 4.0; t += 0.01) {
            const double s = potential_survival(cfg, x1, x2, omega, t);
            CHECK(s >= -1e-15);
            CHECK(s <= prev + 1e-12);  // non-increasing
            prev = s;
          }
        }
      }
    }
  }
}

TEST_CASE("treated marginal obeys the exponent identity (coarse)") {
  // full 1e5-draw version runs in the acceptance suite
  ScenarioConfig cfg;
  cfg.beta0 = -0.5;
  RngStream rng(23);
  const int n = 20000;
  std::vector<double> t1;
  t1.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double x1 = rng.exponential(1.0);
    const double x2 = rng.exponential(1.0);
    t1.push_back(solve_treated_time(cfg, x1, x2, rng.uniform01_open()));
  }
  std::sort(t1.begin(), t1.end());
  const double rate = cfg.lambda0 * std::exp(cfg.beta0);
  double ks = 0;
  for (int i = 0; i < n; ++i) {
    const double f = 1.0 - std::exp(-rate * t1[static_cast<std::size_t>(i)]);
    ks = std::max(ks, std::abs((i + 1.0) / n - f));
    ks = std::max(ks, std::abs(static_cast<double>(i) / n - f));
  }
  CHECK(ks <= 0.02);
}

TEST_CASE("censoring calibration hits the target and tracks beta0") {
  ScenarioConfig cfg;
  cfg.validate();
  RngStream rng(29);
  const double c0 = calibrate_censoring(cfg, rng);
  CHECK(c0 > 0);

  // realized fractions across replicates stay inside [0.20, 0.30]
  ScenarioConfig gen = cfg;
  gen.c_max = c0;
  gen.n = 1000;
  RngStream master(31);
  int inside = 0;
  const int reps = 100;
  for (int r = 0; r < reps; ++r) {
    RngStream rep = master.child(static_cast<std::uint64_t>(r));
    const SimulatedReplicate sim = generate_replicate(gen, rep);
    int censored = 0;
    for (int i = 0; i < sim.ds.size(); ++i) censored += 1 - sim.ds[i].delta;
    const double frac = static_cast<double>(censored) / sim.ds.size();
    if (frac >= 0.20 && frac <= 0.30) ++inside;
  }
  CHECK(inside >= 99);

  // longer event times (beta0 < 0 stretches the treated arm) need a larger bound
  ScenarioConfig slow = cfg;
  slow.beta0 = -0.5;
  RngStream rng2(29);
  const double c_slow = calibrate_censoring(slow, rng2);
  ScenarioConfig fast = cfg;
  fast.beta0 = 0.5;
  RngStream rng3(29);
  const double c_fast = calibrate_censoring(fast, rng3);
  CHECK(c_slow > c0);
  CHECK(c_fast < c0);
}

TEST_CASE("generated replicates have sane structure") {
  ScenarioConfig cfg;
  cfg.n = 500;
  RngStream rng(37);
  cfg.c_max = calibrate_censoring(cfg, rng);
  RngStream gen(41);
  const SimulatedReplicate sim = generate_replicate(cfg, gen);
  CHECK(sim.ds.size() == 500);
  CHECK(sim.ds.dim() == 2);
  CHECK(sim.true_scores.size() == 500);
  for (int i = 0; i < sim.ds.size(); ++i) {
    CHECK(sim.true_scores[static_cast<std::size_t>(i)] > 0.0);
    CHECK(sim.true_scores[static_cast<std::size_t>(i)] < 1.0);
    CHECK(sim.ds[i].u > 0.0);
    const double expected =
        true_propensity(cfg, sim.ds[i].x[0], sim.ds[i].x[1]);
    CHECK(sim.true_scores[static_cast<std::size_t>(i)] == doctest::Approx(expected));
  }
  CHECK_THROWS_AS(generate_replicate(ScenarioConfig{}, gen), std::invalid_argument);  // no c_max
}

TEST_CASE("run_scenario smoke run aggregates every estimator") {
  ScenarioConfig cfg;
  cfg.n = 150;
  cfg.reps = 4;
  cfg.B = 200;
  cfg.seed = 7;
  cfg.threads = 2;
  const ScenarioResult result = run_scenario(cfg);
  CHECK(result.failures == 0);
  REQUIRE(result.rows.size() == 8);
  for (const MetricsRow& row : result.rows) {
    CHECK(row.used == 4);
    CHECK(row.cr >= 0.0);
    CHECK(row.cr <= 100.0);
    CHECK(row.var >= 0.0);
  }
  CHECK(result.config.c_max > 0);
}

TEST_CASE("identical seeds give identical tables for any worker count") {
  ScenarioConfig cfg;
  cfg.n = 200;
  cfg.reps = 6;
  cfg.B = 200;
  cfg.seed = 12345;

  cfg.threads = 1;
  const ScenarioResult a = run_scenario(cfg);
  cfg.threads = 4;
  const ScenarioResult b = run_scenario(cfg);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].bias == b.rows[i].bias);  // bitwise equality
    CHECK(a.rows[i].var == b.rows[i].var);
    CHECK(a.rows[i].ve == b.rows[i].ve);
    CHECK(a.rows[i].cr == b.rows[i].cr);
  }
}

TEST_CASE("replicate-level variance calibrates the Monte Carlo error") {
  // disjoint halves of the replicate stream agree within the error bars
  // implied by the per-replicate variance; this is what makes "doubling
  // reps halves the SE" hold in practice
  ScenarioConfig cfg;
  cfg.n = 200;
  cfg.reps = 80;
  cfg.B = 200;
  cfg.seed = 2024;
  cfg.threads = 2;
  const ScenarioResult result = run_scenario(cfg);
  std::vector<double> betas;
  for (const auto& rep : result.replicates) {
    if (!rep.failed) betas.push_back(rep.report.beta_hat);
  }
  REQUIRE(betas.size() >= 70);
  const std::size_t half = betas.size() / 2;
  double m1 = 0, m2 = 0, var = 0, mean = 0;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    mean += betas[i];
    (i < half ? m1 : m2) += betas[i];
  }
  mean /= static_cast<double>(betas.size());
  m1 /= static_cast<double>(half);
  m2 /= static_cast<double>(betas.size() - half);
  for (double b : betas) var += (b - mean) * (b - mean);
  var /= static_cast<double>(betas.size() - 1);
  const double se_diff = std::sqrt(2.0 * var / static_cast<double>(half));
  CHECK(std::abs(m1 - m2) <= 3.0 * se_diff);
}

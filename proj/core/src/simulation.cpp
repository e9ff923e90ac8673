#include "hazmatch/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hazmatch/parallel.hpp"

namespace hazmatch {

void ScenarioConfig::validate() const {
  if (n < 20) throw std::invalid_argument("scenario: n must be >= 20");
  if (reps < 1) throw std::invalid_argument("scenario: reps must be >= 1");
  if (lambda0 <= 0 || lambda_cov[0] <= 0 || lambda_cov[1] <= 0) {
    throw std::invalid_argument("scenario: rates must be positive");
  }
  if (!(censor_low >= 0 && censor_low < censor_high && censor_high < 1)) {
    throw std::invalid_argument("scenario: bad censoring target interval");
  }
  if (!(alpha > 0 && alpha <= 0.5)) throw std::invalid_argument("scenario: bad alpha");
  if (eta[0] > 0 || eta[1] > 0) {
    throw std::invalid_argument("scenario: eta must be <= 0");
  }
  // conditional hazard at t = 0, x = 0 is lambda0 - sum_k |eta_k|/lambda_k
  const double lhs = -eta[0] / lambda_cov[0] - eta[1] / lambda_cov[1];
  if (lhs > lambda0 + 1e-12) {
    throw std::invalid_argument(
        "scenario: |eta1|/lambda1 + |eta2|/lambda2 must not exceed lambda0");
  }
}

double true_propensity(const ScenarioConfig& cfg, double x1, double x2) {
  const double lp = cfg.theta[0] + cfg.theta[1] * x1 + cfg.theta[2] * x2;
  // guard both tails
  if (lp >= 0) return 1.0 / (1.0 + std::exp(lp));
  const double z = std::exp(lp);
  return 1.0 - z / (1.0 + z);
}

namespace {

// survival at the beta0 = 0 time scale
double base_survival(const ScenarioConfig& cfg, double x1, double x2, double s) {
  const double poly = (1.0 - cfg.eta[0] * s / cfg.lambda_cov[0]) *
                      (1.0 - cfg.eta[1] * s / cfg.lambda_cov[1]);
  return poly * std::exp((cfg.eta[0] * x1 + cfg.eta[1] * x2 - cfg.lambda0) * s);
}

}  // namespace

double potential_survival(const ScenarioConfig& cfg, double x1, double x2, int omega,
                          double t) {
  return base_survival(cfg, x1, x2, std::exp(cfg.beta0 * omega) * t);
}

double treated_survival(const ScenarioConfig& cfg, double x1, double x2, double t) {
  return potential_survival(cfg, x1, x2, 1, t);
}

double solve_potential_time(const ScenarioConfig& cfg, double x1, double x2, int omega,
                            double u) {
  if (!(u > 0 && u < 1)) throw std::invalid_argument("solve_potential_time: u must be in (0,1)");
  const double target = 1.0 - u;  // S(s) = 1 - u on the base scale

  double lo = 0.0;
  double hi = 0.125;
  int expansions = 0;
  while (base_survival(cfg, x1, x2, hi) > target) {
    hi *= 2.0;
    if (++expansions > 200) {
      throw std::runtime_error("solve_potential_time: root bracketing failed after 200 "
                               "expansions (u=" + std::to_string(u) + ", x1=" +
                               std::to_string(x1) + ", x2=" + std::to_string(x2) + ")");
    }
  }
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (base_survival(cfg, x1, x2, mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi) * std::exp(-cfg.beta0 * omega);
}

double solve_treated_time(const ScenarioConfig& cfg, double x1, double x2, double u) {
  return solve_potential_time(cfg, x1, x2, 1, u);
}

SimulatedReplicate generate_replicate(const ScenarioConfig& cfg, RngStream& rng) {
  if (!(cfg.c_max > 0)) {
    throw std::invalid_argument("generate_replicate: c_max not set; calibrate censoring first");
  }
  std::vector<Subject> subjects;
  subjects.reserve(static_cast<std::size_t>(cfg.n));
  std::vector<double> scores;
  scores.reserve(static_cast<std::size_t>(cfg.n));

  for (int i = 0; i < cfg.n; ++i) {
    const double x1 = rng.exponential(cfg.lambda_cov[0]);
    const double x2 = rng.exponential(cfg.lambda_cov[1]);
    const double p = true_propensity(cfg, x1, x2);
    const int w = rng.bernoulli(p);
    const double u0 = rng.uniform01_open();
    const double u1 = rng.uniform01_open();
    const double c = rng.uniform(0.0, cfg.c_max);

    const double t = solve_potential_time(cfg, x1, x2, w, w == 1 ? u1 : u0);
    Subject s;
    s.id = i;
    s.x = {x1, x2};
    s.w = w;
    s.u = std::max(std::min(t, c), std::numeric_limits<double>::min());
    s.delta = t <= c ? 1 : 0;
    subjects.push_back(std::move(s));
    scores.push_back(p);
  }
  return {Dataset(std::move(subjects)), std::move(scores)};
}

double calibrate_censoring(const ScenarioConfig& cfg, RngStream& rng) {
  constexpr int kPilot = 10000;
  std::vector<double> times;
  times.reserve(kPilot);
  for (int i = 0; i < kPilot; ++i) {
    const double x1 = rng.exponential(cfg.lambda_cov[0]);
    const double x2 = rng.exponential(cfg.lambda_cov[1]);
    const int w = rng.bernoulli(true_propensity(cfg, x1, x2));
    const double u0 = rng.uniform01_open();
    const double u1 = rng.uniform01_open();
    times.push_back(solve_potential_time(cfg, x1, x2, w, w == 1 ? u1 : u0));
  }

  // P(censored | c) = mean of min(T_i / c, 1): decreasing in c
  const auto frac = [&](double c) {
    double acc = 0;
    for (double t : times) acc += std::min(t / c, 1.0);
    return acc / static_cast<double>(times.size());
  };

  const double target = 0.5 * (cfg.censor_low + cfg.censor_high);
  double lo = 1e-9;
  double hi = 1.0;
  int expansions = 0;
  while (frac(hi) > target) {
    hi *= 2.0;
    if (++expansions > 200) {
      throw std::runtime_error("calibrate_censoring: target fraction unreachable");
    }
  }
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (frac(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double c = 0.5 * (lo + hi);
  const double achieved = frac(c);
  if (achieved < cfg.censor_low || achieved > cfg.censor_high) {
    throw std::runtime_error("calibrate_censoring: achieved fraction " +
                             std::to_string(achieved) + " outside the target interval");
  }
  return c;
}

namespace {

struct Cell {
  std::vector<double> beta;
  std::vector<double> ve;
  int covered = 0;
};

void absorb(Cell& cell, double beta, const CiEntry& m, double beta0) {
  cell.beta.push_back(beta);
  cell.ve.push_back(m.variance);
  if (m.ci_low <= beta0 && beta0 <= m.ci_high) ++cell.covered;
}

MetricsRow to_row(const std::string& estimator, const std::string& method, const Cell& cell,
                  double beta0) {
  MetricsRow row;
  row.estimator = estimator;
  row.method = method;
  row.used = static_cast<int>(cell.beta.size());
  if (row.used == 0) return row;
  double mean = 0;
  for (double b : cell.beta) mean += b;
  mean /= row.used;
  row.bias = mean - beta0;
  double ss = 0;
  for (double b : cell.beta) ss += (b - mean) * (b - mean);
  row.var = row.used > 1 ? ss / (row.used - 1) : 0;
  double ve = 0;
  for (double v : cell.ve) ve += v;
  row.ve = ve / row.used;
  row.cr = 100.0 * cell.covered / row.used;
  return row;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  ScenarioResult result;
  result.config = cfg;

  const RngStream master(cfg.seed);
  if (!(result.config.c_max > 0)) {
    RngStream pilot = master.child(0);
    result.config.c_max = calibrate_censoring(cfg, pilot);
  }
  const ScenarioConfig& rc = result.config;

  result.replicates.resize(static_cast<std::size_t>(cfg.reps));
  parallel_for(static_cast<std::size_t>(cfg.reps), cfg.threads, [&](std::size_t r) {
    ReplicateOutcome& out = result.replicates[r];
    try {
      RngStream rep = master.child(r + 1);
      RngStream gen = rep.child(0);
      const SimulatedReplicate sim = generate_replicate(rc, gen);

      EstimateConfig ecfg;
      ecfg.estimators = {"naive", "ipw", "regression", "psm_true_score", "psm"};
      ecfg.methods = {"software_robust", "asymptotic", "naive_boot", "double_resampling"};
      ecfg.B = rc.B;
      ecfg.alpha = rc.alpha;
      ecfg.seed = rep.child_seed(1);
      ecfg.threads = 1;  // parallelism lives at the replicate level
      if (rc.sqrt_misspec) ecfg.ps_design.powers = {0.5, 0.5};
      ecfg.true_scores = sim.true_scores;
      out.report = estimate_all(sim.ds, ecfg);
    } catch (const std::exception& ex) {
      out.failed = true;
      out.error = ex.what();
    }
  });

  for (const ReplicateOutcome& out : result.replicates) {
    if (out.failed) ++result.failures;
  }

  Cell nai, ipw, reg, psm0;
  Cell psm_soft, psm_asymp, psm_boot, psm_dr;
  for (const ReplicateOutcome& out : result.replicates) {
    if (out.failed) continue;
    const InferenceReport& rep = out.report;
    const auto comparator = [&](const char* key, Cell& cell) {
      const auto it = rep.estimators.find(key);
      if (it == rep.estimators.end()) return;
      absorb(cell, it->second.beta,
             {it->second.variance, it->second.ci_low, it->second.ci_high}, rc.beta0);
    };
    comparator("naive", nai);
    comparator("ipw", ipw);
    comparator("regression", reg);
    comparator("psm_true_score", psm0);
    const auto method = [&](const char* key, Cell& cell) {
      const auto it = rep.methods.find(key);
      if (it == rep.methods.end()) return;
      absorb(cell, rep.beta_hat, it->second, rc.beta0);
    };
    method("software_robust", psm_soft);
    method("asymptotic", psm_asymp);
    method("naive_boot", psm_boot);
    method("double_resampling", psm_dr);
  }

  result.rows.push_back(to_row("nai", "software", nai, rc.beta0));
  result.rows.push_back(to_row("ipw", "software", ipw, rc.beta0));
  result.rows.push_back(to_row("reg", "software", reg, rc.beta0));
  result.rows.push_back(to_row("psm0", "software", psm0, rc.beta0));
  result.rows.push_back(to_row("psm", "software", psm_soft, rc.beta0));
  result.rows.push_back(to_row("psm", "asymp", psm_asymp, rc.beta0));
  result.rows.push_back(to_row("psm", "naiveboot", psm_boot, rc.beta0));
  result.rows.push_back(to_row("psm", "double-rsp", psm_dr, rc.beta0));

  if (result.failures * 50 > cfg.reps) {  // > 2%
    throw ScenarioFailure("run_scenario: " + std::to_string(result.failures) + " of " +
                              std::to_string(cfg.reps) + " replicates failed (> 2%)",
                          std::move(result));
  }
  return result;
}

}  // namespace hazmatch

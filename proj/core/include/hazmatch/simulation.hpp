#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "hazmatch/dataset.hpp"
#include "hazmatch/inference.hpp"
#include "hazmatch/rng.hpp"

namespace hazmatch {

// One Monte Carlo cell. Covariates X_k ~ Exp(rate lambda_k); treatment
// W ~ Bernoulli({1 + exp(theta0 + theta1 X1 + theta2 X2)}^-1). Potential
// event times come from the conditional survival
//   S(t | X, omega) = prod_k (1 - eta_k s / lambda_k)
//                     * exp[{eta1 X1 + eta2 X2 - lambda0} s],  s = e^{beta0 omega} t,
// inverted by bisection. The polynomial factor is exactly the reciprocal
// Laplace transform of the covariates, so the marginals obey
// S^(omega)(t) = exp(-lambda0 t)^{exp(beta0 omega)} for every beta0 and the
// marginal hazards follow the proportional-hazards structural model.
struct ScenarioConfig {
  int n = 1000;
  double beta0 = 0.0;                            // true log hazard ratio
  std::array<double, 3> theta = {-2.0, 0.5, 0.5};
  bool sqrt_misspec = false;                     // analysis PS model uses sqrt(X)
  double lambda0 = 4.0;
  std::array<double, 2> eta = {-2.0, -2.0};
  std::array<double, 2> lambda_cov = {1.0, 1.0};
  double censor_low = 0.20;
  double censor_high = 0.30;
  double alpha = 0.05;
  int reps = 1000;
  int B = 200;
  std::uint64_t seed = 1;
  int threads = 1;
  double c_max = 0;  // <= 0 means calibrate from pilot draws

  // Checks the survival-function validity constraint: eta_k <= 0 and
  // |eta_1|/lambda_1 + |eta_2|/lambda_2 <= lambda0 (the conditional hazard
  // stays non-negative).
  void validate() const;
};

double true_propensity(const ScenarioConfig& cfg, double x1, double x2);

// Conditional survival of the potential time under arm omega.
double potential_survival(const ScenarioConfig& cfg, double x1, double x2, int omega, double t);

// Conditional survival of the treated potential time given covariates.
double treated_survival(const ScenarioConfig& cfg, double x1, double x2, double t);

// Solves potential_survival(t) = 1 - u by bracketed bisection (tol 1e-12).
double solve_potential_time(const ScenarioConfig& cfg, double x1, double x2, int omega,
                            double u);
double solve_treated_time(const ScenarioConfig& cfg, double x1, double x2, double u);

struct SimulatedReplicate {
  Dataset ds;
  std::vector<double> true_scores;
};

// Requires cfg.c_max > 0 (calibrate first).
SimulatedReplicate generate_replicate(const ScenarioConfig& cfg, RngStream& rng);

// Bisection on the censoring bound over 10^4 pilot event times until the
// expected censored fraction hits the middle of [censor_low, censor_high].
double calibrate_censoring(const ScenarioConfig& cfg, RngStream& rng);

struct MetricsRow {
  std::string estimator;  // nai, ipw, reg, psm0, psm
  std::string method;     // software, asymp, naiveboot, double-rsp
  double bias = 0;        // mean(beta_hat) - beta0
  double var = 0;         // sample variance of beta_hat
  double ve = 0;          // mean of the variance estimates
  double cr = 0;          // coverage of beta0, percent
  int used = 0;           // replicates contributing
};

struct ReplicateOutcome {
  bool failed = false;
  std::string error;
  InferenceReport report;
};

struct ScenarioResult {
  ScenarioConfig config;  // with the resolved c_max
  std::vector<MetricsRow> rows;
  std::vector<ReplicateOutcome> replicates;
  int failures = 0;
};

// Thrown when more than 2% of replicates fail; carries the partial result
// so callers can still write the failure log.
struct ScenarioFailure : std::runtime_error {
  ScenarioFailure(const std::string& what, ScenarioResult result_)
      : std::runtime_error(what), result(std::move(result_)) {}
  ScenarioResult result;
};

// Runs the full cell: per replicate all five estimators and the four psm
// variance methods. Replicates execute in parallel on derived streams;
// identical (seed, config) gives identical output for any thread count.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

}  // namespace hazmatch

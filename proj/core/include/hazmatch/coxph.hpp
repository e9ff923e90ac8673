#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hazmatch/dataset.hpp"
#include "hazmatch/propensity.hpp"

namespace hazmatch {

// Weighted Cox proportional-hazards machinery. Weights enter every risk-set
// sum; ties in event times use the Breslow convention (shared denominator).
// Integrals over [0, tau] are finite sums over event times <= tau, with
// events exactly at tau included.

struct CoxFit {
  Eigen::VectorXd beta;
  std::vector<std::pair<double, double>> baseline;  // (event time, hazard increment)
  Eigen::VectorXd score_at_solution;
  Eigen::MatrixXd neg_hessian;  // observed information -dS/dbeta at beta
  bool converged = false;
  int iterations = 0;

  double baseline_cumulative(double t) const;  // Lambda0(t)
};

// Risk-set aggregates evaluated at each distinct event time <= tau, in
// increasing time order. s0 = sum of w~_j exp(beta'z_j) Y_j(t); s1 the
// z-weighted version; qhat = s1/s0 (the weighted covariate mean of the risk
// set); dlambda0 the Breslow increment; weighted_events the w~-weighted
// event mass at the time.
struct RiskProfile {
  std::vector<double> event_times;
  std::vector<double> s0;
  Eigen::MatrixXd s1;        // one row per event time
  std::vector<double> weighted_events;
  Eigen::MatrixXd qhat;      // one row per event time
  std::vector<double> dlambda0;
};

RiskProfile risk_profile(const Dataset& ds, const Eigen::MatrixXd& z,
                         const std::vector<double>& weights, const Eigen::VectorXd& beta);

// Weighted partial score S_n(beta) = sum_i w~_i int_0^tau {z_i - Qhat(beta,t)} dN_i(t).
Eigen::VectorXd partial_score(const Dataset& ds, const Eigen::MatrixXd& z,
                              const std::vector<double>& weights, const Eigen::VectorXd& beta);

// Observed information -dS/dbeta = sum_i w~_i int Vhat(beta,t) dN_i(t),
// Vhat the weighted covariate variance of the risk set.
Eigen::MatrixXd observed_information(const Dataset& ds, const Eigen::MatrixXd& z,
                                     const std::vector<double>& weights,
                                     const Eigen::VectorXd& beta);

// Newton with step halving from beta = 0; converges to |S_n|_inf <= 1e-9.
// Monotone partial likelihood (diverging beta) and iteration cap are errors.
CoxFit solve_beta(const Dataset& ds, const Eigen::MatrixXd& z,
                  const std::vector<double>& weights);

// Breslow baseline increments at event times <= tau for a given beta.
std::vector<std::pair<double, double>> breslow_baseline(const Dataset& ds,
                                                        const Eigen::MatrixXd& z,
                                                        const std::vector<double>& weights,
                                                        const Eigen::VectorXd& beta);

// Lin-Wei sandwich A^{-1} B A^{-1}, B the outer product of per-subject
// weighted score residuals.
Eigen::MatrixXd robust_variance(const Dataset& ds, const Eigen::MatrixXd& z,
                                const std::vector<double>& weights, const CoxFit& fit);

// Inverse-probability-of-treatment weights w/e + (1-w)/(1-e).
std::vector<double> ipw_weights(const PropensityFit& fit, const std::vector<int>& w);

// Column matrix helpers for the common single-covariate case.
Eigen::MatrixXd column_matrix(const std::vector<int>& v);
Eigen::MatrixXd column_matrix(const std::vector<double>& v);

}  // namespace hazmatch

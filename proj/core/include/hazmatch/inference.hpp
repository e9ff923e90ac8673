#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hazmatch/coxph.hpp"
#include "hazmatch/dataset.hpp"
#include "hazmatch/matching.hpp"
#include "hazmatch/propensity.hpp"
#include "hazmatch/rng.hpp"
#include "hazmatch/smoothing.hpp"

namespace hazmatch {

// Subject-level martingale residuals H_i evaluated at the subject's own arm
// with the fitted (beta, baseline, risk profile) from the weighted Cox fit.
// The weighted sum sum_i (1 + k_i) H_i is exactly zero at beta_hat.
std::vector<double> h_residuals(const Dataset& ds, const MatchResult& mr, const CoxFit& fit);

// Kernel estimates of mu_H(omega, p) and sigma^2_H(omega, p): local-linear
// regression of H (and of squared centered residuals) on the score within
// each arm, rule-of-thumb bandwidths.
class ConditionalMoments {
 public:
  ConditionalMoments(const std::vector<double>& h, const std::vector<double>& scores,
                     const std::vector<int>& w);

  double mu(int omega, double p) const { return mu_[omega](p); }
  double sigma2(int omega, double p) const;  // floored at 1e-12
  double bandwidth(int omega) const { return mu_[omega].bandwidth(); }
  const LocalLinearSmoother& mu_smoother(int omega) const { return mu_[omega]; }

 private:
  LocalLinearSmoother mu_[2];
  LocalLinearSmoother sig_[2];
};

ConditionalMoments smooth_conditional_moments(const std::vector<double>& h,
                                              const std::vector<double>& scores,
                                              const std::vector<int>& w);

// Per-subject residual decomposition used by the double-resampling scheme.
struct HResiduals {
  std::vector<double> h;
  std::vector<double> mu0, mu1;    // mu_H(omega, e_i) at the subject's score
  std::vector<double> sig0, sig1;  // sigma^2_H(omega, e_i)
  std::vector<double> r1;          // mu0 + mu1
  std::vector<double> r2_own;      // H_i - mu_H(W_i, e_i)
  std::vector<double> r2_opposite; // imputed from the covariate-matched neighbor
};

HResiduals build_h_residuals(const Dataset& ds, const MatchResult& mr, const CoxFit& fit,
                             const PropensityFit& ps);

// Plug-in estimates of the sandwich pieces: V_S (matching on the known
// score), the score-derivative limit A, the covariance vector c and the
// information correction c' I^{-1} c that turns V_S into the
// estimated-score variance. V1 = V_S / A^2, V2 = (V_S - correction) / A^2;
// var(beta_hat) is V / n.
struct AsymptoticComponents {
  double V_S_hat = 0;
  double A_hat = 0;  // negative by construction
  Eigen::VectorXd c_hat;
  double info_correction = 0;
  double V1_hat = 0;
  double V2_hat = 0;
};

AsymptoticComponents asymptotic_variance(const Dataset& ds, const MatchResult& mr,
                                         const CoxFit& fit, const PropensityFit& ps);

// The two-point multiplier with mean 0 and variance 1 (golden-ratio law).
double two_point_multiplier(RngStream& rng);

struct CiEntry {
  double variance = 0;  // estimated var(beta_hat)
  double ci_low = 0;
  double ci_high = 0;
};

// Step-0 artifacts of the double-resampling scheme: fixed H values, the
// smoothed-mean tables, the covariate-based secondary match m(omega, X_i)
// and the imputed match counts.
struct ResamplingPrep {
  std::vector<double> h;
  SmoothTable mu_table[2];
  std::vector<int> sec0;  // m(0, X_i): own index when W_i = 0
  std::vector<int> sec1;  // m(1, X_i)
  KImputation kimp;
};

ResamplingPrep make_resampling_prep(const Dataset& ds, const MatchResult& mr,
                                    const PropensityFit& ps, const std::vector<double>& h,
                                    const ConditionalMoments& cm, RngStream& rng);

// Double-resampling: per replicate, redraw treatments from the fitted
// scores, refit the propensity model, rebuild residuals at the replicate
// theta, recenter, and aggregate with iid two-point multipliers into a
// replicate of S_n(beta_0); the percentile interval maps to a beta interval
// through the score derivative at beta_hat. Replicates with an empty arm or
// a failed refit are redrawn (at most 10 tries each).
CiEntry double_resampling(const Dataset& ds, const MatchResult& mr, const CoxFit& fit,
                          const PropensityFit& ps, int B, double alpha, RngStream rng,
                          int threads = 1);

// Same, with the Step-0 artifacts supplied by the caller.
CiEntry double_resampling(const Dataset& ds, const CoxFit& fit, const PropensityFit& ps,
                          const ResamplingPrep& prep, int B, double alpha, RngStream rng,
                          int threads = 1);

// Naive nonparametric bootstrap: resample subjects, redo fit+match+solve.
CiEntry naive_bootstrap(const Dataset& ds, const DesignSpec& design, int B, double alpha,
                        RngStream rng, int threads = 1);

struct EstimateConfig {
  std::vector<std::string> estimators = {"psm"};  // naive, ipw, regression, psm_true_score, psm
  std::vector<std::string> methods = {"software_robust", "asymptotic", "naive_boot",
                                      "double_resampling"};
  int B = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int threads = 1;
  DesignSpec ps_design;
  std::vector<double> true_scores;  // enables psm_true_score (simulation only)
};

struct EstimatorResult {
  double beta = 0;
  double hr = 1;
  double variance = 0;
  double ci_low = 0;
  double ci_high = 0;
};

struct InferenceReport {
  double beta_hat = 0;
  double hr = 1;
  std::map<std::string, CiEntry> methods;             // psm variance methods
  std::map<std::string, EstimatorResult> estimators;  // comparator estimators
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int B = 0;
  int n = 0;
  int n_events = 0;
};

InferenceReport estimate_all(const Dataset& ds, const EstimateConfig& cfg);

std::string report_to_json(const InferenceReport& report);
InferenceReport report_from_json(const std::string& text);

double normal_quantile(double p);  // inverse standard normal CDF

}  // namespace hazmatch

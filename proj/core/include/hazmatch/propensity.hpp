#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hazmatch/dataset.hpp"

namespace hazmatch {

// Covariate transform for the logistic linear predictor. An empty `powers`
// vector means the identity design; otherwise column j enters as x_j^powers[j]
// (0.5 gives the square-root misspecification scenario). The intercept is
// always prepended.
struct DesignSpec {
  std::vector<double> powers;

  Eigen::MatrixXd build(const Dataset& ds) const;       // n x (d+1)
  Eigen::VectorXd build_row(const Subject& s) const;    // (d+1)
};

struct PropensityFit {
  Eigen::VectorXd theta;         // (d+1), intercept first
  std::vector<double> scores;    // fitted e(x_i' theta), in (0,1)
  Eigen::MatrixXd fisher_info;   // sum_i e_i(1-e_i) x_i x_i', total over subjects
  bool converged = false;
  int iterations = 0;
  DesignSpec design;
  Eigen::MatrixXd design_matrix;  // the rows the fit was computed on

  double score_at(const Eigen::VectorXd& row) const;  // e(row' theta)
};

// Newton-Raphson (IRLS) with step halving on the Bernoulli log-likelihood.
// Gradient tolerance 1e-10 (sup norm), max 100 iterations. Perfect
// separation is reported as an error once |theta|_inf exceeds 30 or the
// iteration cap is hit.
PropensityFit fit_logistic(const Dataset& ds, const DesignSpec& design = {});

// Same model refitted with the treatment column replaced by w_star.
PropensityFit refit_on_bootstrap_treatments(const Dataset& ds, const std::vector<int>& w_star,
                                            const DesignSpec& design = {});

// Refit against an externally supplied design matrix (bootstrap hot path).
PropensityFit fit_logistic_design(const Eigen::MatrixXd& design_matrix,
                                  const std::vector<int>& w, const DesignSpec& design = {});

// Per-subject log-likelihood gradient contribution at the fitted theta:
// x_i * edot * (w_i - e_i) / [e_i (1-e_i)], which for the logistic link
// reduces to x_i (w_i - e_i). These sum to ~0 at the MLE.
Eigen::VectorXd score_gradient(const PropensityFit& fit, const Subject& subject);

}  // namespace hazmatch

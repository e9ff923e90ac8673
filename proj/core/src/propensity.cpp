#include "hazmatch/propensity.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hazmatch {

namespace {

double logistic(double s) {
  // stable in both tails
  if (s >= 0) {
    const double z = std::exp(-s);
    return 1.0 / (1.0 + z);
  }
  const double z = std::exp(s);
  return z / (1.0 + z);
}

double log1p_exp(double s) {  // log(1 + e^s)
  if (s > 0) return s + std::log1p(std::exp(-s));
  return std::log1p(std::exp(s));
}

// Bernoulli log-likelihood: sum_i [w_i eta_i - log(1 + e^{eta_i})]
double log_likelihood(const Eigen::VectorXd& eta, const std::vector<int>& w) {
  double ll = 0;
  for (int i = 0; i < eta.size(); ++i) {
    ll += w[static_cast<std::size_t>(i)] * eta[i] - log1p_exp(eta[i]);
  }
  return ll;
}

constexpr int kMaxIter = 100;
constexpr double kGradTol = 1e-10;
constexpr double kSeparationTheta = 30.0;

}  // namespace

Eigen::MatrixXd DesignSpec::build(const Dataset& ds) const {
  const int n = ds.size();
  const int d = ds.dim();
  if (!powers.empty() && static_cast<int>(powers.size()) != d) {
    throw std::invalid_argument("DesignSpec: powers length must equal covariate dimension");
  }
  Eigen::MatrixXd m(n, d + 1);
  for (int i = 0; i < n; ++i) m.row(i) = build_row(ds[i]).transpose();
  return m;
}

Eigen::VectorXd DesignSpec::build_row(const Subject& s) const {
  const int d = static_cast<int>(s.x.size());
  Eigen::VectorXd row(d + 1);
  row[0] = 1.0;
  for (int j = 0; j < d; ++j) {
    const double v = s.x[static_cast<std::size_t>(j)];
    if (powers.empty() || powers[static_cast<std::size_t>(j)] == 1.0) {
      row[j + 1] = v;
    } else {
      row[j + 1] = std::pow(v, powers[static_cast<std::size_t>(j)]);
    }
  }
  return row;
}

double PropensityFit::score_at(const Eigen::VectorXd& row) const {
  return logistic(theta.dot(row));
}

PropensityFit fit_logistic_design(const Eigen::MatrixXd& x, const std::vector<int>& w,
                                  const DesignSpec& design) {
  const int n = static_cast<int>(x.rows());
  const int p = static_cast<int>(x.cols());
  if (static_cast<int>(w.size()) != n) {
    throw std::invalid_argument("fit_logistic: treatment vector not aligned");
  }
  int n1 = 0;
  for (int v : w) n1 += v;
  if (n1 == 0 || n1 == n) throw std::runtime_error("fit_logistic: one treatment arm is empty");

  {
    // rank check on the design
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < p) throw std::invalid_argument("fit_logistic: design matrix is rank-deficient");
  }

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  double ll = log_likelihood(eta, w);

  Eigen::VectorXd grad(p);
  Eigen::MatrixXd info(p, p);
  Eigen::VectorXd e(n);

  int iter = 0;
  bool converged = false;
  for (; iter < kMaxIter; ++iter) {
    for (int i = 0; i < n; ++i) e[i] = logistic(eta[i]);
    grad.setZero();
    info.setZero();
    for (int i = 0; i < n; ++i) {
      const double r = w[static_cast<std::size_t>(i)] - e[i];
      grad.noalias() += x.row(i).transpose() * r;
      info.noalias() += x.row(i).transpose() * x.row(i) * (e[i] * (1.0 - e[i]));
    }
    if (grad.lpNorm<Eigen::Infinity>() <= kGradTol) {
      converged = true;
      break;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success) {
      throw std::runtime_error("fit_logistic: singular information matrix");
    }
    const Eigen::VectorXd step = ldlt.solve(grad);

    // step halving on the log-likelihood; relative slack because the true
    // per-step gain near the optimum is below the summation noise
    double scale = 1.0;
    Eigen::VectorXd theta_new;
    double ll_new = -std::numeric_limits<double>::infinity();
    for (int h = 0; h < 30; ++h) {
      theta_new = theta + scale * step;
      eta.noalias() = x * theta_new;
      ll_new = log_likelihood(eta, w);
      if (ll_new >= ll - 1e-9 * (1.0 + std::abs(ll))) break;
      scale *= 0.5;
    }
    theta = theta_new;
    ll = ll_new;
    if (theta.lpNorm<Eigen::Infinity>() > kSeparationTheta) {
      throw std::runtime_error(
          "fit_logistic: coefficients diverging (perfect separation suspected)");
    }
  }
  if (!converged) {
    throw std::runtime_error("fit_logistic: no convergence in " + std::to_string(kMaxIter) +
                             " iterations (separation or ill-conditioned design)");
  }

  PropensityFit fit;
  fit.theta = theta;
  fit.design = design;
  fit.design_matrix = x;
  fit.converged = true;
  fit.iterations = iter;
  fit.scores.resize(static_cast<std::size_t>(n));
  eta.noalias() = x * theta;
  fit.fisher_info.setZero(p, p);
  for (int i = 0; i < n; ++i) {
    const double ei = logistic(eta[i]);
    fit.scores[static_cast<std::size_t>(i)] = ei;
    fit.fisher_info.noalias() += x.row(i).transpose() * x.row(i) * (ei * (1.0 - ei));
  }
  return fit;
}

PropensityFit fit_logistic(const Dataset& ds, const DesignSpec& design) {
  return fit_logistic_design(design.build(ds), ds.treatments(), design);
}

PropensityFit refit_on_bootstrap_treatments(const Dataset& ds, const std::vector<int>& w_star,
                                            const DesignSpec& design) {
  if (static_cast<int>(w_star.size()) != ds.size()) {
    throw std::invalid_argument("refit_on_bootstrap_treatments: w_star not aligned");
  }
  for (int v : w_star) {
    if (v != 0 && v != 1) throw std::invalid_argument("w_star entries must be 0/1");
  }
  return fit_logistic_design(design.build(ds), w_star, design);
}

Eigen::VectorXd score_gradient(const PropensityFit& fit, const Subject& subject) {
  const Eigen::VectorXd row = fit.design.build_row(subject);
  const double e = fit.score_at(row);
  return row * (subject.w - e);
}

}  // namespace hazmatch

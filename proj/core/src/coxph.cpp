#include "hazmatch/coxph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace hazmatch {

namespace {

constexpr int kMaxIter = 50;
constexpr double kScoreTol = 1e-9;
// Monotone partial likelihoods drift until the score underflows the
// tolerance, so divergence is detected on the linear-predictor spread:
// a spread of 15 means risk ratios beyond e^15 across the sample.
constexpr double kDivergenceSpread = 15.0;

struct SortedData {
  std::vector<int> order;          // subject indices by increasing time
  std::vector<double> event_times; // distinct event times <= tau, increasing
};

SortedData sort_data(const Dataset& ds) {
  SortedData sd;
  sd.order.resize(static_cast<std::size_t>(ds.size()));
  std::iota(sd.order.begin(), sd.order.end(), 0);
  std::sort(sd.order.begin(), sd.order.end(),
            [&](int a, int b) { return ds[a].u < ds[b].u; });
  for (int i : sd.order) {
    if (ds[i].delta == 1 && ds[i].u <= ds.tau()) {
      if (sd.event_times.empty() || sd.event_times.back() != ds[i].u) {
        sd.event_times.push_back(ds[i].u);
      }
    }
  }
  return sd;
}

void check_inputs(const Dataset& ds, const Eigen::MatrixXd& z,
                  const std::vector<double>& weights) {
  if (z.rows() != ds.size()) throw std::invalid_argument("coxph: z rows != dataset size");
  if (static_cast<int>(weights.size()) != ds.size()) {
    throw std::invalid_argument("coxph: weights not aligned");
  }
  for (double w : weights) {
    if (!(w >= 0) || !std::isfinite(w)) throw std::invalid_argument("coxph: weights must be >= 0");
  }
}

}  // namespace

Eigen::MatrixXd column_matrix(const std::vector<int>& v) {
  Eigen::MatrixXd m(static_cast<int>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<int>(i), 0) = v[i];
  return m;
}

Eigen::MatrixXd column_matrix(const std::vector<double>& v) {
  Eigen::MatrixXd m(static_cast<int>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<int>(i), 0) = v[i];
  return m;
}

RiskProfile risk_profile(const Dataset& ds, const Eigen::MatrixXd& z,
                         const std::vector<double>& weights, const Eigen::VectorXd& beta) {
  check_inputs(ds, z, weights);
  const SortedData sd = sort_data(ds);
  const int q = static_cast<int>(z.cols());
  const int m = static_cast<int>(sd.event_times.size());
  if (m == 0) throw std::runtime_error("coxph: no events in [0, tau]");

  RiskProfile rp;
  rp.event_times = sd.event_times;
  rp.s0.assign(static_cast<std::size_t>(m), 0.0);
  rp.s1.setZero(m, q);
  rp.weighted_events.assign(static_cast<std::size_t>(m), 0.0);
  rp.qhat.setZero(m, q);
  rp.dlambda0.assign(static_cast<std::size_t>(m), 0.0);

  // sweep times descending, growing the risk set as subjects enter it
  double s0 = 0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(q);
  int pos = ds.size() - 1;
  for (int k = m - 1; k >= 0; --k) {
    const double t = sd.event_times[static_cast<std::size_t>(k)];
    while (pos >= 0 && ds[sd.order[static_cast<std::size_t>(pos)]].u >= t) {
      const int i = sd.order[static_cast<std::size_t>(pos)];
      const double r = weights[static_cast<std::size_t>(i)] *
                       std::exp(beta.dot(z.row(i)));
      s0 += r;
      s1.noalias() += r * z.row(i).transpose();
      --pos;
    }
    rp.s0[static_cast<std::size_t>(k)] = s0;
    rp.s1.row(k) = s1.transpose();
    rp.qhat.row(k) = (s1 / s0).transpose();
  }

  for (int i = 0; i < ds.size(); ++i) {
    if (ds[i].delta == 1 && ds[i].u <= ds.tau()) {
      const auto it = std::lower_bound(rp.event_times.begin(), rp.event_times.end(), ds[i].u);
      rp.weighted_events[static_cast<std::size_t>(it - rp.event_times.begin())] +=
          weights[static_cast<std::size_t>(i)];
    }
  }
  for (int k = 0; k < m; ++k) {
    rp.dlambda0[static_cast<std::size_t>(k)] =
        rp.weighted_events[static_cast<std::size_t>(k)] / rp.s0[static_cast<std::size_t>(k)];
  }
  return rp;
}

namespace {

// score and optional information in one sweep; shares the descending-time
// accumulation with risk_profile but avoids storing per-time matrices
void score_and_info(const Dataset& ds, const Eigen::MatrixXd& z,
                    const std::vector<double>& weights, const Eigen::VectorXd& beta,
                    Eigen::VectorXd* score, Eigen::MatrixXd* info, double* log_pl) {
  check_inputs(ds, z, weights);
  const SortedData sd = sort_data(ds);
  const int q = static_cast<int>(z.cols());
  const int m = static_cast<int>(sd.event_times.size());
  if (m == 0) throw std::runtime_error("coxph: no events in [0, tau]");

  if (score) score->setZero(q);
  if (info) info->setZero(q, q);
  if (log_pl) *log_pl = 0;

  double s0 = 0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(q);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(q, q);
  int pos = ds.size() - 1;

  // per distinct event time: event-mass-weighted contributions
  std::vector<double> wevents(static_cast<std::size_t>(m), 0.0);
  std::vector<Eigen::VectorXd> wz(static_cast<std::size_t>(m), Eigen::VectorXd::Zero(q));
  std::vector<double> wbz(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < ds.size(); ++i) {
    if (ds[i].delta == 1 && ds[i].u <= ds.tau()) {
      const auto it = std::lower_bound(sd.event_times.begin(), sd.event_times.end(), ds[i].u);
      const std::size_t k = static_cast<std::size_t>(it - sd.event_times.begin());
      const double wi = weights[static_cast<std::size_t>(i)];
      wevents[k] += wi;
      wz[k].noalias() += wi * z.row(i).transpose();
      wbz[k] += wi * beta.dot(z.row(i));
    }
  }

  for (int k = m - 1; k >= 0; --k) {
    const double t = sd.event_times[static_cast<std::size_t>(k)];
    while (pos >= 0 && ds[sd.order[static_cast<std::size_t>(pos)]].u >= t) {
      const int i = sd.order[static_cast<std::size_t>(pos)];
      const double r = weights[static_cast<std::size_t>(i)] * std::exp(beta.dot(z.row(i)));
      s0 += r;
      s1.noalias() += r * z.row(i).transpose();
      if (info) s2.noalias() += r * z.row(i).transpose() * z.row(i);
      --pos;
    }
    const std::size_t ks = static_cast<std::size_t>(k);
    const Eigen::VectorXd qhat = s1 / s0;
    if (score) score->noalias() += wz[ks] - wevents[ks] * qhat;
    if (info) info->noalias() += wevents[ks] * (s2 / s0 - qhat * qhat.transpose());
    if (log_pl) *log_pl += wbz[ks] - wevents[ks] * std::log(s0);
  }
}

}  // namespace

Eigen::VectorXd partial_score(const Dataset& ds, const Eigen::MatrixXd& z,
                              const std::vector<double>& weights, const Eigen::VectorXd& beta) {
  Eigen::VectorXd score;
  score_and_info(ds, z, weights, beta, &score, nullptr, nullptr);
  return score;
}

Eigen::MatrixXd observed_information(const Dataset& ds, const Eigen::MatrixXd& z,
                                     const std::vector<double>& weights,
                                     const Eigen::VectorXd& beta) {
  Eigen::MatrixXd info;
  score_and_info(ds, z, weights, beta, nullptr, &info, nullptr);
  return info;
}

CoxFit solve_beta(const Dataset& ds, const Eigen::MatrixXd& z,
                  const std::vector<double>& weights) {
  const int q = static_cast<int>(z.cols());
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd score(q);
  Eigen::MatrixXd info(q, q);
  double log_pl = 0;
  score_and_info(ds, z, weights, beta, &score, &info, &log_pl);

  bool converged = score.lpNorm<Eigen::Infinity>() <= kScoreTol;
  int iter = 0;
  Eigen::VectorXd score_new(q);
  Eigen::MatrixXd info_new(q, q);
  while (!converged && iter < kMaxIter) {
    ++iter;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success) {
      throw std::runtime_error("solve_beta: singular information matrix");
    }
    const Eigen::VectorXd step = ldlt.solve(score);

    // halve on a log-PL decrease; the slack is relative because near the
    // optimum the true gain sits below the summation noise of the log-PL
    double scale = 1.0;
    Eigen::VectorXd beta_new;
    double lpl_new = -std::numeric_limits<double>::infinity();
    for (int h = 0; h < 30; ++h) {
      beta_new = beta + scale * step;
      score_and_info(ds, z, weights, beta_new, &score_new, &info_new, &lpl_new);
      if (lpl_new >= log_pl - 1e-9 * (1.0 + std::abs(log_pl))) break;
      scale *= 0.5;
    }
    beta = beta_new;
    score = score_new;
    info = info_new;
    log_pl = lpl_new;
    const Eigen::VectorXd lp = z * beta;
    if (lp.maxCoeff() - lp.minCoeff() > kDivergenceSpread) {
      throw std::runtime_error(
          "solve_beta: beta diverging (monotone partial likelihood)");
    }
    converged = score.lpNorm<Eigen::Infinity>() <= kScoreTol;
  }
  if (!converged) {
    throw std::runtime_error("solve_beta: no convergence in " + std::to_string(kMaxIter) +
                             " Newton steps");
  }

  CoxFit fit;
  fit.beta = beta;
  fit.score_at_solution = score;
  fit.neg_hessian = info;
  fit.converged = true;
  fit.iterations = iter;
  fit.baseline = breslow_baseline(ds, z, weights, beta);
  return fit;
}

std::vector<std::pair<double, double>> breslow_baseline(const Dataset& ds,
                                                        const Eigen::MatrixXd& z,
                                                        const std::vector<double>& weights,
                                                        const Eigen::VectorXd& beta) {
  const RiskProfile rp = risk_profile(ds, z, weights, beta);
  std::vector<std::pair<double, double>> baseline;
  baseline.reserve(rp.event_times.size());
  for (std::size_t k = 0; k < rp.event_times.size(); ++k) {
    baseline.emplace_back(rp.event_times[k], rp.dlambda0[k]);
  }
  return baseline;
}

double CoxFit::baseline_cumulative(double t) const {
  double sum = 0;
  for (const auto& [time, inc] : baseline) {
    if (time > t) break;
    sum += inc;
  }
  return sum;
}

Eigen::MatrixXd robust_variance(const Dataset& ds, const Eigen::MatrixXd& z,
                                const std::vector<double>& weights, const CoxFit& fit) {
  if (!fit.converged) throw std::invalid_argument("robust_variance: fit has not converged");
  const RiskProfile rp = risk_profile(ds, z, weights, fit.beta);
  const int q = static_cast<int>(z.cols());
  const int m = static_cast<int>(rp.event_times.size());

  // prefix sums over event times of dLambda0 and qhat*dLambda0
  std::vector<double> cum_dl(static_cast<std::size_t>(m));
  Eigen::MatrixXd cum_qdl(m, q);
  double running = 0;
  Eigen::VectorXd running_q = Eigen::VectorXd::Zero(q);
  for (int k = 0; k < m; ++k) {
    running += rp.dlambda0[static_cast<std::size_t>(k)];
    running_q.noalias() += rp.dlambda0[static_cast<std::size_t>(k)] * rp.qhat.row(k).transpose();
    cum_dl[static_cast<std::size_t>(k)] = running;
    cum_qdl.row(k) = running_q.transpose();
  }

  const auto last_event_leq = [&](double t) {
    const auto it = std::upper_bound(rp.event_times.begin(), rp.event_times.end(), t);
    return static_cast<int>(it - rp.event_times.begin()) - 1;  // -1: none
  };

  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(q, q);
  for (int i = 0; i < ds.size(); ++i) {
    const double wi = weights[static_cast<std::size_t>(i)];
    if (wi == 0) continue;
    Eigen::VectorXd resid = Eigen::VectorXd::Zero(q);
    if (ds[i].delta == 1 && ds[i].u <= ds.tau()) {
      const int k = last_event_leq(ds[i].u);
      resid.noalias() += z.row(i).transpose() - rp.qhat.row(k).transpose();
    }
    const int k = last_event_leq(std::min(ds[i].u, ds.tau()));
    if (k >= 0) {
      const double expbz = std::exp(fit.beta.dot(z.row(i)));
      resid.noalias() -= expbz * (z.row(i).transpose() * cum_dl[static_cast<std::size_t>(k)] -
                                  cum_qdl.row(k).transpose());
    }
    resid *= wi;
    b.noalias() += resid * resid.transpose();
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(fit.neg_hessian);
  if (!lu.isInvertible()) throw std::runtime_error("robust_variance: singular information");
  const Eigen::MatrixXd ainv = lu.inverse();
  return ainv * b * ainv;
}

std::vector<double> ipw_weights(const PropensityFit& fit, const std::vector<int>& w) {
  if (fit.scores.size() != w.size()) throw std::invalid_argument("ipw_weights: size mismatch");
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double e = fit.scores[i];
    if (!(e > 0 && e < 1)) throw std::invalid_argument("ipw_weights: scores must be in (0,1)");
    out[i] = w[i] == 1 ? 1.0 / e : 1.0 / (1.0 - e);
  }
  return out;
}

}  // namespace hazmatch

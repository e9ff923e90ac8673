#include "hazmatch/inference.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "hazmatch/parallel.hpp"
#include "json.hpp"

namespace hazmatch {

namespace {

double logistic(double s) {
  if (s >= 0) return 1.0 / (1.0 + std::exp(-s));
  const double z = std::exp(s);
  return z / (1.0 + z);
}

// type-7 quantile of a sorted sample
double percentile(const std::vector<double>& sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 0) throw std::invalid_argument("percentile of empty sample");
  const double h = (static_cast<double>(n) - 1.0) * q;
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= n) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

double sample_variance(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  if (v.size() < 2) return 0;
  double mean = 0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / (n - 1.0);
}

}  // namespace

double normal_quantile(double p) {
  static const boost::math::normal_distribution<> std_normal(0.0, 1.0);
  return boost::math::quantile(std_normal, p);
}

std::vector<double> h_residuals(const Dataset& ds, const MatchResult& mr, const CoxFit& fit) {
  if (!fit.converged) throw std::invalid_argument("h_residuals: fit has not converged");
  const std::vector<int> w = ds.treatments();
  const RiskProfile rp = risk_profile(ds, column_matrix(w), mr.weight, fit.beta);
  const int m = static_cast<int>(rp.event_times.size());

  std::vector<double> cum_dl(static_cast<std::size_t>(m));
  std::vector<double> cum_qdl(static_cast<std::size_t>(m));
  double run_dl = 0, run_qdl = 0;
  for (int k = 0; k < m; ++k) {
    run_dl += rp.dlambda0[static_cast<std::size_t>(k)];
    run_qdl += rp.qhat(k, 0) * rp.dlambda0[static_cast<std::size_t>(k)];
    cum_dl[static_cast<std::size_t>(k)] = run_dl;
    cum_qdl[static_cast<std::size_t>(k)] = run_qdl;
  }
  const auto last_event_leq = [&](double t) {
    const auto it = std::upper_bound(rp.event_times.begin(), rp.event_times.end(), t);
    return static_cast<int>(it - rp.event_times.begin()) - 1;
  };

  const double beta = fit.beta[0];
  std::vector<double> h(static_cast<std::size_t>(ds.size()), 0.0);
  for (int i = 0; i < ds.size(); ++i) {
    const Subject& s = ds[i];
    double hi = 0;
    if (s.delta == 1 && s.u <= ds.tau()) {
      const int k = last_event_leq(s.u);
      hi += s.w - rp.qhat(k, 0);
    }
    const int k = last_event_leq(std::min(s.u, ds.tau()));
    if (k >= 0) {
      hi -= std::exp(beta * s.w) * (s.w * cum_dl[static_cast<std::size_t>(k)] -
                                    cum_qdl[static_cast<std::size_t>(k)]);
    }
    h[static_cast<std::size_t>(i)] = hi;
  }
  return h;
}

ConditionalMoments::ConditionalMoments(const std::vector<double>& h,
                                       const std::vector<double>& scores,
                                       const std::vector<int>& w) {
  if (h.size() != scores.size() || h.size() != w.size()) {
    throw std::invalid_argument("smooth_conditional_moments: size mismatch");
  }
  for (int omega = 0; omega <= 1; ++omega) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < h.size(); ++i) {
      if (w[i] == omega) {
        xs.push_back(scores[i]);
        ys.push_back(h[i]);
      }
    }
    if (xs.size() < 10) {
      throw std::runtime_error("smooth_conditional_moments: arm " + std::to_string(omega) +
                               " has fewer than 10 subjects");
    }
    const double bw = rule_of_thumb_bandwidth(xs);
    mu_[omega] = LocalLinearSmoother(xs, ys, bw);
    std::vector<double> sq(xs.size());
    for (std::size_t j = 0; j < xs.size(); ++j) {
      const double r = ys[j] - mu_[omega](xs[j]);
      sq[j] = r * r;
    }
    sig_[omega] = LocalLinearSmoother(xs, std::move(sq), bw);
  }
}

double ConditionalMoments::sigma2(int omega, double p) const {
  return std::max(sig_[omega](p), 1e-12);
}

ConditionalMoments smooth_conditional_moments(const std::vector<double>& h,
                                              const std::vector<double>& scores,
                                              const std::vector<int>& w) {
  return ConditionalMoments(h, scores, w);
}

HResiduals build_h_residuals(const Dataset& ds, const MatchResult& mr, const CoxFit& fit,
                             const PropensityFit& ps) {
  const std::vector<int> w = ds.treatments();
  HResiduals out;
  out.h = h_residuals(ds, mr, fit);
  const ConditionalMoments cm(out.h, ps.scores, w);
  const MatchResult secondary = match_on_covariates(ds);

  const std::size_t n = out.h.size();
  out.mu0.resize(n);
  out.mu1.resize(n);
  out.sig0.resize(n);
  out.sig1.resize(n);
  out.r1.resize(n);
  out.r2_own.resize(n);
  out.r2_opposite.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ps.scores[i];
    out.mu0[i] = cm.mu(0, e);
    out.mu1[i] = cm.mu(1, e);
    out.sig0[i] = cm.sigma2(0, e);
    out.sig1[i] = cm.sigma2(1, e);
    out.r1[i] = out.mu0[i] + out.mu1[i];
    out.r2_own[i] = out.h[i] - (w[i] == 1 ? out.mu1[i] : out.mu0[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const int j = secondary.match_index[i];
    const double ej = ps.scores[static_cast<std::size_t>(j)];
    const int omega = 1 - w[i];  // == w[j]
    out.r2_opposite[i] = out.h[static_cast<std::size_t>(j)] - cm.mu(omega, ej);
  }
  return out;
}

namespace {

// c (one entry per design column): E over subjects of
//   [cov{x, mu_H(1,.) | e} / e + cov{x, mu_H(0,.) | e} / (1-e)] * edot,
// with edot = e(1-e) and the conditional covariances estimated by kernel
// regression of x*H and x on the score within each arm. The intercept
// column has zero conditional covariance by construction.
Eigen::VectorXd estimate_c(const Dataset& ds, const PropensityFit& ps,
                           const std::vector<double>& h, const ConditionalMoments& cm) {
  const std::vector<int> w = ds.treatments();
  const int n = ds.size();
  const int p = static_cast<int>(ps.design_matrix.cols());
  Eigen::VectorXd c = Eigen::VectorXd::Zero(p);

  for (int j = 1; j < p; ++j) {
    LocalLinearSmoother cov_fn[2];
    LocalLinearSmoother mean_fn[2];
    for (int omega = 0; omega <= 1; ++omega) {
      std::vector<double> xs, xh, xv;
      for (int i = 0; i < n; ++i) {
        if (w[static_cast<std::size_t>(i)] != omega) continue;
        xs.push_back(ps.scores[static_cast<std::size_t>(i)]);
        xh.push_back(ps.design_matrix(i, j) * h[static_cast<std::size_t>(i)]);
        xv.push_back(ps.design_matrix(i, j));
      }
      const double bw = rule_of_thumb_bandwidth(xs);
      cov_fn[omega] = LocalLinearSmoother(xs, std::move(xh), bw);
      mean_fn[omega] = LocalLinearSmoother(std::move(xs), std::move(xv), bw);
    }
    double acc = 0;
    for (int i = 0; i < n; ++i) {
      const double e = ps.scores[static_cast<std::size_t>(i)];
      const double cov1 = cov_fn[1](e) - mean_fn[1](e) * cm.mu(1, e);
      const double cov0 = cov_fn[0](e) - mean_fn[0](e) * cm.mu(0, e);
      // edot/e = 1-e and edot/(1-e) = e for the logistic link
      acc += cov1 * (1.0 - e) + cov0 * e;
    }
    c[j] = acc / static_cast<double>(n);
  }
  return c;
}

AsymptoticComponents asymptotic_variance_impl(const Dataset& ds, const CoxFit& fit,
                                              const PropensityFit& ps,
                                              const std::vector<double>& h,
                                              const ConditionalMoments& cm) {
  const int n = ds.size();
  AsymptoticComponents out;

  double vs = 0;
  for (int i = 0; i < n; ++i) {
    const double e = ps.scores[static_cast<std::size_t>(i)];
    const double p1 = e, p0 = 1.0 - e;
    vs += cm.sigma2(1, e) * (1.5 / p1 - 0.5 * p1);
    vs += cm.sigma2(0, e) * (1.5 / p0 - 0.5 * p0);
    const double musum = cm.mu(0, e) + cm.mu(1, e);
    vs += musum * musum;
  }
  out.V_S_hat = vs / static_cast<double>(n);

  // A_hat: probability limit of n^{-1} dS_n/dbeta, negative at beta_hat
  out.A_hat = -fit.neg_hessian(0, 0) / static_cast<double>(n);

  out.c_hat = estimate_c(ds, ps, h, cm);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(ps.fisher_info);
  if (!lu.isInvertible()) {
    throw std::runtime_error("asymptotic_variance: singular Fisher information");
  }
  // fisher_info is the total; the per-subject information is fisher_info/n
  out.info_correction =
      static_cast<double>(n) * out.c_hat.dot(lu.solve(out.c_hat));

  const double a2 = out.A_hat * out.A_hat;
  out.V1_hat = out.V_S_hat / a2;
  out.V2_hat = std::max(out.V_S_hat - out.info_correction, 1e-12) / a2;
  return out;
}

}  // namespace

AsymptoticComponents asymptotic_variance(const Dataset& ds, const MatchResult& mr,
                                         const CoxFit& fit, const PropensityFit& ps) {
  const std::vector<double> h = h_residuals(ds, mr, fit);
  const ConditionalMoments cm(h, ps.scores, ds.treatments());
  return asymptotic_variance_impl(ds, fit, ps, h, cm);
}

double two_point_multiplier(RngStream& rng) {
  static const double sqrt5 = std::sqrt(5.0);
  static const double low = -(sqrt5 - 1.0) / 2.0;
  static const double high = (sqrt5 + 1.0) / 2.0;
  static const double p_low = (sqrt5 + 1.0) / (2.0 * sqrt5);
  return rng.uniform01() < p_low ? low : high;
}

ResamplingPrep make_resampling_prep(const Dataset& ds, const MatchResult& mr,
                                    const PropensityFit& ps, const std::vector<double>& h,
                                    const ConditionalMoments& cm, RngStream& rng) {
  ResamplingPrep prep;
  prep.h = h;

  const auto [mn, mx] = std::minmax_element(ps.scores.begin(), ps.scores.end());
  const double margin = 2.0 * std::max(cm.bandwidth(0), cm.bandwidth(1));
  const double lo = std::max(*mn - margin, 1e-9);
  const double hi = std::min(*mx + margin, 1.0 - 1e-9);
  prep.mu_table[0] = SmoothTable(cm.mu_smoother(0), lo, hi);
  prep.mu_table[1] = SmoothTable(cm.mu_smoother(1), lo, hi);

  const MatchResult secondary = match_on_covariates(ds);
  const std::vector<int> w = ds.treatments();
  const std::size_t n = w.size();
  prep.sec0.resize(n);
  prep.sec1.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    prep.sec0[i] = w[i] == 0 ? static_cast<int>(i) : secondary.match_index[i];
    prep.sec1[i] = w[i] == 1 ? static_cast<int>(i) : secondary.match_index[i];
  }
  prep.kimp = impute_k(mr, ps.scores, w, rng);
  return prep;
}

namespace {

CiEntry double_resampling_impl(const Dataset& ds, const CoxFit& fit, const PropensityFit& ps,
                               const ResamplingPrep& prep, int B, double alpha, RngStream rng,
                               int threads) {
  if (B < 200) throw std::invalid_argument("double_resampling: B must be >= 200");
  if (!(alpha > 0 && alpha <= 0.5)) throw std::invalid_argument("double_resampling: bad alpha");
  const int n = ds.size();
  const Eigen::MatrixXd& g = ps.design_matrix;
  const double score_deriv = -fit.neg_hessian(0, 0);  // dS_n/dbeta at beta_hat, negative

  std::vector<double> s_star(static_cast<std::size_t>(B));
  parallel_for(static_cast<std::size_t>(B), threads, [&](std::size_t b) {
    RngStream stream = rng.child(b + 1);
    std::vector<int> w_star(static_cast<std::size_t>(n));
    Eigen::VectorXd theta_star;
    bool ok = false;
    for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
      int n1 = 0;
      for (int i = 0; i < n; ++i) {
        w_star[static_cast<std::size_t>(i)] = stream.bernoulli(ps.scores[static_cast<std::size_t>(i)]);
        n1 += w_star[static_cast<std::size_t>(i)];
      }
      if (n1 == 0 || n1 == n) continue;
      try {
        theta_star = fit_logistic_design(g, w_star, ps.design).theta;
        ok = true;
      } catch (const std::exception&) {
        // refit failed (separation); redraw the treatments
      }
    }
    if (!ok) {
      throw std::runtime_error("double_resampling: replicate failed after 10 redraws");
    }

    const Eigen::VectorXd eta = g * theta_star;
    std::vector<double> mu0(static_cast<std::size_t>(n)), mu1(static_cast<std::size_t>(n)),
        e_star(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const double e = logistic(eta[i]);
      e_star[static_cast<std::size_t>(i)] = e;
      mu0[static_cast<std::size_t>(i)] = prep.mu_table[0](e);
      mu1[static_cast<std::size_t>(i)] = prep.mu_table[1](e);
    }

    // residuals re-evaluated at theta_star; H values stay fixed
    double center = 0;
    std::vector<double> r_star(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const std::size_t is = static_cast<std::size_t>(i);
      const int j0 = prep.sec0[is];
      const int j1 = prep.sec1[is];
      const double r2_0 = prep.h[static_cast<std::size_t>(j0)] - mu0[static_cast<std::size_t>(j0)];
      const double r2_1 = prep.h[static_cast<std::size_t>(j1)] - mu1[static_cast<std::size_t>(j1)];
      const double r1 = mu0[is] + mu1[is];
      const double w0 = 1.0 + prep.kimp.k0[is];
      const double w1 = 1.0 + prep.kimp.k1[is];
      r_star[is] = r1 + (w_star[is] == 1 ? w1 * r2_1 : w0 * r2_0);
      center += r1 + e_star[is] * w1 * r2_1 + (1.0 - e_star[is]) * w0 * r2_0;
    }
    center /= static_cast<double>(n);

    double s = 0;
    for (int i = 0; i < n; ++i) {
      s += (r_star[static_cast<std::size_t>(i)] - center) * two_point_multiplier(stream);
    }
    s_star[b] = s;
  });

  std::vector<double> sorted = s_star;
  std::sort(sorted.begin(), sorted.end());
  const double q_lo = percentile(sorted, alpha / 2.0);
  const double q_hi = percentile(sorted, 1.0 - alpha / 2.0);

  CiEntry out;
  const double beta_hat = fit.beta[0];
  // S_n(beta_0) ~ dS/dbeta * (beta_0 - beta_hat); the negative derivative
  // flips the interval orientation
  out.ci_low = beta_hat + q_hi / score_deriv;
  out.ci_high = beta_hat + q_lo / score_deriv;
  if (out.ci_low > out.ci_high) std::swap(out.ci_low, out.ci_high);
  out.variance = sample_variance(s_star) / (score_deriv * score_deriv);
  return out;
}

}  // namespace

CiEntry double_resampling(const Dataset& ds, const MatchResult& mr, const CoxFit& fit,
                          const PropensityFit& ps, int B, double alpha, RngStream rng,
                          int threads) {
  const std::vector<double> h = h_residuals(ds, mr, fit);
  const ConditionalMoments cm(h, ps.scores, ds.treatments());
  RngStream prep_rng = rng.child(0);
  const ResamplingPrep prep = make_resampling_prep(ds, mr, ps, h, cm, prep_rng);
  return double_resampling_impl(ds, fit, ps, prep, B, alpha, rng, threads);
}

CiEntry double_resampling(const Dataset& ds, const CoxFit& fit, const PropensityFit& ps,
                          const ResamplingPrep& prep, int B, double alpha, RngStream rng,
                          int threads) {
  return double_resampling_impl(ds, fit, ps, prep, B, alpha, rng, threads);
}

CiEntry naive_bootstrap(const Dataset& ds, const DesignSpec& design, int B, double alpha,
                        RngStream rng, int threads) {
  if (B < 200) throw std::invalid_argument("naive_bootstrap: B must be >= 200");
  if (!(alpha > 0 && alpha <= 0.5)) throw std::invalid_argument("naive_bootstrap: bad alpha");
  const int n = ds.size();

  std::vector<double> beta_star(static_cast<std::size_t>(B));
  parallel_for(static_cast<std::size_t>(B), threads, [&](std::size_t b) {
    RngStream stream = rng.child(b + 1);
    bool ok = false;
    for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
      std::vector<Subject> sample;
      sample.reserve(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        sample.push_back(ds[static_cast<int>(stream.uniform_index(static_cast<std::uint64_t>(n)))]);
      }
      try {
        const Dataset boot(std::move(sample));
        const PropensityFit ps = fit_logistic(boot, design);
        const MatchResult mr = match_on_scalar(ps.scores, boot.treatments());
        const CoxFit fit = solve_beta(boot, column_matrix(boot.treatments()), mr.weight);
        beta_star[b] = fit.beta[0];
        ok = true;
      } catch (const std::exception&) {
        // degenerate resample (one arm, separation, no events): redraw
      }
    }
    if (!ok) throw std::runtime_error("naive_bootstrap: replicate failed after 10 redraws");
  });

  std::vector<double> sorted = beta_star;
  std::sort(sorted.begin(), sorted.end());
  CiEntry out;
  out.ci_low = percentile(sorted, alpha / 2.0);
  out.ci_high = percentile(sorted, 1.0 - alpha / 2.0);
  out.variance = sample_variance(beta_star);
  return out;
}

namespace {

EstimatorResult wald_result(double beta, double variance, double alpha) {
  EstimatorResult r;
  r.beta = beta;
  r.hr = std::exp(beta);
  r.variance = variance;
  const double z = normal_quantile(1.0 - alpha / 2.0);
  const double half = z * std::sqrt(variance);
  r.ci_low = beta - half;
  r.ci_high = beta + half;
  return r;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

InferenceReport estimate_all(const Dataset& ds, const EstimateConfig& cfg) {
  if (!(cfg.alpha > 0 && cfg.alpha <= 0.5)) {
    throw std::invalid_argument("estimate_all: alpha must be in (0, 0.5]");
  }
  for (const std::string& est : cfg.estimators) {
    if (est != "naive" && est != "ipw" && est != "regression" && est != "psm" &&
        est != "psm_true_score") {
      throw std::invalid_argument("estimate_all: unknown estimator '" + est + "'");
    }
  }
  for (const std::string& m : cfg.methods) {
    if (m != "software_robust" && m != "asymptotic" && m != "naive_boot" &&
        m != "double_resampling") {
      throw std::invalid_argument("estimate_all: unknown variance method '" + m + "'");
    }
  }

  InferenceReport report;
  report.alpha = cfg.alpha;
  report.seed = cfg.seed;
  report.B = cfg.B;
  report.n = ds.size();
  for (int i = 0; i < ds.size(); ++i) report.n_events += ds[i].delta;

  const std::vector<int> w = ds.treatments();
  const Eigen::MatrixXd zw = column_matrix(w);
  const std::vector<double> ones(static_cast<std::size_t>(ds.size()), 1.0);
  RngStream master(cfg.seed);

  const bool needs_ps = contains(cfg.estimators, "psm") || contains(cfg.estimators, "ipw");
  std::optional<PropensityFit> ps;
  if (needs_ps) ps = fit_logistic(ds, cfg.ps_design);

  if (contains(cfg.estimators, "naive")) {
    const CoxFit fit = solve_beta(ds, zw, ones);
    const double var = robust_variance(ds, zw, ones, fit)(0, 0);
    report.estimators["naive"] = wald_result(fit.beta[0], var, cfg.alpha);
  }
  if (contains(cfg.estimators, "ipw")) {
    const std::vector<double> weights = ipw_weights(*ps, w);
    const CoxFit fit = solve_beta(ds, zw, weights);
    const double var = robust_variance(ds, zw, weights, fit)(0, 0);
    report.estimators["ipw"] = wald_result(fit.beta[0], var, cfg.alpha);
  }
  if (contains(cfg.estimators, "regression")) {
    Eigen::MatrixXd z(ds.size(), 1 + ds.dim());
    for (int i = 0; i < ds.size(); ++i) {
      z(i, 0) = w[static_cast<std::size_t>(i)];
      for (int j = 0; j < ds.dim(); ++j) z(i, j + 1) = ds[i].x[static_cast<std::size_t>(j)];
    }
    const CoxFit fit = solve_beta(ds, z, ones);
    const double var = robust_variance(ds, z, ones, fit)(0, 0);
    report.estimators["regression"] = wald_result(fit.beta[0], var, cfg.alpha);
  }
  if (contains(cfg.estimators, "psm_true_score")) {
    if (cfg.true_scores.size() != static_cast<std::size_t>(ds.size())) {
      throw std::invalid_argument("estimate_all: psm_true_score requires aligned true_scores");
    }
    const MatchResult mr = match_on_scalar(cfg.true_scores, w);
    const CoxFit fit = solve_beta(ds, zw, mr.weight);
    const double var = robust_variance(ds, zw, mr.weight, fit)(0, 0);
    report.estimators["psm_true_score"] = wald_result(fit.beta[0], var, cfg.alpha);
  }

  if (contains(cfg.estimators, "psm")) {
    const MatchResult mr = match_on_scalar(ps->scores, w);
    const CoxFit fit = solve_beta(ds, zw, mr.weight);
    report.beta_hat = fit.beta[0];
    report.hr = std::exp(report.beta_hat);

    std::optional<std::vector<double>> h;
    std::optional<ConditionalMoments> cm;
    const auto ensure_residuals = [&] {
      if (!h) {
        h = h_residuals(ds, mr, fit);
        cm.emplace(*h, ps->scores, w);
      }
    };

    for (const std::string& method : cfg.methods) {
      if (method == "software_robust") {
        const double var = robust_variance(ds, zw, mr.weight, fit)(0, 0);
        const EstimatorResult r = wald_result(fit.beta[0], var, cfg.alpha);
        report.methods["software_robust"] = {r.variance, r.ci_low, r.ci_high};
      } else if (method == "asymptotic") {
        ensure_residuals();
        const AsymptoticComponents ac = asymptotic_variance_impl(ds, fit, *ps, *h, *cm);
        const double var = ac.V2_hat / static_cast<double>(ds.size());
        const EstimatorResult r = wald_result(fit.beta[0], var, cfg.alpha);
        report.methods["asymptotic"] = {r.variance, r.ci_low, r.ci_high};
      } else if (method == "naive_boot") {
        report.methods["naive_boot"] =
            naive_bootstrap(ds, cfg.ps_design, cfg.B, cfg.alpha, master.child(2), cfg.threads);
      } else if (method == "double_resampling") {
        ensure_residuals();
        RngStream dr = master.child(1);
        RngStream prep_rng = dr.child(0);
        const ResamplingPrep prep = make_resampling_prep(ds, mr, *ps, *h, *cm, prep_rng);
        report.methods["double_resampling"] =
            double_resampling_impl(ds, fit, *ps, prep, cfg.B, cfg.alpha, dr, cfg.threads);
      }
    }
  } else if (!report.estimators.empty()) {
    // no matching estimator requested: report the first requested one
    for (const std::string& est : cfg.estimators) {
      const auto it = report.estimators.find(est);
      if (it != report.estimators.end()) {
        report.beta_hat = it->second.beta;
        report.hr = it->second.hr;
        report.methods["software_robust"] = {it->second.variance, it->second.ci_low,
                                             it->second.ci_high};
        break;
      }
    }
  }
  return report;
}

std::string report_to_json(const InferenceReport& report) {
  nlohmann::json j;
  j["beta_hat"] = report.beta_hat;
  j["hr"] = report.hr;
  j["alpha"] = report.alpha;
  j["seed"] = report.seed;
  j["B"] = report.B;
  j["n"] = report.n;
  j["n_events"] = report.n_events;
  nlohmann::json methods = nlohmann::json::object();
  for (const auto& [name, m] : report.methods) {
    methods[name] = {{"variance", m.variance}, {"ci_low", m.ci_low}, {"ci_high", m.ci_high}};
  }
  j["methods"] = methods;
  nlohmann::json estimators = nlohmann::json::object();
  for (const auto& [name, e] : report.estimators) {
    estimators[name] = {{"beta", e.beta},
                        {"hr", e.hr},
                        {"variance", e.variance},
                        {"ci_low", e.ci_low},
                        {"ci_high", e.ci_high}};
  }
  j["estimators"] = estimators;
  return j.dump(2);
}

InferenceReport report_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  InferenceReport report;
  report.beta_hat = j.at("beta_hat").get<double>();
  report.hr = j.at("hr").get<double>();
  report.alpha = j.at("alpha").get<double>();
  report.seed = j.at("seed").get<std::uint64_t>();
  report.B = j.at("B").get<int>();
  report.n = j.value("n", 0);
  report.n_events = j.value("n_events", 0);
  for (const auto& [name, m] : j.at("methods").items()) {
    report.methods[name] = {m.at("variance").get<double>(), m.at("ci_low").get<double>(),
                            m.at("ci_high").get<double>()};
  }
  if (j.contains("estimators")) {
    for (const auto& [name, e] : j.at("estimators").items()) {
      report.estimators[name] = {e.at("beta").get<double>(), e.at("hr").get<double>(),
                                 e.at("variance").get<double>(), e.at("ci_low").get<double>(),
                                 e.at("ci_high").get<double>()};
    }
  }
  return report;
}

}  // namespace hazmatch
